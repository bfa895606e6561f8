#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "evonav/backends.hpp"
#include "evonav/error.hpp"

namespace evonav {

enum class Role { Planner, WorldModel, Evaluator, SrmAnalyzer, PrincipleAnalyzer, HeuristicExtractor, HeuristicMerger };
std::string to_string(Role r);
const std::vector<Role>& all_roles();

// A response that did not contain a usable structured block.
class RemoteResponseError : public ParseError {
public:
    RemoteResponseError(Role role, const std::string& what, std::size_t offset = 0)
        : ParseError(to_string(role) + ": " + what, offset), role_(role) {}
    Role role() const { return role_; }

private:
    Role role_;
};

struct HttpRequest {
    std::string url;
    std::map<std::string, std::string> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Throws on connection failure.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

class HttpTransport : public Transport {
public:
    explicit HttpTransport(std::chrono::milliseconds timeout = std::chrono::seconds(60)) : timeout_(timeout) {}
    HttpResponse post(const HttpRequest& request) override;

private:
    std::chrono::milliseconds timeout_;
};

// Replays canned responses in order and records what was sent.
class ScriptedTransport : public Transport {
public:
    struct Step {
        int status = 200;
        std::string body;
        bool connection_error = false;
    };
    void push(Step step) { script_.push_back(std::move(step)); }
    void push_ok(std::string body) { script_.push_back({200, std::move(body), false}); }
    HttpResponse post(const HttpRequest& request) override;
    const std::vector<HttpRequest>& sent() const { return sent_; }
    std::size_t remaining() const { return script_.size(); }

private:
    std::mutex mutex_;
    std::deque<Step> script_;
    std::vector<HttpRequest> sent_;
};

struct RemoteSettings {
    std::string base_url;  // e.g. http://localhost:8000
    std::string api_key;
    std::string model = "evonav-default";
    std::map<Role, std::string> role_urls;  // per-role override of base_url
    std::string prompt_dir = EVONAV_PROMPT_DIR;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    int max_in_flight = 4;

    // EVONAV_REMOTE_BASE_URL, EVONAV_REMOTE_API_KEY, EVONAV_REMOTE_MODEL, and
    // EVONAV_REMOTE_URL_<ROLE> (e.g. EVONAV_REMOTE_URL_PLANNER) for per-role endpoints.
    static RemoteSettings from_env();
};

struct TranscriptEntry {
    Role role = Role::Planner;
    int attempt = 0;
    std::string url;
    std::string request_body;
    int status = 0;
    std::string response_body;
    std::string error;
};

// Chat-completions client shared by the seven remote backends.
class RemoteClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RemoteClient(RemoteSettings settings, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

    // Request body for one role, exactly as sent.
    std::string request_body(Role role, const std::string& payload_json) const;

    // Sends the request and returns the JSON text of the fenced block in the reply.
    std::string call(Role role, const std::string& payload_json);

    std::vector<TranscriptEntry> transcript() const;
    void clear_transcript();
    // Appends every exchange as one JSON line to this file.
    void set_transcript_file(std::string path);

    const RemoteSettings& settings() const { return settings_; }

private:
    std::string render_prompt(Role role, const std::string& payload_json) const;
    void log(TranscriptEntry entry);

    RemoteSettings settings_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    mutable std::mutex mutex_;
    std::condition_variable slots_cv_;
    int in_flight_ = 0;
    std::vector<TranscriptEntry> transcript_;
    std::string transcript_file_;
};

// Extracts the body of the first ```json fenced block.
std::string extract_fenced_block(Role role, const std::string& content);

// JSON encodings of the request payloads, one per role.
std::string planner_payload(const Observation& obs, const GoalSpec& goal, const PlannerContext& context, int n,
                            int max_plan_length);
std::string world_model_payload(const Observation& obs, const std::vector<SubtaskUnit>& subtasks, int h,
                                std::uint64_t seed);
std::string evaluator_payload(const Rollout& rollout, const GoalSpec& goal, const KnownMap& known);
std::string srm_payload(const std::vector<SubtaskNode>& window, const GoalSpec& goal,
                        const std::vector<MergedHeuristic>& heuristics);
std::string principle_payload(const std::vector<SubtaskNode>& trajectory, Outcome outcome, const GoalSpec& goal);
std::string extractor_payload(const MemoryGraph& graph);
std::string merger_payload(const std::vector<Heuristic>& cluster);

class RemotePlanner : public PlannerBackend {
public:
    explicit RemotePlanner(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
    std::vector<CandidatePlan> propose(const Observation& obs, const GoalSpec& goal, const PlannerContext& context,
                                       int n, int max_plan_length) override;

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteWorldModel : public WorldModelBackend {
public:
    explicit RemoteWorldModel(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
    Rollout predict(const Observation& current, const std::vector<SubtaskUnit>& subtasks, int h,
                    std::uint64_t seed) override;

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteEvaluator : public EvaluatorBackend {
public:
    explicit RemoteEvaluator(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
    double score(const Rollout& rollout, const GoalSpec& goal, const KnownMap& known) override;

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteSrmAnalyzer : public SrmAnalyzerBackend {
public:
    explicit RemoteSrmAnalyzer(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
    ReflectionSummary analyze(const std::vector<SubtaskNode>& window, const GoalSpec& goal,
                              const std::vector<MergedHeuristic>& active_heuristics) override;

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemotePrincipleAnalyzer : public PrincipleAnalyzerBackend {
public:
    explicit RemotePrincipleAnalyzer(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
    std::string analyze(const std::vector<SubtaskNode>& trajectory, Outcome outcome, const GoalSpec& goal) override;

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteHeuristicExtractor : public HeuristicExtractorBackend {
public:
    explicit RemoteHeuristicExtractor(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
    std::vector<Heuristic> extract(const MemoryGraph& graph) override;

private:
    std::shared_ptr<RemoteClient> client_;
};

class RemoteHeuristicMerger : public HeuristicMergerBackend {
public:
    explicit RemoteHeuristicMerger(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
    std::pair<std::string, std::string> merge(const std::vector<Heuristic>& cluster) override;

private:
    std::shared_ptr<RemoteClient> client_;
};

BackendSet make_remote_backends(std::shared_ptr<RemoteClient> client);

}  // namespace evonav
