#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "evonav/remote.hpp"
#include "evonav/text.hpp"

namespace evonav {

using nlohmann::json;

std::string to_string(Role r) {
    switch (r) {
        case Role::Planner: return "planner";
        case Role::WorldModel: return "world_model";
        case Role::Evaluator: return "evaluator";
        case Role::SrmAnalyzer: return "srm_analyzer";
        case Role::PrincipleAnalyzer: return "principle_analyzer";
        case Role::HeuristicExtractor: return "heuristic_extractor";
        case Role::HeuristicMerger: return "heuristic_merger";
    }
    return "planner";
}

const std::vector<Role>& all_roles() {
    static const std::vector<Role> roles = {Role::Planner,           Role::WorldModel,         Role::Evaluator,
                                            Role::SrmAnalyzer,       Role::PrincipleAnalyzer,  Role::HeuristicExtractor,
                                            Role::HeuristicMerger};
    return roles;
}

// ---------------------------------------------------------------- transports

HttpResponse HttpTransport::post(const HttpRequest& request) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(request.url, m, url_re)) throw Error("bad endpoint url '" + request.url + "'");
    httplib::Client client(m[1].str());
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_).count();
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") content_type = v;
        else headers.emplace(k, v);
    }
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Post(path, headers, request.body, content_type);
    if (!res) throw Error("connection failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

HttpResponse ScriptedTransport::post(const HttpRequest& request) {
    std::lock_guard lock(mutex_);
    sent_.push_back(request);
    if (script_.empty()) throw Error("scripted transport exhausted");
    Step s = std::move(script_.front());
    script_.pop_front();
    if (s.connection_error) throw Error("scripted connection failure");
    return {s.status, std::move(s.body)};
}

// ---------------------------------------------------------------- client

RemoteSettings RemoteSettings::from_env() {
    RemoteSettings s;
    auto get = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? v : "";
    };
    s.base_url = get("EVONAV_REMOTE_BASE_URL");
    s.api_key = get("EVONAV_REMOTE_API_KEY");
    if (auto m = get("EVONAV_REMOTE_MODEL"); !m.empty()) s.model = m;
    for (Role r : all_roles()) {
        std::string name = "EVONAV_REMOTE_URL_" + to_string(r);
        for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (auto u = get(name.c_str()); !u.empty()) s.role_urls[r] = u;
    }
    return s;
}

RemoteClient::RemoteClient(RemoteSettings settings, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : settings_(std::move(settings)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
    if (!transport_) throw ContractError("remote client needs a transport");
    if (settings_.max_attempts < 1) throw ContractError("max_attempts must be >= 1");
    if (settings_.max_in_flight < 1) throw ContractError("max_in_flight must be >= 1");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string RemoteClient::render_prompt(Role role, const std::string& payload_json) const {
    const std::string path = settings_.prompt_dir + "/" + to_string(role) + ".txt";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("missing prompt template " + path);
    std::ostringstream s;
    s << in.rdbuf();
    std::string tpl = s.str();
    const std::string marker = "{{payload}}";
    const auto pos = tpl.find(marker);
    if (pos == std::string::npos) throw Error("prompt template " + path + " lacks {{payload}}");
    tpl.replace(pos, marker.size(), payload_json);
    return tpl;
}

std::string RemoteClient::request_body(Role role, const std::string& payload_json) const {
    const std::string rendered = render_prompt(role, payload_json);
    const std::string sep = "\n---\n";
    const auto cut = rendered.find(sep);
    if (cut == std::string::npos) throw Error("prompt template for " + to_string(role) + " lacks a --- separator");
    json body;
    body["model"] = settings_.model;
    body["temperature"] = 0;
    body["messages"] = json::array({json{{"role", "system"}, {"content", rendered.substr(0, cut)}},
                                    json{{"role", "user"}, {"content", rendered.substr(cut + sep.size())}}});
    return body.dump();
}

std::string extract_fenced_block(Role role, const std::string& content) {
    const std::string open = "```json";
    const auto start = content.find(open);
    if (start == std::string::npos) throw RemoteResponseError(role, "response has no fenced json block");
    const auto body_start = content.find('\n', start);
    if (body_start == std::string::npos) throw RemoteResponseError(role, "unterminated fenced block", start);
    const auto end = content.find("```", body_start);
    if (end == std::string::npos) throw RemoteResponseError(role, "unterminated fenced block", start);
    const std::string block = content.substr(body_start + 1, end - body_start - 1);
    if (!json::accept(block)) throw RemoteResponseError(role, "fenced block is not valid JSON", body_start + 1);
    return block;
}

void RemoteClient::log(TranscriptEntry entry) {
    std::lock_guard lock(mutex_);
    if (!transcript_file_.empty()) {
        json j{{"role", to_string(entry.role)}, {"attempt", entry.attempt},       {"url", entry.url},
               {"request", entry.request_body}, {"status", entry.status},        {"response", entry.response_body},
               {"error", entry.error}};
        std::ofstream(transcript_file_, std::ios::app) << j.dump() << "\n";
    }
    transcript_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> RemoteClient::transcript() const {
    std::lock_guard lock(mutex_);
    return transcript_;
}

void RemoteClient::clear_transcript() {
    std::lock_guard lock(mutex_);
    transcript_.clear();
}

void RemoteClient::set_transcript_file(std::string path) {
    std::lock_guard lock(mutex_);
    transcript_file_ = std::move(path);
}

std::string RemoteClient::call(Role role, const std::string& payload_json) {
    const std::string name = to_string(role);
    const auto it = settings_.role_urls.find(role);
    const std::string base = it != settings_.role_urls.end() ? it->second : settings_.base_url;
    if (base.empty()) throw BackendError(name + ": no endpoint configured (set EVONAV_REMOTE_BASE_URL)");
    HttpRequest req;
    req.url = base + "/chat/completions";
    req.headers["Content-Type"] = "application/json";
    if (!settings_.api_key.empty()) req.headers["Authorization"] = "Bearer " + settings_.api_key;
    req.body = request_body(role, payload_json);

    {
        std::unique_lock lock(mutex_);
        slots_cv_.wait(lock, [&] { return in_flight_ < settings_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        RemoteClient* self;
        ~Release() {
            {
                std::lock_guard lock(self->mutex_);
                --self->in_flight_;
            }
            self->slots_cv_.notify_one();
        }
    } release{this};

    std::string last_error;
    for (int attempt = 1; attempt <= settings_.max_attempts; ++attempt) {
        TranscriptEntry entry{role, attempt, req.url, req.body, 0, {}, {}};
        HttpResponse res;
        try {
            res = transport_->post(req);
        } catch (const std::exception& e) {
            entry.error = e.what();
            log(entry);
            last_error = e.what();
            if (attempt < settings_.max_attempts) sleeper_(settings_.initial_backoff * (1 << (attempt - 1)));
            continue;
        }
        entry.status = res.status;
        entry.response_body = res.body;
        if (res.status == 401 || res.status == 403) {
            entry.error = "authentication failed";
            log(entry);
            throw BackendError(name + ": authentication failed (HTTP " + std::to_string(res.status) + ")");
        }
        if (res.status == 429 || res.status >= 500) {
            entry.error = "transient HTTP " + std::to_string(res.status);
            log(entry);
            last_error = entry.error;
            if (attempt < settings_.max_attempts) sleeper_(settings_.initial_backoff * (1 << (attempt - 1)));
            continue;
        }
        log(entry);
        if (res.status != 200) throw BackendError(name + ": HTTP " + std::to_string(res.status));
        json parsed = json::parse(res.body, nullptr, false);
        if (parsed.is_discarded()) throw RemoteResponseError(role, "response body is not JSON");
        const json* content = nullptr;
        if (parsed.contains("choices") && parsed["choices"].is_array() && !parsed["choices"].empty()) {
            const json& msg = parsed["choices"][0];
            if (msg.contains("message") && msg["message"].contains("content") && msg["message"]["content"].is_string())
                content = &msg["message"]["content"];
        }
        if (!content) throw RemoteResponseError(role, "response lacks choices[0].message.content");
        return extract_fenced_block(role, content->get<std::string>());
    }
    throw BackendError(name + ": request failed after " + std::to_string(settings_.max_attempts) +
                       " attempts: " + last_error);
}

// ---------------------------------------------------------------- payloads

namespace {

json pose_json(const Pose& p) { return json::array({p.x, p.y, p.heading}); }

json observation_json(const Observation& o) {
    json cells = json::array();
    for (const auto& [c, occ] : o.visible_cells) cells.push_back(json::array({c.x, c.y, occ == Occupancy::Wall ? 1 : 0}));
    json objects = json::array();
    for (const auto& v : o.visible_objects)
        objects.push_back(json{{"x", v.cell.x}, {"y", v.cell.y}, {"category", v.category}, {"color", v.color}});
    return json{{"digest", o.digest()}, {"pose", pose_json(o.agent_pose)}, {"step", o.step},
                {"cells", cells},      {"objects", objects}};
}

// What the agent is allowed to know about its goal.
json goal_json(const GoalSpec& g) {
    json j{{"task", to_string(g.kind)}, {"map_seed", g.map_seed}};
    switch (g.kind) {
        case TaskKind::IGNav:
            j["target"] = json::array({g.target.x, g.target.y});
            j["signature"] = g.signature;
            break;
        case TaskKind::AR: j["target"] = json::array({g.target.x, g.target.y}); break;
        case TaskKind::AEQA: j["question"] = g.question; break;
    }
    return j;
}

json actions_json(const std::vector<Action>& actions) {
    json a = json::array();
    for (const auto& x : actions) a.push_back(to_string(x));
    return a;
}

json subtask_json(const SubtaskNode& s) {
    json poses = json::array();
    for (const auto& p : s.pose_trace) poses.push_back(pose_json(p));
    return json{{"actions", actions_json(s.actions)},
                {"rationale", s.rationale},
                {"status", s.status == SubtaskStatus::Executed ? "EXECUTED" : "ABORTED"},
                {"pose_trace", poses},
                {"visible_objects", s.visible_objects}};
}

json merged_json(const MergedHeuristic& m) {
    return json{{"pattern_id", m.pattern_id}, {"description", m.description}, {"strategy", m.strategy},
                {"confidence", m.confidence}, {"support", m.support}};
}

json reflection_json(const std::optional<ReflectionSummary>& r) {
    if (!r) return nullptr;
    return json{{"progress", to_string(r->progress_assessment)},
                {"failure_patterns", r->failure_patterns},
                {"subgoal_context", r->subgoal_context},
                {"recommendations", r->recommendations},
                {"window_span", json::array({r->window_span.first, r->window_span.second})}};
}

}  // namespace

std::string planner_payload(const Observation& obs, const GoalSpec& goal, const PlannerContext& context, int n,
                            int max_plan_length) {
    json principles = json::array();
    for (const auto& p : context.retrieved_principles)
        principles.push_back(json{{"kind", to_string(p.kind)}, {"text", p.text}});
    json heuristics = json::array();
    for (const auto& h : context.active_heuristics) heuristics.push_back(merged_json(h));
    json frontier = json::array();
    for (const Cell c : context.known.frontier_cells()) frontier.push_back(json::array({c.x, c.y}));
    return json{{"observation", observation_json(obs)},
                {"goal", goal_json(goal)},
                {"reflection", reflection_json(context.recent_reflection)},
                {"principles", principles},
                {"heuristics", heuristics},
                {"frontier", frontier},
                {"step", context.step},
                {"n_candidates", n},
                {"max_plan_length", max_plan_length}}
        .dump();
}

std::string world_model_payload(const Observation& obs, const std::vector<SubtaskUnit>& subtasks, int h,
                                std::uint64_t seed) {
    json units = json::array();
    for (const auto& u : subtasks) units.push_back(json{{"actions", actions_json(u.actions)}, {"rationale", u.rationale}});
    return json{{"observation", observation_json(obs)}, {"subtasks", units}, {"horizon", h}, {"seed", seed}}.dump();
}

std::string evaluator_payload(const Rollout& rollout, const GoalSpec& goal, const KnownMap& known) {
    json frames = json::array();
    for (const auto& o : rollout.predicted_observations) frames.push_back(observation_json(o));
    return json{{"rollout", frames},
                {"terminal_action", rollout.terminal_action ? json(to_string(*rollout.terminal_action)) : json(nullptr)},
                {"goal", goal_json(goal)},
                {"known_cells", known.known_count()}}
        .dump();
}

std::string srm_payload(const std::vector<SubtaskNode>& window, const GoalSpec& goal,
                        const std::vector<MergedHeuristic>& heuristics) {
    json w = json::array();
    for (const auto& s : window) w.push_back(subtask_json(s));
    json hs = json::array();
    for (const auto& h : heuristics) hs.push_back(merged_json(h));
    return json{{"window", w}, {"goal", goal_json(goal)}, {"heuristics", hs}}.dump();
}

std::string principle_payload(const std::vector<SubtaskNode>& trajectory, Outcome outcome, const GoalSpec& goal) {
    json t = json::array();
    for (const auto& s : trajectory) t.push_back(subtask_json(s));
    return json{{"trajectory", t}, {"outcome", to_string(outcome)}, {"goal", goal_json(goal)}}.dump();
}

std::string extractor_payload(const MemoryGraph& graph) {
    json subs = json::array();
    for (NodeId id : graph.subtask_ids()) {
        json s = subtask_json(graph.subtask(id));
        s["step_index"] = graph.step_of(id);
        subs.push_back(s);
    }
    const auto& r = graph.root();
    return json{{"episode_id", r.episode_id},
                {"goal", goal_json(r.goal)},
                {"outcome", to_string(r.outcome)},
                {"total_steps", r.total_steps},
                {"subtasks", subs}}
        .dump();
}

std::string merger_payload(const std::vector<Heuristic>& cluster) {
    json c = json::array();
    for (const auto& h : cluster)
        c.push_back(json{{"pattern_id", h.pattern_id},
                         {"description", h.description},
                         {"strategy", h.strategy},
                         {"confidence", h.confidence},
                         {"outcome", to_string(h.outcome_tag)}});
    return json{{"cluster", c}}.dump();
}

// ---------------------------------------------------------------- backends

namespace {

template <typename F>
auto parse_as(Role role, const std::string& block, F&& f) {
    try {
        return f(json::parse(block));
    } catch (const RemoteResponseError&) {
        throw;
    } catch (const std::exception& e) {
        throw RemoteResponseError(role, std::string("schema violation: ") + e.what());
    }
}

Observation observation_from(const json& j, int fallback_step) {
    Observation o;
    const auto& p = j.at("pose");
    o.agent_pose = {p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()};
    o.step = j.value("step", fallback_step);
    if (j.contains("cells"))
        for (const auto& c : j["cells"])
            o.visible_cells.emplace_back(Cell{c.at(0).get<int>(), c.at(1).get<int>()},
                                         c.at(2).get<int>() ? Occupancy::Wall : Occupancy::Free);
    if (j.contains("objects"))
        for (const auto& v : j["objects"])
            o.visible_objects.push_back({{v.at("x").get<int>(), v.at("y").get<int>()},
                                         v.at("category").get<std::string>(),
                                         v.at("color").get<std::string>()});
    return o;
}

}  // namespace

std::vector<CandidatePlan> RemotePlanner::propose(const Observation& obs, const GoalSpec& goal,
                                                  const PlannerContext& context, int n, int max_plan_length) {
    const auto block = client_->call(Role::Planner, planner_payload(obs, goal, context, n, max_plan_length));
    return parse_as(Role::Planner, block, [&](const json& j) {
        std::vector<CandidatePlan> plans;
        for (const auto& p : j.at("plans")) {
            CandidatePlan c;
            for (const auto& a : p.at("actions")) c.actions.push_back(parse_action(a.get<std::string>()));
            for (const auto& r : p.at("reasoning")) c.reasoning.push_back(r.get<std::string>());
            if (c.actions.empty() || c.reasoning.empty())
                throw RemoteResponseError(Role::Planner, "plan with empty actions or reasoning");
            c.index = static_cast<int>(plans.size());
            plans.push_back(std::move(c));
        }
        if (plans.size() != static_cast<std::size_t>(n))
            throw RemoteResponseError(Role::Planner, "expected " + std::to_string(n) + " plans, got " +
                                                         std::to_string(plans.size()));
        return plans;
    });
}

Rollout RemoteWorldModel::predict(const Observation& current, const std::vector<SubtaskUnit>& subtasks, int h,
                                  std::uint64_t seed) {
    const auto block = client_->call(Role::WorldModel, world_model_payload(current, subtasks, h, seed));
    return parse_as(Role::WorldModel, block, [&](const json& j) {
        Rollout r;
        int k = 0;
        for (const auto& o : j.at("observations")) {
            if (k >= h) break;
            r.predicted_observations.push_back(observation_from(o, current.step + ++k));
        }
        if (j.contains("terminal_action") && j["terminal_action"].is_string())
            r.terminal_action = parse_action(j["terminal_action"].get<std::string>());
        if (r.predicted_observations.empty()) throw RemoteResponseError(Role::WorldModel, "empty rollout");
        return r;
    });
}

double RemoteEvaluator::score(const Rollout& rollout, const GoalSpec& goal, const KnownMap& known) {
    const auto block = client_->call(Role::Evaluator, evaluator_payload(rollout, goal, known));
    return parse_as(Role::Evaluator, block, [&](const json& j) {
        const double s = j.at("score").get<double>();
        if (!(s >= 0.0 && s <= 10.0)) throw RemoteResponseError(Role::Evaluator, "score outside [0,10]");
        return s;
    });
}

ReflectionSummary RemoteSrmAnalyzer::analyze(const std::vector<SubtaskNode>& window, const GoalSpec& goal,
                                             const std::vector<MergedHeuristic>& active_heuristics) {
    const auto block = client_->call(Role::SrmAnalyzer, srm_payload(window, goal, active_heuristics));
    return parse_as(Role::SrmAnalyzer, block, [&](const json& j) {
        ReflectionSummary s;
        s.progress_assessment = parse_progress(j.at("progress").get<std::string>());
        s.failure_patterns = j.at("failure_patterns").get<std::vector<std::string>>();
        s.subgoal_context = j.at("subgoal_context").get<std::string>();
        s.recommendations = j.at("recommendations").get<std::vector<std::string>>();
        return s;
    });
}

std::string RemotePrincipleAnalyzer::analyze(const std::vector<SubtaskNode>& trajectory, Outcome outcome,
                                             const GoalSpec& goal) {
    const auto block = client_->call(Role::PrincipleAnalyzer, principle_payload(trajectory, outcome, goal));
    return parse_as(Role::PrincipleAnalyzer, block, [&](const json& j) {
        auto t = j.at("principle").get<std::string>();
        if (t.empty()) throw RemoteResponseError(Role::PrincipleAnalyzer, "empty principle");
        return t;
    });
}

std::vector<Heuristic> RemoteHeuristicExtractor::extract(const MemoryGraph& graph) {
    const auto block = client_->call(Role::HeuristicExtractor, extractor_payload(graph));
    return parse_as(Role::HeuristicExtractor, block, [&](const json& j) {
        std::vector<Heuristic> out;
        for (const auto& h : j.at("heuristics")) {
            Heuristic x{h.at("pattern_id").get<std::string>(), h.at("description").get<std::string>(),
                        h.at("strategy").get<std::string>(),  h.at("confidence").get<double>(),
                        graph.root().outcome,                 graph.root().episode_id};
            if (x.pattern_id.empty() || !(x.confidence >= 0.0 && x.confidence <= 1.0))
                throw RemoteResponseError(Role::HeuristicExtractor, "heuristic fails its invariants");
            out.push_back(std::move(x));
        }
        return out;
    });
}

std::pair<std::string, std::string> RemoteHeuristicMerger::merge(const std::vector<Heuristic>& cluster) {
    const auto block = client_->call(Role::HeuristicMerger, merger_payload(cluster));
    return parse_as(Role::HeuristicMerger, block, [&](const json& j) {
        return std::make_pair(j.at("description").get<std::string>(), j.at("strategy").get<std::string>());
    });
}

BackendSet make_remote_backends(std::shared_ptr<RemoteClient> client) {
    BackendSet b;
    b.planner = std::make_shared<RemotePlanner>(client);
    b.world_model = std::make_shared<RemoteWorldModel>(client);
    b.evaluator = std::make_shared<RemoteEvaluator>(client);
    b.srm_analyzer = std::make_shared<RemoteSrmAnalyzer>(client);
    b.principle_analyzer = std::make_shared<RemotePrincipleAnalyzer>(client);
    b.extractor = std::make_shared<RemoteHeuristicExtractor>(client);
    b.merger = std::make_shared<RemoteHeuristicMerger>(client);
    return b;
}

}  // namespace evonav
