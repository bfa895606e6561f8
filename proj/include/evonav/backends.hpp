#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "evonav/config.hpp"
#include "evonav/types.hpp"

namespace evonav {

class PlannerBackend {
public:
    virtual ~PlannerBackend() = default;
    // Exactly n plans, indices 0..n-1, each at most max_plan_length actions.
    virtual std::vector<CandidatePlan> propose(const Observation& obs, const GoalSpec& goal,
                                               const PlannerContext& context, int n, int max_plan_length) = 0;
};

class WorldModelBackend {
public:
    virtual ~WorldModelBackend() = default;
    virtual Rollout predict(const Observation& current, const std::vector<SubtaskUnit>& subtasks, int h,
                            std::uint64_t seed) = 0;
};

class EvaluatorBackend {
public:
    virtual ~EvaluatorBackend() = default;
    virtual double score(const Rollout& rollout, const GoalSpec& goal, const KnownMap& known) = 0;
};

class SrmAnalyzerBackend {
public:
    virtual ~SrmAnalyzerBackend() = default;
    virtual ReflectionSummary analyze(const std::vector<SubtaskNode>& window, const GoalSpec& goal,
                                      const std::vector<MergedHeuristic>& active_heuristics) = 0;
};

class PrincipleAnalyzerBackend {
public:
    virtual ~PrincipleAnalyzerBackend() = default;
    virtual std::string analyze(const std::vector<SubtaskNode>& trajectory, Outcome outcome, const GoalSpec& goal) = 0;
};

class HeuristicExtractorBackend {
public:
    virtual ~HeuristicExtractorBackend() = default;
    virtual std::vector<Heuristic> extract(const MemoryGraph& graph) = 0;
};

class HeuristicMergerBackend {
public:
    virtual ~HeuristicMergerBackend() = default;
    // Generalized (description, strategy) for a cluster sharing one pattern id.
    virtual std::pair<std::string, std::string> merge(const std::vector<Heuristic>& cluster) = 0;
};

struct BackendSet {
    std::shared_ptr<PlannerBackend> planner;
    std::shared_ptr<WorldModelBackend> world_model;
    std::shared_ptr<EvaluatorBackend> evaluator;
    std::shared_ptr<SrmAnalyzerBackend> srm_analyzer;
    std::shared_ptr<PrincipleAnalyzerBackend> principle_analyzer;
    std::shared_ptr<HeuristicExtractorBackend> extractor;
    std::shared_ptr<HeuristicMergerBackend> merger;
};

// ---------------------------------------------------------------- oracle family

class OraclePlanner : public PlannerBackend {
public:
    std::vector<CandidatePlan> propose(const Observation& obs, const GoalSpec& goal, const PlannerContext& context,
                                       int n, int max_plan_length) override;
};

class OracleWorldModel : public WorldModelBackend {
public:
    OracleWorldModel(const GridMap& map, double noise);
    Rollout predict(const Observation& current, const std::vector<SubtaskUnit>& subtasks, int h,
                    std::uint64_t seed) override;

private:
    const GridMap* map_;
    double noise_;
};

class OracleEvaluator : public EvaluatorBackend {
public:
    explicit OracleEvaluator(const GridMap& map);
    double score(const Rollout& rollout, const GoalSpec& goal, const KnownMap& known) override;

private:
    const GridMap* map_;
};

class OracleSrmAnalyzer : public SrmAnalyzerBackend {
public:
    explicit OracleSrmAnalyzer(const GridMap& map);
    ReflectionSummary analyze(const std::vector<SubtaskNode>& window, const GoalSpec& goal,
                              const std::vector<MergedHeuristic>& active_heuristics) override;

private:
    const GridMap* map_;
};

class OraclePrincipleAnalyzer : public PrincipleAnalyzerBackend {
public:
    explicit OraclePrincipleAnalyzer(const GridMap* map = nullptr);
    std::string analyze(const std::vector<SubtaskNode>& trajectory, Outcome outcome, const GoalSpec& goal) override;

private:
    const GridMap* map_;
};

class OracleHeuristicExtractor : public HeuristicExtractorBackend {
public:
    explicit OracleHeuristicExtractor(const GridMap& map);
    std::vector<Heuristic> extract(const MemoryGraph& graph) override;

private:
    const GridMap* map_;
};

class OracleHeuristicMerger : public HeuristicMergerBackend {
public:
    std::pair<std::string, std::string> merge(const std::vector<Heuristic>& cluster) override;
};

// The map must outlive the returned set.
BackendSet make_oracle_backends(const GridMap& map, const CortexConfig& config);

// Detector helpers shared by the oracle analyzer and extractor.
struct OscillationEvidence {
    bool detected = false;
    int strength = 0;  // highest revisit count of one cell
    Cell cell;
};
OscillationEvidence detect_oscillation(const std::vector<Pose>& trace);
// Longest run of FORWARD actions that did not change the cell.
int longest_collision_streak(const std::vector<SubtaskNode>& subtasks);
int collision_count(const std::vector<SubtaskNode>& subtasks);

// Frontier "moving <direction>" vocabulary shared by principle text and the planner.
std::optional<int> principle_direction(const std::string& text);

}  // namespace evonav
