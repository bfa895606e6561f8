#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evonav/gridworld.hpp"
#include "evonav/memory_graph.hpp"

namespace evonav {

struct CandidatePlan {
    std::vector<Action> actions;
    std::vector<std::string> reasoning;
    int index = 0;
    std::optional<Cell> target;  // cell the plan heads for, when the proposer knows it
    bool operator==(const CandidatePlan&) const = default;
};

struct SubtaskUnit {
    std::vector<Action> actions;
    std::string rationale;
    bool operator==(const SubtaskUnit&) const = default;
};

struct Rollout {
    std::vector<Observation> predicted_observations;
    int source_plan_index = 0;
    // Set when the imagined prefix ends in STOP/ANSWER.
    std::optional<Action> terminal_action;
    bool operator==(const Rollout&) const = default;
};

struct ScoredPlan {
    CandidatePlan plan;
    std::vector<SubtaskUnit> subtasks;
    Rollout rollout;
    double score = 0.0;
};

enum class Progress { Advancing, Stalled, Regressing };
std::string to_string(Progress p);
Progress parse_progress(const std::string& s);

inline const std::string kOscillation = "OSCILLATION";
inline const std::string kCollisionStreak = "COLLISION_STREAK";
inline const std::string kDoorFirst = "DOOR_FIRST";
inline const std::string kDirectApproach = "DIRECT_APPROACH";

struct ReflectionSummary {
    Progress progress_assessment = Progress::Stalled;
    std::vector<std::string> failure_patterns;
    std::string subgoal_context;
    std::vector<std::string> recommendations;
    std::pair<int, int> window_span{0, 0};
    bool operator==(const ReflectionSummary&) const = default;
};

enum class PrincipleKind { Guiding, Cautionary };
std::string to_string(PrincipleKind k);
PrincipleKind parse_principle_kind(const std::string& s);

using Embedding = std::vector<double>;

struct Principle {
    PrincipleKind kind = PrincipleKind::Guiding;
    std::string text;
    std::string source_episode;
    NodeId source_subtask;
    Embedding embedding;
    bool operator==(const Principle&) const = default;
};

struct Heuristic {
    std::string pattern_id;
    std::string description;
    std::string strategy;
    double confidence = 0.0;
    Outcome outcome_tag = Outcome::Success;
    std::string source_episode;
    bool operator==(const Heuristic&) const = default;
};

struct MergedHeuristic {
    std::string pattern_id;
    std::string description;
    std::string strategy;
    double confidence = 0.0;
    int support = 0;
    int success_count = 0;
    int failure_count = 0;
    std::vector<std::string> provenance;
    bool operator==(const MergedHeuristic&) const = default;
};

inline constexpr std::size_t kPrincipleCap = 3;
inline constexpr std::size_t kHeuristicCap = 4;

struct PlannerContext {
    GoalSpec goal;
    std::optional<ReflectionSummary> recent_reflection;
    std::vector<Principle> retrieved_principles;
    std::vector<MergedHeuristic> active_heuristics;
    int step = 0;

    // Agent-side state carried across cycles.
    KnownMap known;
    std::vector<Cell> target_history;    // frontier/goal cell chosen each cycle
    std::vector<Cell> excluded_targets;  // frontiers ruled out after oscillation

    bool has_heuristic(const std::string& pattern_id) const;
};

PlannerContext make_context(const GoalSpec& goal, int width, int height);

}  // namespace evonav
