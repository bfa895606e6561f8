#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evonav/backends.hpp"
#include "evonav/config.hpp"
#include "evonav/memory_graph.hpp"
#include "evonav/types.hpp"

namespace evonav {

std::vector<SubtaskUnit> distribute_subtasks(const CandidatePlan& plan);

Rollout imagine(WorldModelBackend& world_model, const Observation& current, const std::vector<SubtaskUnit>& subtasks,
                int h, int plan_index = 0, std::uint64_t seed = 0);

double verify(EvaluatorBackend& evaluator, const Rollout& rollout, const GoalSpec& goal, const KnownMap& known);

// Argmax score; ties go to the lowest plan index.
ScoredPlan select(const std::vector<ScoredPlan>& scored);

std::string plan_digest(const CandidatePlan& plan);

enum class LoopStatus { Continue, Terminated, BudgetExceeded, Failed };

struct LoopStepResult {
    LoopStatus status = LoopStatus::Continue;
    int selected_index = -1;
    std::vector<double> scores;
    int subtasks_appended = 0;
    bool collision = false;
    std::string error;
};

struct LoopOptions {
    // Ablation: plans and imagination of length 3h, executed in full without aborting on collision.
    bool open_loop = false;
    std::uint64_t episode_seed = 0;
    // Run the N imagine+verify calls on separate threads.
    bool concurrent = false;
};

int plan_length_limit(const CortexConfig& config, const LoopOptions& options);

// One propose, distribute, imagine, verify, select, execute cycle.
LoopStepResult step_loop(Environment& env, BackendSet& backends, MemoryGraph& graph, PlannerContext& context,
                         const CortexConfig& config, const LoopOptions& options = {});

}  // namespace evonav
