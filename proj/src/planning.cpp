#include "evonav/planning.hpp"

#include <cmath>
#include <future>

#include "evonav/error.hpp"
#include "evonav/rng.hpp"
#include "evonav/text.hpp"

namespace evonav {

std::vector<SubtaskUnit> distribute_subtasks(const CandidatePlan& plan) {
    if (plan.actions.empty()) throw ContractError("plan actions must be non-empty");
    if (plan.reasoning.empty()) throw ContractError("empty reasoning list");
    const std::size_t n_actions = plan.actions.size();
    const std::size_t n_reasons = plan.reasoning.size();
    std::vector<SubtaskUnit> units;
    if (n_reasons > n_actions) {
        for (std::size_t i = 0; i < n_actions; ++i) units.push_back({{plan.actions[i]}, plan.reasoning[i]});
        for (std::size_t i = n_actions; i < n_reasons; ++i) units.back().rationale += "; " + plan.reasoning[i];
        return units;
    }
    const std::size_t base = n_actions / n_reasons;
    const std::size_t extra = n_actions % n_reasons;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n_reasons; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        units.push_back({{plan.actions.begin() + static_cast<std::ptrdiff_t>(pos),
                          plan.actions.begin() + static_cast<std::ptrdiff_t>(pos + len)},
                         plan.reasoning[i]});
        pos += len;
    }
    return units;
}

Rollout imagine(WorldModelBackend& world_model, const Observation& current, const std::vector<SubtaskUnit>& subtasks,
                int h, int plan_index, std::uint64_t seed) {
    if (h < 1) throw ContractError("imagination horizon must be >= 1");
    std::size_t total = 0;
    for (const auto& u : subtasks) total += u.actions.size();
    Rollout r;
    try {
        r = world_model.predict(current, subtasks, h, seed);
    } catch (const BackendError&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(std::string("world model: ") + e.what(), plan_index);
    }
    r.source_plan_index = plan_index;
    if (r.predicted_observations.size() > std::min<std::size_t>(static_cast<std::size_t>(h), total))
        throw BackendError("world model returned a rollout longer than the horizon", plan_index);
    return r;
}

double verify(EvaluatorBackend& evaluator, const Rollout& rollout, const GoalSpec& goal, const KnownMap& known) {
    if (rollout.predicted_observations.empty()) throw ContractError("empty rollout");
    double s;
    try {
        s = evaluator.score(rollout, goal, known);
    } catch (const BackendError&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(std::string("evaluator: ") + e.what(), rollout.source_plan_index);
    }
    if (!std::isfinite(s)) throw BackendError("evaluator returned a non-finite score", rollout.source_plan_index);
    return s;
}

ScoredPlan select(const std::vector<ScoredPlan>& scored) {
    if (scored.empty()) throw ContractError("no scored plans");
    const ScoredPlan* best = nullptr;
    for (const auto& s : scored) {
        if (!std::isfinite(s.score)) throw ContractError("non-finite score for plan " + std::to_string(s.plan.index));
        if (!best || s.score > best->score || (s.score == best->score && s.plan.index < best->plan.index)) best = &s;
    }
    return *best;
}

std::string plan_digest(const CandidatePlan& plan) {
    std::string s;
    for (const auto& a : plan.actions) s += to_string(a) + ";";
    return text::hex64(text::fnv1a(s));
}

int plan_length_limit(const CortexConfig& config, const LoopOptions& options) {
    return options.open_loop ? 3 * config.imagination_horizon : config.imagination_horizon;
}

namespace {

std::vector<std::string> object_labels(const Observation& obs) {
    std::vector<std::string> out;
    for (const auto& v : obs.visible_objects) out.push_back(v.color + " " + v.category);
    return out;
}

}  // namespace

LoopStepResult step_loop(Environment& env, BackendSet& backends, MemoryGraph& graph, PlannerContext& context,
                         const CortexConfig& config, const LoopOptions& options) {
    if (env.done()) throw ContractError("episode already finished");
    LoopStepResult result;
    if (env.actions_taken() >= config.max_steps) {
        result.status = LoopStatus::BudgetExceeded;
        return result;
    }
    const Observation obs = env.observation();
    context.known.integrate(obs);
    const int limit = plan_length_limit(config, options);
    const int cycle = context.step;

    std::vector<ScoredPlan> scored;
    try {
        std::vector<CandidatePlan> plans;
        try {
            plans = backends.planner->propose(obs, context.goal, context, config.n_candidates, limit);
        } catch (const BackendError&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(std::string("planner: ") + e.what(), -1);
        }
        if (plans.size() != static_cast<std::size_t>(config.n_candidates))
            throw BackendError("planner returned " + std::to_string(plans.size()) + " plans", -1);

        auto evaluate = [&](std::size_t i) {
            CandidatePlan plan = plans[i];
            plan.index = static_cast<int>(i);
            if (plan.actions.empty()) throw BackendError("planner returned an empty plan", plan.index);
            if (plan.actions.size() > static_cast<std::size_t>(limit) + 1)
                throw BackendError("planner exceeded the plan length limit", plan.index);
            ScoredPlan sp;
            sp.subtasks = distribute_subtasks(plan);
            const std::uint64_t seed =
                mix_seed(mix_seed(config.seed, options.episode_seed), static_cast<std::uint64_t>(cycle) * 1024 + i);
            sp.rollout = imagine(*backends.world_model, obs, sp.subtasks, limit, plan.index, seed);
            sp.score = verify(*backends.evaluator, sp.rollout, context.goal, context.known);
            sp.plan = std::move(plan);
            return sp;
        };
        scored.resize(plans.size());
        if (options.concurrent && plans.size() > 1) {
            std::vector<std::future<ScoredPlan>> futures;
            for (std::size_t i = 0; i < plans.size(); ++i) futures.push_back(std::async(std::launch::async, evaluate, i));
            for (std::size_t i = 0; i < plans.size(); ++i) scored[i] = futures[i].get();
        } else {
            for (std::size_t i = 0; i < plans.size(); ++i) scored[i] = evaluate(i);
        }
    } catch (const BackendError& e) {
        env.mark_failed();
        result.status = LoopStatus::Failed;
        result.error = e.what();
        return result;
    }

    for (const auto& s : scored) result.scores.push_back(s.score);
    const ScoredPlan chosen = select(scored);
    result.selected_index = chosen.plan.index;
    const std::string digest = plan_digest(chosen.plan);

    bool stop = false;
    for (const auto& unit : chosen.subtasks) {
        if (stop) break;
        SubtaskNode node;
        node.rationale = unit.rationale;
        const Observation pre = env.observation();
        node.pre_observation = pre.digest();
        node.visible_objects = object_labels(pre);
        node.pose_trace.push_back(env.pose());
        for (const auto& a : unit.actions) {
            if (a.is_motion() && env.actions_taken() >= config.max_steps) {
                stop = true;
                break;
            }
            const StepResult r = env.apply(a);
            node.actions.push_back(a);
            node.pose_trace.push_back(env.pose());
            if (a.is_motion()) context.known.integrate(env.observation());
            if (env.done()) {
                stop = true;
                break;
            }
            if (r.collision) {
                result.collision = true;
                if (!options.open_loop) {
                    node.status = SubtaskStatus::Aborted;
                    stop = true;
                    break;
                }
            }
        }
        if (node.actions.empty()) break;
        node.post_observation = env.observation().digest();
        graph.append_subtask(cycle, std::move(node), digest, obs.digest());
        ++result.subtasks_appended;
    }

    context.target_history.push_back(chosen.plan.target ? *chosen.plan.target : env.pose().cell());
    context.step = cycle + 1;

    if (env.done()) {
        result.status = env.failed() ? LoopStatus::Failed : LoopStatus::Terminated;
    } else if (env.actions_taken() >= config.max_steps) {
        result.status = LoopStatus::BudgetExceeded;
    }
    return result;
}

}  // namespace evonav
