#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>

#include "evonav/error.hpp"
#include "evonav/planning.hpp"

using namespace evonav;

namespace {

GridMap open_room(int w, int h) {
    GridMap m(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.set({x, y}, (x == 0 || y == 0 || x == w - 1 || y == h - 1) ? Occupancy::Wall : Occupancy::Free);
    return m;
}

CandidatePlan plan_of(std::vector<Action> actions, std::vector<std::string> reasons, int index = 0) {
    CandidatePlan p;
    p.actions = std::move(actions);
    p.reasoning = std::move(reasons);
    p.index = index;
    return p;
}

ScoredPlan scored(int index, double score) {
    ScoredPlan s;
    s.plan.index = index;
    s.score = score;
    return s;
}

// Fewest motion actions that bring the agent onto `goal`, searching the full pose space.
int pose_bfs(const GridMap& m, Pose start, Cell goal) {
    std::map<Pose, int> dist{{start, 0}};
    std::deque<Pose> q{start};
    while (!q.empty()) {
        Pose p = q.front();
        q.pop_front();
        if (p.cell() == goal) return dist[p];
        for (const Action& a : {Action::forward(), Action::left(), Action::right()}) {
            Pose n = step(m, p, a).pose;
            if (dist.emplace(n, dist[p] + 1).second) q.push_back(n);
        }
    }
    return -1;
}

}  // namespace

TEST(Planning, DistributeSubtasks) {
    auto F = Action::forward(), L = Action::left();
    auto one = distribute_subtasks(plan_of({F, F, L, F}, {"approach door"}));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].actions.size(), 4u);

    auto each = distribute_subtasks(plan_of({F, L, F}, {"r1", "r2", "r3"}));
    ASSERT_EQ(each.size(), 3u);
    for (const auto& u : each) EXPECT_EQ(u.actions.size(), 1u);

    auto split = distribute_subtasks(plan_of({F, F, F, L, F}, {"r1", "r2"}));
    ASSERT_EQ(split.size(), 2u);
    EXPECT_EQ(split[0].actions.size(), 3u);
    EXPECT_EQ(split[1].actions.size(), 2u);

    EXPECT_THROW(distribute_subtasks(plan_of({F}, {})), ContractError);
}

TEST(Planning, DistributePartitionProperty) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Action> acts;
        int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) acts.push_back(rng() % 2 ? Action::forward() : Action::right());
        int r = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        std::vector<std::string> reasons;
        for (int i = 0; i < r; ++i) reasons.push_back("r" + std::to_string(i));
        auto units = distribute_subtasks(plan_of(acts, reasons));
        ASSERT_EQ(units.size(), static_cast<std::size_t>(r));
        std::vector<Action> joined;
        std::size_t lo = units[0].actions.size(), hi = lo;
        for (std::size_t i = 0; i < units.size(); ++i) {
            joined.insert(joined.end(), units[i].actions.begin(), units[i].actions.end());
            EXPECT_EQ(units[i].rationale, reasons[i]);
            if (i > 0) EXPECT_LE(units[i].actions.size(), units[i - 1].actions.size());
            lo = std::min(lo, units[i].actions.size());
            hi = std::max(hi, units[i].actions.size());
        }
        EXPECT_EQ(joined, acts);
        EXPECT_LE(hi - lo, 1u);
    }
}

TEST(Planning, ImagineTruncatesAndMatchesGroundTruth) {
    GridMap m = open_room(12, 12);
    OracleWorldModel wm(m, 0.0);
    Observation cur = observe(m, Pose{3, 8, 0}, 0);
    auto F = Action::forward(), R = Action::right();
    std::vector<SubtaskUnit> units{{{F, F, R}, "a"}, {{R, F, F}, "b"}};
    Rollout r = imagine(wm, cur, units, 4);
    ASSERT_EQ(r.predicted_observations.size(), 4u);
    EXPECT_EQ(imagine(wm, cur, {{{F, F}, "a"}}, 4).predicted_observations.size(), 2u);

    Pose p = cur.agent_pose;
    int k = 0;
    for (const auto& u : units)
        for (const auto& a : u.actions) {
            if (k == 4) break;
            p = step(m, p, a).pose;
            ++k;
            EXPECT_EQ(r.predicted_observations[k - 1], observe(m, p, k));
        }
    EXPECT_THROW(imagine(wm, cur, units, 0), ContractError);
}

TEST(Planning, VerifyPrefersCloserRollout) {
    GridMap m = open_room(14, 6);
    GoalSpec goal = make_ignav_goal(m, Pose{10, 3, 4});
    KnownMap known(m.width(), m.height());
    known.integrate(observe(m, Pose{5, 3, 4}, 0));
    OracleEvaluator ev(m);
    Rollout near, far;
    near.predicted_observations = {observe(m, Pose{8, 3, 4}, 1)};
    far.predicted_observations = {observe(m, Pose{5, 3, 4}, 1)};
    ASSERT_EQ(geodesic(m, {8, 3}, {10, 3}), 2);
    ASSERT_EQ(geodesic(m, {5, 3}, {10, 3}), 5);
    ASSERT_TRUE(localize_target(goal, known).has_value());
    EXPECT_GT(verify(ev, near, goal, known), verify(ev, far, goal, known));
    EXPECT_EQ(verify(ev, near, goal, known), verify(ev, near, goal, known));
    try {
        verify(ev, Rollout{}, goal, known);
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_STREQ(e.what(), "empty rollout");
    }
}

TEST(Planning, SelectArgmaxWithLowestIndexTie) {
    EXPECT_EQ(select({scored(0, 0.2), scored(1, 0.9), scored(2, 0.4)}).plan.index, 1);
    EXPECT_EQ(select({scored(0, 0.9), scored(1, 0.9)}).plan.index, 0);
    EXPECT_THROW(select({scored(0, std::nan("")), scored(1, 0.1)}), ContractError);
    EXPECT_THROW(select({}), ContractError);
}

TEST(Planning, SelectPermutationInvariant) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<ScoredPlan> plans;
        int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) plans.push_back(scored(i, static_cast<double>(rng() % 3)));
        double best = -1;
        int best_index = -1;
        for (const auto& p : plans)
            if (p.score > best) best = p.score, best_index = p.plan.index;
        std::shuffle(plans.begin(), plans.end(), rng);
        ScoredPlan w = select(plans);
        EXPECT_EQ(w.score, best);
        EXPECT_EQ(w.plan.index, best_index);
    }
}

TEST(Planning, LoopReachesVisibleGoalOptimally) {
    GridMap m = open_room(7, 7);
    Pose start{3, 5, 0};
    GoalSpec goal = make_ignav_goal(m, Pose{3, 2, 0});
    CortexConfig cfg;
    BackendSet b = make_oracle_backends(m, cfg);
    Environment env(m, goal, start);
    MemoryGraph graph = MemoryGraph::create("ep-0", TaskKind::IGNav, goal);
    PlannerContext ctx = make_context(goal, m.width(), m.height());
    LoopStepResult r;
    int cycles = 0;
    do {
        r = step_loop(env, b, graph, ctx, cfg);
        EXPECT_GE(r.subtasks_appended, 1);
        ASSERT_LT(++cycles, 20);
    } while (r.status == LoopStatus::Continue);
    EXPECT_EQ(r.status, LoopStatus::Terminated);
    EXPECT_EQ(env.actions_taken(), pose_bfs(m, start, goal.target));
    EXPECT_TRUE(evaluate_outcome(m, goal, env.terminal_action(), {env.pose(), false}).success);
    graph.check_invariants();
}

TEST(Planning, LoopIsDeterministic) {
    GridMap m = generate_map(123, 20, 20, 4, 6);
    auto cells = m.free_cells();
    GoalSpec goal = make_ignav_goal(m, Pose{cells.back().x, cells.back().y, 0});
    auto run = [&] {
        CortexConfig cfg;
        BackendSet b = make_oracle_backends(m, cfg);
        Environment env(m, goal, Pose{cells.front().x, cells.front().y, 4});
        MemoryGraph graph = MemoryGraph::create("ep-0", TaskKind::IGNav, goal);
        PlannerContext ctx = make_context(goal, m.width(), m.height());
        while (step_loop(env, b, graph, ctx, cfg).status == LoopStatus::Continue) {}
        return graph.serialize();
    };
    EXPECT_EQ(run(), run());
}

TEST(Planning, PlanLengthLimit) {
    CortexConfig cfg;
    EXPECT_EQ(plan_length_limit(cfg, {}), 4);
    LoopOptions open;
    open.open_loop = true;
    EXPECT_EQ(plan_length_limit(cfg, open), 12);
}
