#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <functional>
#include <random>

#include "evonav/error.hpp"
#include "evonav/gridworld.hpp"

using namespace evonav;

namespace {

bool flood_connected(const GridMap& m) {
    auto cells = m.free_cells();
    if (cells.empty()) return true;
    std::vector<char> seen(m.width() * m.height(), 0);
    std::vector<Cell> stack{cells.front()};
    seen[m.index(cells.front())] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
        Cell c = stack.back();
        stack.pop_back();
        ++reached;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                Cell n{c.x + dx, c.y + dy};
                if (m.is_free(n) && !seen[m.index(n)]) {
                    seen[m.index(n)] = 1;
                    stack.push_back(n);
                }
            }
    }
    return reached == cells.size();
}

// Iterative deepening with per-depth pruning on the best remaining budget seen at each cell.
std::optional<int> iddfs(const GridMap& m, Cell a, Cell b, int max_depth) {
    for (int limit = 0; limit <= max_depth; ++limit) {
        std::vector<int> best(m.width() * m.height(), -1);
        std::function<bool(Cell, int)> dls = [&](Cell c, int budget) {
            if (c == b) return true;
            if (budget == 0) return false;
            int& seen = best[m.index(c)];
            if (seen >= budget) return false;
            seen = budget;
            for (int dx = -1; dx <= 1; ++dx)
                for (int dy = -1; dy <= 1; ++dy) {
                    if (!dx && !dy) continue;
                    Cell n{c.x + dx, c.y + dy};
                    if (m.is_free(n) && dls(n, budget - 1)) return true;
                }
            return false;
        };
        if (dls(a, limit)) return limit;
    }
    return std::nullopt;
}

Cell heading_delta(int heading) {
    // snap down to the 45 degree sector, then project
    double sector = std::floor(heading * 22.5 / 45.0) * 45.0 * M_PI / 180.0;
    return {static_cast<int>(std::lround(std::sin(sector))), static_cast<int>(-std::lround(std::cos(sector)))};
}

GridMap open_room(int w, int h) {
    GridMap m(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.set({x, y}, (x == 0 || y == 0 || x == w - 1 || y == h - 1) ? Occupancy::Wall : Occupancy::Free);
    return m;
}

}  // namespace

TEST(Gridworld, GenerationIsDeterministicAndConnected) {
    EXPECT_EQ(generate_map(42, 20, 20, 4, 6), generate_map(42, 20, 20, 4, 6));
    EXPECT_TRUE(generate_map(3, 16, 16, 2, 0).objects().empty());
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        GridMap m = generate_map(seed, 20, 20, 4, 6);
        ASSERT_TRUE(flood_connected(m)) << "seed " << seed;
        EXPECT_TRUE(free_space_connected(m));
        for (int x = 0; x < m.width(); ++x) {
            EXPECT_FALSE(m.is_free({x, 0}));
            EXPECT_FALSE(m.is_free({x, m.height() - 1}));
        }
        for (const auto& [c, obj] : m.objects()) EXPECT_TRUE(m.is_free(c));
    }
    EXPECT_THROW(generate_map(1, 6, 6, 1, 0), ContractError);
    EXPECT_THROW(generate_map(1, 8, 8, 1, 500), ContractError);
}

TEST(Gridworld, StepFollowsHeadingProjection) {
    GridMap m = open_room(9, 9);
    for (int h = 0; h < kHeadings; ++h) {
        StepResult r = step(m, Pose{4, 4, h}, Action::forward());
        Cell d = heading_delta(h);
        EXPECT_EQ(r.pose, (Pose{4 + d.x, 4 + d.y, h})) << "heading " << h;
        EXPECT_FALSE(r.collision);
    }
    EXPECT_EQ(step(m, Pose{4, 4, 0}, Action::forward()).pose, (Pose{4, 3, 0}));
    StepResult blocked = step(m, Pose{1, 1, 0}, Action::forward());
    EXPECT_TRUE(blocked.collision);
    EXPECT_EQ(blocked.pose, (Pose{1, 1, 0}));

    Pose p{4, 4, 5};
    for (int i = 0; i < 16; ++i) {
        StepResult r = step(m, p, Action::left());
        EXPECT_FALSE(r.collision);
        EXPECT_EQ(r.pose.cell(), p.cell());
        p = r.pose;
    }
    EXPECT_EQ(p, (Pose{4, 4, 5}));
}

TEST(Gridworld, GeodesicMatchesIterativeDeepening) {
    std::mt19937_64 rng(17);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GridMap m = generate_map(seed, 10, 10, 1, 0);
        auto cells = m.free_cells();
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        for (int i = 0; i < 10; ++i) {
            Cell a = cells[pick(rng)], b = cells[pick(rng)];
            ASSERT_EQ(geodesic(m, a, b), iddfs(m, a, b, 100));
        }
    }
    GridMap m = open_room(8, 8);
    EXPECT_EQ(geodesic(m, {2, 2}, {2, 2}), 0);
    EXPECT_EQ(geodesic(m, {2, 2}, {3, 3}), 1);
    EXPECT_THROW(geodesic(m, {0, 0}, {2, 2}), ContractError);
}

TEST(Gridworld, GeodesicIsAMetric) {
    std::mt19937_64 rng(23);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        GridMap m = generate_map(seed, 20, 20, 4, 0);
        auto cells = m.free_cells();
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        for (int i = 0; i < 20; ++i) {
            Cell a = cells[pick(rng)], b = cells[pick(rng)], c = cells[pick(rng)];
            int ab = *geodesic(m, a, b), ba = *geodesic(m, b, a);
            EXPECT_EQ(ab, ba);
            EXPECT_LE(*geodesic(m, a, c), ab + *geodesic(m, b, c));
        }
    }
}

TEST(Gridworld, IgnavSuccessRadius) {
    GridMap m = open_room(16, 8);
    GoalSpec g = make_ignav_goal(m, Pose{2, 3, 4});
    auto at = [&](int x) { return evaluate_outcome(m, g, Action::stop(), TerminalState{Pose{x, 3, 0}, false}); };
    EXPECT_TRUE(at(5).success);   // 3 cells
    EXPECT_TRUE(at(7).success);   // 5 cells
    EXPECT_FALSE(at(8).success);  // 6 cells
    EXPECT_FALSE(evaluate_outcome(m, g, std::nullopt, TerminalState{Pose{2, 3, 4}, true}).success);
    EXPECT_THROW(evaluate_outcome(m, g, Action::answer("chair"), TerminalState{Pose{2, 3, 4}, false}), ContractError);
}

TEST(Gridworld, ArAndAeqaAnswers) {
    GridMap m = open_room(10, 10);
    m.objects()[{4, 4}] = ObjectInfo{"chair", "blue"};
    m.objects()[{6, 6}] = ObjectInfo{"table", "red"};
    GoalSpec ar = make_ar_goal(m, {4, 4});
    TerminalState s{Pose{3, 4, 4}, false};
    EXPECT_TRUE(evaluate_outcome(m, ar, Action::answer("Chair"), s).success);
    EXPECT_FALSE(evaluate_outcome(m, ar, Action::answer("table"), s).success);
    EXPECT_THROW(evaluate_outcome(m, ar, Action::stop(), s), ContractError);

    GoalSpec qa = make_aeqa_goal(m, {4, 4});
    EXPECT_DOUBLE_EQ(evaluate_outcome(m, qa, Action::answer("blue chair"), s).answer_score, 100.0);
    EXPECT_DOUBLE_EQ(evaluate_outcome(m, qa, Action::answer("red chair"), s).answer_score, 50.0);
    EXPECT_DOUBLE_EQ(evaluate_outcome(m, qa, Action::answer("red table"), s).answer_score, 0.0);
}

TEST(Gridworld, MetricsFormula) {
    auto rec = [](bool ok, int shortest, int path) {
        EpisodeRecord r;
        r.success = ok;
        r.shortest_length = shortest;
        r.path_length = path;
        r.actions = path;
        return r;
    };
    EXPECT_DOUBLE_EQ(compute_metrics({rec(true, 4, 4)}).spl, 1.0);
    EXPECT_DOUBLE_EQ(compute_metrics({rec(false, 4, 4)}).spl, 0.0);
    EXPECT_DOUBLE_EQ(compute_metrics({rec(true, 4, 8)}).spl, 0.5);
    Metrics m = compute_metrics({rec(true, 4, 8), rec(false, 3, 9), rec(true, 2, 2)});
    EXPECT_NEAR(m.sr, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(m.spl, 0.5, 1e-12);
    EXPECT_NEAR(m.mean_traj, 19.0 / 3.0, 1e-12);
    EXPECT_FALSE(m.answer_score.has_value());
    EXPECT_THROW(compute_metrics({}), ContractError);
}

TEST(Gridworld, DeterministicReplayAndMotionBounds) {
    std::mt19937_64 rng(5);
    GridMap m = generate_map(9, 20, 20, 4, 6);
    Pose start{m.free_cells().front().x, m.free_cells().front().y, 0};
    std::vector<Action> acts;
    for (int i = 0; i < 200; ++i) {
        int k = static_cast<int>(rng() % 3);
        acts.push_back(k == 0 ? Action::forward() : k == 1 ? Action::left() : Action::right());
    }
    auto run = [&] {
        Pose p = start;
        for (const auto& a : acts) {
            Pose q = step(m, p, a).pose;
            EXPECT_LE(std::abs(q.x - p.x), 1);
            EXPECT_LE(std::abs(q.y - p.y), 1);
            if (a.kind != ActionKind::Forward) EXPECT_EQ(q.cell(), p.cell());
            EXPECT_TRUE(m.is_free(q.cell()));
            p = q;
        }
        return p;
    };
    EXPECT_EQ(run(), run());
}

TEST(Gridworld, MapTextRoundTrip) {
    GridMap m = generate_map(77, 20, 20, 4, 6);
    EXPECT_EQ(load_map_text(save_map_text(m)), m);
}

TEST(Gridworld, ObservationIsBoundedAndOccluded) {
    GridMap m = generate_map(12, 20, 20, 4, 6);
    for (Cell c : m.free_cells()) {
        Observation o = observe(m, Pose{c.x, c.y, 4}, 0);
        for (const auto& [v, occ] : o.visible_cells) {
            EXPECT_LE(std::max(std::abs(v.x - c.x), std::abs(v.y - c.y)), kViewRange);
            EXPECT_EQ(occ, m.at(v));
        }
    }
}
