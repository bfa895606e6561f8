#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "evonav/aki.hpp"
#include "evonav/error.hpp"
#include "support.hpp"

using namespace evonav;
using evonav::testing::random_heuristic;

namespace {

GridMap open_room(int w, int h) {
    GridMap m(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.set({x, y}, (x == 0 || y == 0 || x == w - 1 || y == h - 1) ? Occupancy::Wall : Occupancy::Free);
    return m;
}

Heuristic make(const std::string& pattern, const std::string& d, const std::string& a, double c,
               const std::string& src = "e1") {
    Heuristic h;
    h.pattern_id = pattern;
    h.description = d;
    h.strategy = a;
    h.confidence = c;
    h.source_episode = src;
    return h;
}

bool has_pattern(const std::vector<Heuristic>& hs, const std::string& p, Outcome y) {
    return std::any_of(hs.begin(), hs.end(), [&](const Heuristic& h) { return h.pattern_id == p && h.outcome_tag == y; });
}

}  // namespace

TEST(Aki, ExtractOscillationFromBackAndForth) {
    GridMap m = open_room(10, 10);
    OracleHeuristicExtractor ex(m);
    GoalSpec goal = make_ignav_goal(m, Pose{8, 8, 0});
    MemoryGraph g = MemoryGraph::create("osc", TaskKind::IGNav, goal);
    for (int i = 0; i < 6; ++i) {
        SubtaskNode s;
        s.actions = {Action::forward()};
        s.pose_trace = i % 2 == 0 ? std::vector<Pose>{{4, 4, 4}, {5, 4, 4}} : std::vector<Pose>{{5, 4, 12}, {4, 4, 12}};
        g.append_subtask(i, s);
    }
    g.finalize(Outcome::Failure);
    EXPECT_TRUE(has_pattern(extract_heuristics(ex, g), kOscillation, Outcome::Failure));

    MemoryGraph empty = MemoryGraph::create("empty", TaskKind::IGNav, goal);
    empty.finalize(Outcome::Failure);
    EXPECT_TRUE(extract_heuristics(ex, empty).empty());
}

TEST(Aki, CleanSuccessIsNotOscillation) {
    GridMap m = open_room(12, 6);
    OracleHeuristicExtractor ex(m);
    GoalSpec goal = make_ignav_goal(m, Pose{8, 3, 4});
    MemoryGraph g = MemoryGraph::create("clean", TaskKind::IGNav, goal);
    Pose p{2, 3, 4};
    for (int i = 0; i < 6; ++i) {
        SubtaskNode s;
        s.actions = {Action::forward()};
        s.pose_trace = {p, step(m, p, Action::forward()).pose};
        p = s.pose_trace.back();
        g.append_subtask(i, s);
    }
    ASSERT_EQ(geodesic(m, {2, 3}, p.cell()), 6);
    g.finalize(Outcome::Success);
    auto hs = extract_heuristics(ex, g);
    EXPECT_FALSE(has_pattern(hs, kOscillation, Outcome::Success));
    for (const auto& h : hs) EXPECT_EQ(h.outcome_tag, Outcome::Success);
}

TEST(Aki, ClusterRules) {
    auto a = make("OSCILLATION", "agent revisits cells", "commit to one frontier", 0.8);
    auto b = make("DOOR_FIRST", "agent revisits cells", "commit to one frontier", 0.8);
    EXPECT_EQ(cluster({a, b}, 0.85).size(), 2u);
    auto same = cluster({a, a}, 0.85);
    ASSERT_EQ(same.size(), 1u);
    EXPECT_EQ(same[0].size(), 2u);
    auto c = make("OSCILLATION", "zig zag hallway", "prefer doorway", 0.8);
    EXPECT_EQ(cluster({a, c}, 0.85).size(), 2u);
}

TEST(Aki, MergeRules) {
    OracleHeuristicMerger merger;
    auto a = make("OSCILLATION", "agent revisits cells", "commit to one frontier", 0.6, "e1");
    MergedHeuristic one = merge_cluster({a}, merger);
    EXPECT_EQ(one.description, a.description);
    EXPECT_EQ(one.strategy, a.strategy);
    EXPECT_DOUBLE_EQ(one.confidence, 0.6);
    EXPECT_EQ(one.support, 1);

    auto b = make("OSCILLATION", "agent revisits cells", "commit to one frontier", 0.8, "e2");
    b.outcome_tag = Outcome::Failure;
    MergedHeuristic two = merge_cluster({a, b}, merger);
    EXPECT_NEAR(two.confidence, 0.7, 1e-12);
    EXPECT_EQ(two.success_count, 1);
    EXPECT_EQ(two.failure_count, 1);
    EXPECT_EQ(merge_cluster({b, a}, merger), two);
    EXPECT_THROW(merge_cluster({a, make("DOOR_FIRST", "x", "y", 0.5)}, merger), ContractError);
}

TEST(Aki, UpdateLibraryRules) {
    OracleHeuristicMerger merger;
    auto h = make("OSCILLATION", "agent revisits cells", "commit to one frontier", 0.8);
    HeuristicLibrary lib = update_library({}, {h}, 0.85, merger);
    ASSERT_EQ(lib.merged().size(), 1u);
    EXPECT_EQ(lib.merged()[0].support, 1);
    lib = update_library(lib, {h}, 0.85, merger);
    ASSERT_EQ(lib.merged().size(), 1u);
    EXPECT_EQ(lib.merged()[0].support, 2);
    EXPECT_DOUBLE_EQ(lib.merged()[0].confidence, 0.8);
    EXPECT_EQ(update_library(lib, {}, 0.85, merger), lib);
}

TEST(Aki, SelectGuidanceFilters) {
    OracleHeuristicMerger merger;
    auto h = make("OSCILLATION", "agent revisits cells", "commit to one frontier", 0.9);
    HeuristicLibrary three = HeuristicLibrary::rebuild({h, h, h}, 0.85, merger);
    EXPECT_EQ(select_guidance(three, 0.7, 2).size(), 1u);
    HeuristicLibrary one = HeuristicLibrary::rebuild({h}, 0.85, merger);
    EXPECT_TRUE(select_guidance(one, 0.7, 2).empty());
    EXPECT_TRUE(select_guidance(HeuristicLibrary{}, 0.7, 2).empty());
}

TEST(Aki, PropertyRecomputeAndAssociativity) {
    OracleHeuristicMerger merger;
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Heuristic> a, b;
        for (int i = 0, n = static_cast<int>(rng() % 10); i < n; ++i) a.push_back(random_heuristic(rng));
        for (int i = 0, n = static_cast<int>(rng() % 10); i < n; ++i) b.push_back(random_heuristic(rng));
        HeuristicLibrary stepwise = update_library(update_library({}, a, 0.85, merger), b, 0.85, merger);
        std::vector<Heuristic> ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        HeuristicLibrary batch = update_library({}, ab, 0.85, merger);
        EXPECT_EQ(stepwise, batch);
        HeuristicLibrary fresh = HeuristicLibrary::rebuild(stepwise.raw(), 0.85, merger);
        EXPECT_EQ(select_guidance(stepwise, 0.5, 2), select_guidance(fresh, 0.5, 2));
        for (const auto& cl : cluster(ab, 0.85)) {
            MergedHeuristic mh = merge_cluster(cl, merger);
            auto [lo, hi] = std::minmax_element(cl.begin(), cl.end(), [](const auto& x, const auto& y) {
                return x.confidence < y.confidence;
            });
            EXPECT_GE(mh.confidence, lo->confidence - 1e-12);
            EXPECT_LE(mh.confidence, hi->confidence + 1e-12);
            EXPECT_EQ(mh.support, mh.success_count + mh.failure_count);
            EXPECT_EQ(static_cast<std::size_t>(mh.support), mh.provenance.size());
        }
    }
}

TEST(Aki, LibraryPersistsAndDetectsTampering) {
    OracleHeuristicMerger merger;
    std::mt19937_64 rng(22);
    std::vector<Heuristic> log;
    for (int i = 0; i < 20; ++i) log.push_back(random_heuristic(rng));
    HeuristicLibrary lib = HeuristicLibrary::rebuild(log, 0.85, merger);
    auto dir = std::filesystem::temp_directory_path() / "evonav_lib_test";
    std::filesystem::remove_all(dir);
    lib.save(dir);
    EXPECT_EQ(HeuristicLibrary::load(dir, 0.85, merger), lib);
    for (const auto& h : log) EXPECT_EQ(decode_heuristic(encode_heuristic(h)), h);
    std::ofstream(dir / "merged.idx", std::ios::app) << "garbage\n";
    EXPECT_THROW(HeuristicLibrary::load(dir, 0.85, merger), ParseError);
    std::filesystem::remove_all(dir);
}
