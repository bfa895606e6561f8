#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "evonav/error.hpp"
#include "evonav/lpm.hpp"
#include "evonav/text.hpp"
#include "support.hpp"

using namespace evonav;
using evonav::testing::random_graph;

namespace {

double norm(const Embedding& e) {
    double s = 0;
    for (double v : e) s += v * v;
    return std::sqrt(s);
}

MemoryGraph finished(std::mt19937_64& rng, const std::string& id, Outcome outcome, int n_subtasks) {
    MemoryGraph g = random_graph(rng, n_subtasks, id);
    g.finalize(outcome);
    return g;
}

Principle principle_with(const std::string& source, Embedding e) {
    Principle p;
    p.source_episode = source;
    p.text = "p from " + source;
    p.embedding = std::move(e);
    return p;
}

Embedding unit2(double angle) {
    return {std::cos(angle), std::sin(angle)};
}

}  // namespace

TEST(Lpm, EmbeddingDeterministicNormalizedGoalConditioned) {
    std::mt19937_64 rng(3);
    SubtaskNode s = evonav::testing::random_subtask(rng);
    GoalSpec a, b;
    a.target = {3, 4};
    b.target = {15, 2};
    b.map_seed = 9;
    EXPECT_EQ(embed_state(a, s), embed_state(a, s));
    EXPECT_EQ(embed_state(a, s).size(), kEmbeddingDim);
    EXPECT_NEAR(norm(embed_state(a, s)), 1.0, 1e-9);
    EXPECT_LT(text::cosine(embed_state(a, s), embed_state(b, s)), 1.0);
}

TEST(Lpm, PrinciplesFollowOutcome) {
    std::mt19937_64 rng(5);
    OraclePrincipleAnalyzer analyzer;
    MemoryGraph ok = finished(rng, "ok", Outcome::Success, 4);
    auto ps = build_principles(ok, analyzer, 6);
    ASSERT_EQ(ps.size(), 4u);
    for (const auto& p : ps) {
        EXPECT_EQ(p.kind, PrincipleKind::Guiding);
        EXPECT_FALSE(p.text.empty());
    }
    EXPECT_EQ(ps.back().source_subtask, ok.subtask_ids().back());

    MemoryGraph bad = finished(rng, "bad", Outcome::Failure, 3);
    for (const auto& p : build_principles(bad, analyzer, 6)) EXPECT_EQ(p.kind, PrincipleKind::Cautionary);

    MemoryGraph open = random_graph(rng, 2, "open");
    EXPECT_THROW(build_principles(open, analyzer, 6), ContractError);
}

TEST(Lpm, RetrieveSelfSimilarityAndThreshold) {
    std::mt19937_64 rng(7);
    MemoryGraph g = finished(rng, "e1", Outcome::Success, 1);
    EpisodeBank bank;
    bank.commit(g, {principle_with("e1", unit2(0.3))}, 3);
    auto hit = bank.retrieve(unit2(0.3), 0.8);
    ASSERT_EQ(hit.size(), 1u);
    EXPECT_NEAR(hit[0].second, 1.0, 1e-9);
    EXPECT_TRUE(bank.retrieve(unit2(0.3 + M_PI / 2), 0.8).empty());
    EXPECT_THROW(bank.retrieve(Embedding{1, 0, 0}, 0.8), ContractError);
}

TEST(Lpm, RetrieveSortsFiltersTruncates) {
    std::mt19937_64 rng(8);
    MemoryGraph g = finished(rng, "e1", Outcome::Success, 1);
    std::vector<Principle> ps;
    for (double sim : {0.7, 0.95, 0.6, 0.85, 0.9}) ps.push_back(principle_with("e1", unit2(std::acos(sim))));
    EpisodeBank bank;
    bank.commit(g, ps, 3);
    auto out = bank.retrieve(unit2(0.0), 0.8, 2);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_NEAR(out[0].second, 0.95, 1e-9);
    EXPECT_NEAR(out[1].second, 0.9, 1e-9);
}

TEST(Lpm, ConsolidatePrefersShortestSuccess) {
    std::mt19937_64 rng(9);
    EpisodeBank bank;
    MemoryGraph s10 = random_graph(rng, 2, "a");
    s10.finalize(Outcome::Success, 10);
    MemoryGraph s7 = random_graph(rng, 2, "b");
    s7.finalize(Outcome::Success, 7);
    MemoryGraph f12 = random_graph(rng, 2, "c");
    f12.finalize(Outcome::Failure, 12);
    const std::string goal = s10.root().goal.digest();
    for (auto* g : {&s10, &s7, &f12}) bank.commit(*g, {principle_with(g->root().episode_id, unit2(0))}, 5);
    bank.consolidate(goal, 1);
    ASSERT_EQ(bank.size(), 1u);
    EXPECT_TRUE(bank.contains("b"));
    ASSERT_EQ(bank.principles().size(), 1u);
    EXPECT_EQ(bank.principles()[0].source_episode, "b");

    EpisodeBank single;
    single.commit(s7, {}, 3);
    EXPECT_EQ(single.size(), 1u);
}

TEST(Lpm, ConsolidateKeepsFarthestFailurePair) {
    std::mt19937_64 rng(10);
    std::vector<MemoryGraph> fails;
    for (int i = 0; i < 3; ++i) fails.push_back(finished(rng, "f" + std::to_string(i), Outcome::Failure, 3 + i));
    auto kept = select_diverse_failures(fails, 2);
    ASSERT_EQ(kept.size(), 2u);
    double best = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            best = std::max(best, embedding_distance(mean_subtask_embedding(fails[i]), mean_subtask_embedding(fails[j])));
    EXPECT_DOUBLE_EQ(embedding_distance(mean_subtask_embedding(fails[kept[0]]), mean_subtask_embedding(fails[kept[1]])),
                     best);
}

TEST(Lpm, CommitRulesAndCap) {
    std::mt19937_64 rng(11);
    EpisodeBank bank;
    bank.commit(finished(rng, "x0", Outcome::Success, 1), {}, 2);
    EXPECT_EQ(bank.size(), 1u);
    EXPECT_THROW(bank.commit(finished(rng, "x0", Outcome::Success, 1), {}, 2), ContractError);
    EXPECT_THROW(bank.commit(random_graph(rng, 1, "open"), {}, 2), ContractError);
    for (int i = 1; i < 4; ++i) bank.commit(finished(rng, "x" + std::to_string(i), Outcome::Success, 2), {}, 2);
    EXPECT_EQ(bank.size(), 2u);
}

TEST(Lpm, PropertyRetrieveAndConsolidate) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 100; ++trial) {
        EpisodeBank bank;
        int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            std::string id = "t" + std::to_string(i);
            Outcome o = rng() % 3 == 0 ? Outcome::Success : Outcome::Failure;
            std::vector<Principle> ps;
            for (int k = 0; k < 3; ++k) {
                Embedding e(4);
                for (double& v : e) v = gauss(rng);
                ps.push_back(principle_with(id, e));
            }
            bank.commit(finished(rng, id, o, 1 + static_cast<int>(rng() % 5)), ps, 3);
        }
        Embedding q(4);
        for (double& v : q) v = gauss(rng);
        double delta = std::uniform_real_distribution<double>(-0.5, 0.9)(rng);
        auto out = bank.retrieve(q, delta, 100);
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_GE(out[i].second, delta);
            if (i) EXPECT_GE(out[i - 1].second, out[i].second);
        }
        for (const auto& [goal, list] : bank.episodes()) {
            bool any_success = false;
            for (const auto& g : list) any_success |= g.root().outcome == Outcome::Success;
            for (const auto& g : list)
                if (any_success) EXPECT_EQ(g.root().outcome, Outcome::Success);
            EpisodeBank again = consolidate(bank, goal, 3);
            EXPECT_EQ(again, bank);
        }
    }
}

TEST(Lpm, BankPersistsRoundTrip) {
    std::mt19937_64 rng(13);
    OraclePrincipleAnalyzer analyzer;
    EpisodeBank bank;
    for (int i = 0; i < 4; ++i) {
        MemoryGraph g = finished(rng, "r1-s-00" + std::to_string(i), i % 2 ? Outcome::Success : Outcome::Failure, 3);
        bank.commit(g, build_principles(g, analyzer, 6), 3);
    }
    auto dir = std::filesystem::temp_directory_path() / "evonav_bank_test";
    std::filesystem::remove_all(dir);
    bank.save(dir);
    EXPECT_EQ(EpisodeBank::load(dir), bank);
    std::filesystem::remove_all(dir);
}
