#include <gtest/gtest.h>

#include <filesystem>

#include "evonav/error.hpp"
#include "evonav/harness.hpp"
#include "remote_scenario.hpp"

using namespace evonav;
namespace fs = std::filesystem;

namespace {

SuiteManifest small_suite(int count, std::uint64_t first = 1150) {
    return load_manifest("suite_id: tiny\ntask: IGNAV\nsplit: SEEN\nwidth: 20\nheight: 20\nrooms: 4\nobjects: 6\n"
                         "min_goal_distance: 8\nepisodes: {first_seed: " +
                         std::to_string(first) + ", count: " + std::to_string(count) + "}\n");
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("evonav_harness_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Harness, ManifestFormsAndEpisodeIds) {
    SuiteManifest m = small_suite(4);
    EXPECT_EQ(m.episodes.size(), 4u);
    EXPECT_EQ(m.episodes[0].map_seed, 1150u);
    SuiteManifest explicit_list = load_manifest(
        "suite_id: pair\ntask: AR\nsplit: UNSEEN\nepisodes:\n  - {map_seed: 3, goal_seed: 9}\n  - {map_seed: 4, goal_seed: 1}\n");
    ASSERT_EQ(explicit_list.episodes.size(), 2u);
    EXPECT_EQ(explicit_list.episodes[1], (EpisodeSpec{4, 1}));
    EXPECT_EQ(explicit_list.task, TaskKind::AR);
    EXPECT_EQ(episode_id("tiny", 2, 7), "r2-tiny-007");
    EXPECT_THROW(load_manifest("suite_id: x\nbogus: 1\nepisodes: {first_seed: 1, count: 1}\n"), Error);
    for (const char* f : {"ignav_seen", "ignav_unseen", "open_ignav", "ar_seen", "aeqa_seen"})
        EXPECT_NO_THROW(load_manifest_file(std::string(EVONAV_MANIFESTS) + "/" + f + ".yaml")) << f;
}

TEST(Harness, SeenAndUnseenSplitsAreDisjoint) {
    auto seen = load_manifest_file(std::string(EVONAV_MANIFESTS) + "/ignav_seen.yaml");
    auto unseen = load_manifest_file(std::string(EVONAV_MANIFESTS) + "/ignav_unseen.yaml");
    for (const auto& a : seen.episodes)
        for (const auto& b : unseen.episodes) EXPECT_NE(a.map_seed, b.map_seed);
}

TEST(Harness, ModeGating) {
    EXPECT_EQ(components_of(Mode::Basic), (Components{}));
    EXPECT_EQ(components_of(Mode::Srm), (Components{true, false, false, false, false}));
    EXPECT_EQ(components_of(Mode::StaticFull).aki_write, false);
    EXPECT_EQ(components_of(Mode::StaticFull).lpm_commit, false);
    EXPECT_EQ(components_of(Mode::AdaptiveFull), (Components{true, true, true, true, true}));
    for (Mode m : {Mode::Basic, Mode::Srm, Mode::Lpm, Mode::SrmLpm, Mode::StaticFull, Mode::AdaptiveFull})
        EXPECT_EQ(parse_mode(to_string(m)), m);
}

TEST(Harness, BasicRunIsDeterministicAndTouchesNoStore) {
    CortexConfig cfg;
    SuiteManifest suite = small_suite(6);
    fs::path bank = scratch("basic_bank"), lib = scratch("basic_lib");
    auto run = [&] {
        OracleHeuristicMerger merger;
        Stores stores = Stores::open(bank, lib, cfg.sim_threshold, merger);
        return run_suite(suite, cfg, Mode::Basic, stores, oracle_factory(cfg));
    };
    RunRecord a = run(), b = run();
    EXPECT_EQ(a.episodes, b.episodes);
    EXPECT_EQ(a.metrics, b.metrics);
    EXPECT_FALSE(fs::exists(bank));
    EXPECT_FALSE(fs::exists(lib));
    EXPECT_EQ(compute_metrics(a.episodes), a.metrics);
}

TEST(Harness, AdaptiveGrowsLibraryByExtractedCount) {
    CortexConfig cfg;
    SuiteManifest suite = small_suite(4);
    fs::path lib = scratch("adaptive_lib");
    OracleHeuristicMerger merger;
    Stores stores = Stores::open({}, lib, cfg.sim_threshold, merger);
    RunRecord r = run_suite(suite, cfg, Mode::AdaptiveFull, stores, oracle_factory(cfg));
    EXPECT_EQ(static_cast<int>(stores.library().raw().size()), r.heuristics_extracted);
    HeuristicLibrary reloaded = HeuristicLibrary::load(lib, cfg.sim_threshold, merger);
    EXPECT_EQ(reloaded, stores.library());
    fs::remove_all(lib);
}

TEST(Harness, RoundsKeepBankWithinCap) {
    CortexConfig cfg;
    cfg.max_episodes_per_goal = 2;
    SuiteManifest suite = small_suite(3);
    Stores stores;
    auto records = run_rounds(suite, cfg, Mode::Lpm, 3, stores, oracle_factory(cfg));
    ASSERT_EQ(records.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(records[i].round, i + 1);
    for (const auto& [goal, list] : stores.bank().episodes()) EXPECT_LE(list.size(), 2u);
    EXPECT_GT(stores.bank().size(), 0u);
}

TEST(Harness, FrozenTransferLeavesLibraryUntouched) {
    CortexConfig cfg;
    fs::path lib = scratch("transfer_lib");
    {
        OracleHeuristicMerger merger;
        Stores stores = Stores::open({}, lib, cfg.sim_threshold, merger);
        run_suite(small_suite(4), cfg, Mode::AdaptiveFull, stores, oracle_factory(cfg));
    }
    const std::string raw = evonav::testing::read_file(lib / "raw.log");
    const std::string idx = evonav::testing::read_file(lib / "merged.idx");
    transfer_heuristics(lib, small_suite(3, 5000), cfg, true, oracle_factory(cfg));
    EXPECT_EQ(evonav::testing::read_file(lib / "raw.log"), raw);
    EXPECT_EQ(evonav::testing::read_file(lib / "merged.idx"), idx);
    EXPECT_THROW(transfer_heuristics(scratch("missing"), small_suite(1), cfg, true, oracle_factory(cfg)), ConfigError);
    fs::remove_all(lib);
}

TEST(Harness, EmptyFrozenTransferEqualsSrm) {
    CortexConfig cfg;
    fs::path lib = scratch("empty_lib");
    OracleHeuristicMerger merger;
    HeuristicLibrary{}.save(lib);
    SuiteManifest suite = small_suite(4, 5000);
    RunRecord t = transfer_heuristics(lib, suite, cfg, true, oracle_factory(cfg));
    Stores none;
    RunRecord s = run_suite(suite, cfg, Mode::Srm, none, oracle_factory(cfg));
    EXPECT_EQ(t.episodes, s.episodes);
    fs::remove_all(lib);
}

TEST(Harness, NoisyWorldModelLowersSuccess) {
    SuiteManifest suite = small_suite(12, 1150);
    CortexConfig clean;
    CortexConfig noisy;
    noisy.world_model_noise = 1.0;
    Stores s1, s2;
    RunOptions open;
    open.open_loop = true;
    RunRecord a = run_suite(suite, clean, Mode::Basic, s1, oracle_factory(clean), open);
    RunRecord b = run_suite(suite, noisy, Mode::Basic, s2, oracle_factory(noisy), open);
    EXPECT_LT(b.metrics.sr, a.metrics.sr);
}

TEST(Harness, ReportLayoutAndReload) {
    CortexConfig cfg;
    Stores stores;
    auto records = run_rounds(small_suite(3), cfg, Mode::Srm, 2, stores, oracle_factory(cfg));
    fs::path out = scratch("report");
    report(records, out);
    const std::string metrics = evonav::testing::read_file(out / "metrics.tsv");
    EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "suite\tmode\tround\tepisodes\tSR\tSPL\tMeanTraj\tScore");
    EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 3);
    const std::string curve = evonav::testing::read_file(out / "curve.tsv");
    EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3);
    auto back = load_records(out);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].episodes, records[i].episodes);
        EXPECT_EQ(compute_metrics(back[i].episodes), records[i].metrics);
    }
    EXPECT_THROW(metrics_table({}), ContractError);
    fs::remove_all(out);
}
