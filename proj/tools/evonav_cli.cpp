#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "evonav/config.hpp"
#include "evonav/error.hpp"
#include "evonav/harness.hpp"
#include "evonav/remote.hpp"

using namespace evonav;

namespace {

const std::vector<std::string> kConfigFields = {
    "n_candidates", "imagination_horizon", "srm_window",       "lpm_horizon", "lpm_threshold",     "sim_threshold",
    "confidence_floor", "min_support",     "max_episodes_per_goal", "max_steps", "world_model_noise"};

struct Common {
    std::string config_file;
    std::string backend = "oracle";
    std::string transcript;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_file, "YAML config file");
    cmd->add_option("--backend", c.backend, "oracle or remote")->check(CLI::IsMember({"oracle", "remote"}));
    cmd->add_option("--transcript", c.transcript, "append remote exchanges to this JSONL file");
    cmd->add_option("--seed", c.seed, "global seed");
    cmd->add_option("--workers", c.workers, "concurrent episodes for store-free modes");
    for (const auto& f : kConfigFields) {
        std::string flag = "--" + f;
        for (auto& ch : flag)
            if (ch == '_') ch = '-';
        cmd->add_option_function<std::string>(flag, [&c, f](const std::string& v) { c.overrides[f] = v; },
                                              "override " + f);
    }
}

CortexConfig build_config(const Common& c) {
    CortexConfig cfg = c.config_file.empty() ? CortexConfig{} : load_config_file(c.config_file);
    for (const auto& [k, v] : c.overrides) set_config_field(cfg, k, v);
    if (c.seed) set_config_field(cfg, "seed", std::to_string(*c.seed));
    validate(cfg);
    return cfg;
}

BackendFactory build_factory(const Common& c, const CortexConfig& cfg) {
    if (c.backend == "oracle") return oracle_factory(cfg);
    auto client = std::make_shared<RemoteClient>(RemoteSettings::from_env(), std::make_shared<HttpTransport>());
    if (!c.transcript.empty()) client->set_transcript_file(c.transcript);
    BackendSet set = make_remote_backends(client);
    return [set](const GridMap&) { return set; };
}

void print_metrics(const std::vector<RunRecord>& records) { std::cout << metrics_table(records); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evonav: imagine-then-verify navigation agent with reflection, memory and heuristic learning"};
    app.require_subcommand(1);

    Common run_common;
    std::string manifest, mode = "basic", bank, library, out = "runs/latest";
    int rounds = 1;
    bool open_loop = false;
    auto* run = app.add_subcommand("run", "run a suite");
    run->add_option("--manifest", manifest, "suite manifest")->required();
    run->add_option("--mode", mode, "basic|srm|lpm|srm-lpm|static|adaptive");
    run->add_option("--rounds", rounds, "number of rounds");
    run->add_option("--bank", bank, "episode bank directory");
    run->add_option("--library", library, "heuristic library directory");
    run->add_option("--out", out, "report directory");
    run->add_flag("--open-loop", open_loop, "execute full imagined plans without replanning");
    add_common(run, run_common);

    Common tr_common;
    std::string from, tr_manifest, tr_out = "runs/transfer", library_out;
    bool freeze = false;
    auto* transfer = app.add_subcommand("transfer", "apply a heuristic library to another suite");
    transfer->add_option("--from", from, "source library directory")->required();
    transfer->add_option("--manifest", tr_manifest, "target suite manifest")->required();
    transfer->add_flag("--freeze", freeze, "read the library without updating it");
    transfer->add_option("--library-out", library_out, "where the updated library goes (default: the source)");
    transfer->add_option("--out", tr_out, "report directory");
    add_common(transfer, tr_common);

    std::string runs_dir;
    auto* rep = app.add_subcommand("report", "recompute report tables from a run directory");
    rep->add_option("--runs", runs_dir, "run directory containing episodes.tsv")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const CortexConfig cfg = build_config(run_common);
            const SuiteManifest m = load_manifest_file(manifest);
            const Mode md = parse_mode(mode);
            const Components comp = components_of(md);
            if (comp.lpm_commit && bank.empty()) throw ConfigError("mode " + mode + " needs --bank");
            if (comp.aki_write && library.empty()) throw ConfigError("mode " + mode + " needs --library");
            auto factory = build_factory(run_common, cfg);
            auto probe = factory(expand_episode(m, 0, 1).map);
            Stores stores = Stores::open(comp.lpm ? bank : "", comp.aki_read ? library : "", cfg.sim_threshold,
                                         *probe.merger);
            RunOptions opts{open_loop, run_common.workers};
            const auto records = run_rounds(m, cfg, md, rounds, stores, factory, opts);
            report(records, out);
            print_metrics(records);
        } else if (*transfer) {
            const CortexConfig cfg = build_config(tr_common);
            const SuiteManifest m = load_manifest_file(tr_manifest);
            auto factory = build_factory(tr_common, cfg);
            RunOptions opts{false, tr_common.workers};
            const auto record = transfer_heuristics(from, m, cfg, freeze, factory, opts, library_out);
            report({record}, tr_out);
            print_metrics({record});
        } else if (*rep) {
            const auto records = load_records(runs_dir);
            std::ofstream(std::filesystem::path(runs_dir) / "metrics.tsv", std::ios::binary) << metrics_table(records);
            std::ofstream(std::filesystem::path(runs_dir) / "curve.tsv", std::ios::binary) << curve_table(records);
            print_metrics(records);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
