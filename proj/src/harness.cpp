#include "evonav/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "evonav/error.hpp"
#include "evonav/planning.hpp"
#include "evonav/rng.hpp"
#include "evonav/srm.hpp"
#include "evonav/text.hpp"

namespace evonav {

std::string to_string(Split s) { return s == Split::Seen ? "SEEN" : "UNSEEN"; }

Split parse_split(const std::string& s) {
    const auto u = text::to_lower(s);
    if (u == "seen") return Split::Seen;
    if (u == "unseen") return Split::Unseen;
    throw ConfigError("unknown split '" + s + "'");
}

// ---------------------------------------------------------------- manifests

namespace {

template <typename T>
T scalar(const YAML::Node& node, const std::string& key, T fallback) {
    if (!node[key]) return fallback;
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("manifest: bad value for '" + key + "'");
    }
}

bool valid_suite_id(const std::string& id) {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

}  // namespace

SuiteManifest load_manifest(std::string_view document) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("manifest parse failure: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("manifest: top level must be a mapping");
    static const std::vector<std::string> known = {"suite_id", "task", "split", "width", "height", "rooms",
                                                   "objects", "obstacle_free", "min_goal_distance", "episodes"};
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("manifest: unknown key '" + key + "'");
    }

    SuiteManifest m;
    m.suite_id = scalar<std::string>(root, "suite_id", "");
    if (!valid_suite_id(m.suite_id)) throw ConfigError("manifest: suite_id must be non-empty [A-Za-z0-9_-]");
    try {
        m.task = parse_task_kind(scalar<std::string>(root, "task", "IGNAV"));
    } catch (const Error& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
    m.split = parse_split(scalar<std::string>(root, "split", "SEEN"));
    m.width = scalar(root, "width", m.width);
    m.height = scalar(root, "height", m.height);
    m.rooms = scalar(root, "rooms", m.rooms);
    m.objects = scalar(root, "objects", m.objects);
    m.obstacle_free = scalar(root, "obstacle_free", m.obstacle_free);
    m.min_goal_distance = scalar(root, "min_goal_distance", m.min_goal_distance);
    if (m.width < 8 || m.height < 8) throw ConfigError("manifest: width and height must be >= 8");
    if (m.obstacle_free && m.task != TaskKind::IGNav) throw ConfigError("manifest: obstacle_free requires IGNAV");

    const YAML::Node eps = root["episodes"];
    if (!eps) throw ConfigError("manifest: episodes missing");
    if (eps.IsSequence()) {
        for (const auto& e : eps) {
            if (!e.IsMap() || !e["map_seed"]) throw ConfigError("manifest: episode entries need map_seed");
            EpisodeSpec s;
            s.map_seed = e["map_seed"].as<std::uint64_t>();
            s.goal_seed = e["goal_seed"] ? e["goal_seed"].as<std::uint64_t>() : mix_seed(s.map_seed, 7);
            m.episodes.push_back(s);
        }
    } else if (eps.IsMap()) {
        const auto first = scalar<std::uint64_t>(eps, "first_seed", 0);
        const auto count = scalar<int>(eps, "count", 0);
        for (int i = 0; i < count; ++i) {
            const std::uint64_t seed = first + static_cast<std::uint64_t>(i);
            m.episodes.push_back({seed, mix_seed(seed, 7)});
        }
    } else {
        throw ConfigError("manifest: episodes must be a list or a {first_seed, count} range");
    }
    if (m.episodes.empty()) throw ConfigError("manifest: episode list is empty");
    return m;
}

SuiteManifest load_manifest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open manifest '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return load_manifest(s.str());
}

std::string episode_id(const std::string& suite_id, int round, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", index);
    return "r" + std::to_string(round) + "-" + suite_id + "-" + buf;
}

namespace {

GridMap open_arena(std::uint64_t seed, int width, int height) {
    GridMap map(width, height, seed);
    for (int x = 0; x < width; ++x) {
        map.set({x, 0}, Occupancy::Wall);
        map.set({x, height - 1}, Occupancy::Wall);
    }
    for (int y = 0; y < height; ++y) {
        map.set({0, y}, Occupancy::Wall);
        map.set({width - 1, y}, Occupancy::Wall);
    }
    return map;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
    return items[rng.uniform(items.size())];
}

std::vector<Cell> cells_at_least(const GridMap& map, Cell from, int min_distance) {
    const auto dist = distance_field(map, from);
    std::vector<Cell> out;
    for (Cell c : map.free_cells())
        if (dist[map.index(c)] >= min_distance) out.push_back(c);
    return out;
}

}  // namespace

EpisodeInstance expand_episode(const SuiteManifest& manifest, std::size_t index, int round) {
    if (index >= manifest.episodes.size()) throw ContractError("episode index out of range");
    const EpisodeSpec& spec = manifest.episodes[index];
    EpisodeInstance inst;
    inst.episode_id = episode_id(manifest.suite_id, round, index);
    Rng rng(spec.goal_seed);
    try {
        if (manifest.obstacle_free) {
            inst.map = open_arena(spec.map_seed, manifest.width, manifest.height);
            const auto free = inst.map.free_cells();
            const Cell s = pick(rng, free);
            const int first_heading = rng.uniform_int(0, kHeadings - 1);
            for (int k = 0; k < kHeadings; ++k) {
                inst.start = {s.x, s.y, (first_heading + k) % kHeadings};
                std::vector<Cell> in_view;
                for (const auto& [c, occ] : observe(inst.map, inst.start, 0).visible_cells)
                    if (occ == Occupancy::Free && std::max(std::abs(c.x - s.x), std::abs(c.y - s.y)) >= 2)
                        in_view.push_back(c);
                if (in_view.empty()) continue;
                const Cell g = pick(rng, in_view);
                inst.goal = make_ignav_goal(inst.map, {g.x, g.y, rng.uniform_int(0, kHeadings - 1)});
                return inst;
            }
            throw ConfigError("no goal cell in view");
        }

        inst.map = generate_map(spec.map_seed, manifest.width, manifest.height, manifest.rooms, manifest.objects);
        const auto free = inst.map.free_cells();
        switch (manifest.task) {
            case TaskKind::IGNav: {
                const Cell s = pick(rng, free);
                inst.start = {s.x, s.y, rng.uniform_int(0, kHeadings - 1)};
                const auto far = cells_at_least(inst.map, s, manifest.min_goal_distance);
                if (far.empty()) throw ConfigError("no goal cell at the minimum distance");
                const Cell g = pick(rng, far);
                inst.goal = make_ignav_goal(inst.map, {g.x, g.y, rng.uniform_int(0, kHeadings - 1)});
                break;
            }
            case TaskKind::AR:
            case TaskKind::AEQA: {
                std::map<std::string, int> counts;
                for (const auto& [c, o] : inst.map.objects()) ++counts[o.category];
                std::vector<Cell> unique, any;
                for (const auto& [c, o] : inst.map.objects()) {
                    any.push_back(c);
                    if (counts[o.category] == 1) unique.push_back(c);
                }
                const auto& pool = manifest.task == TaskKind::AEQA && !unique.empty() ? unique : any;
                if (pool.empty()) throw ConfigError("map has no objects");
                const Cell obj = pick(rng, pool);
                const int range = manifest.task == TaskKind::AR ? kRecognitionRange : kViewRange;
                const auto far = cells_at_least(inst.map, obj, std::max(manifest.min_goal_distance, range + 1));
                if (far.empty()) throw ConfigError("no start cell far enough from the target");
                const Cell s = pick(rng, far);
                inst.start = {s.x, s.y, rng.uniform_int(0, kHeadings - 1)};
                inst.goal = manifest.task == TaskKind::AR ? make_ar_goal(inst.map, obj) : make_aeqa_goal(inst.map, obj);
                break;
            }
        }
    } catch (const ContractError& e) {
        throw ConfigError("manifest expansion failed for " + inst.episode_id + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError("manifest expansion failed for " + inst.episode_id + ": " + e.what());
    }
    return inst;
}

// ---------------------------------------------------------------- modes

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Basic: return "basic";
        case Mode::Srm: return "srm";
        case Mode::Lpm: return "lpm";
        case Mode::SrmLpm: return "srm-lpm";
        case Mode::StaticFull: return "static";
        case Mode::AdaptiveFull: return "adaptive";
    }
    return "basic";
}

Mode parse_mode(const std::string& s) {
    std::string k = text::to_lower(s);
    std::replace(k.begin(), k.end(), '_', '-');
    if (k == "basic") return Mode::Basic;
    if (k == "srm") return Mode::Srm;
    if (k == "lpm") return Mode::Lpm;
    if (k == "srm-lpm") return Mode::SrmLpm;
    if (k == "static" || k == "static-full") return Mode::StaticFull;
    if (k == "adaptive" || k == "adaptive-full") return Mode::AdaptiveFull;
    throw ConfigError("unknown mode '" + s + "'");
}

Components components_of(Mode m) {
    switch (m) {
        case Mode::Basic: return {};
        case Mode::Srm: return {true, false, false, false, false};
        case Mode::Lpm: return {false, true, true, false, false};
        case Mode::SrmLpm: return {true, true, true, false, false};
        case Mode::StaticFull: return {true, true, false, true, false};
        case Mode::AdaptiveFull: return {true, true, true, true, true};
    }
    return {};
}

BackendFactory oracle_factory(const CortexConfig& config) {
    return [config](const GridMap& map) { return make_oracle_backends(map, config); };
}

// ---------------------------------------------------------------- stores

Stores Stores::open(std::filesystem::path bank_dir, std::filesystem::path library_dir, double sim_threshold,
                    HeuristicMergerBackend& merger) {
    Stores s;
    s.bank_dir_ = std::move(bank_dir);
    s.library_dir_ = std::move(library_dir);
    if (!s.bank_dir_.empty() && std::filesystem::exists(s.bank_dir_ / "index.txt"))
        s.bank_ = EpisodeBank::load(s.bank_dir_);
    if (!s.library_dir_.empty() && std::filesystem::exists(s.library_dir_ / "raw.log"))
        s.library_ = HeuristicLibrary::load(s.library_dir_, sim_threshold, merger);
    s.library_saved_ = s.library_.raw().size();
    return s;
}

void Stores::save_bank() const {
    if (!bank_dir_.empty()) bank_.save(bank_dir_);
}

void Stores::save_library() {
    if (library_dir_.empty()) return;
    library_.append_save(library_dir_, library_saved_);
    library_saved_ = library_.raw().size();
}

// ---------------------------------------------------------------- episodes

namespace {

void note_oscillation(PlannerContext& ctx, const ReflectionSummary& s) {
    if (std::find(s.failure_patterns.begin(), s.failure_patterns.end(), kOscillation) == s.failure_patterns.end())
        return;
    const auto& hist = ctx.target_history;
    if (hist.empty()) return;
    const Cell last = hist.back();
    for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
        if (*it == last) continue;
        if (std::find(ctx.excluded_targets.begin(), ctx.excluded_targets.end(), *it) == ctx.excluded_targets.end())
            ctx.excluded_targets.push_back(*it);
        return;
    }
}

}  // namespace

EpisodeResult run_episode(const EpisodeInstance& instance, BackendSet& backends, const CortexConfig& config,
                          const Components& components, const EpisodeBank& bank,
                          const std::vector<MergedHeuristic>& guidance, const RunOptions& options) {
    const GoalSpec& goal = instance.goal;
    Environment env(instance.map, goal, instance.start);
    EpisodeResult res{{}, MemoryGraph::create(instance.episode_id, goal.kind, goal), {}, {}, {}};
    MemoryGraph& graph = res.graph;
    PlannerContext ctx = make_context(goal, instance.map.width(), instance.map.height());
    if (components.aki_read) ctx.active_heuristics = guidance;

    LoopOptions loop;
    loop.open_loop = options.open_loop;
    // Every round replays the same episode under the same noise; only the stores differ.
    const std::string& id = instance.episode_id;
    loop.episode_seed = text::fnv1a(std::string_view(id).substr(id.find('-') + 1));

    bool budget_exhausted = false;
    while (!env.done()) {
        if (components.lpm) {
            ctx.retrieved_principles.clear();
            for (auto& [p, sim] : bank.retrieve(query_embedding(goal, env.observation()), config.lpm_threshold,
                                                kPrincipleCap))
                ctx.retrieved_principles.push_back(p);
        }
        const LoopStepResult r = step_loop(env, backends, graph, ctx, config, loop);
        if (!r.error.empty()) res.warnings.push_back(r.error);
        if (r.status == LoopStatus::BudgetExceeded) {
            budget_exhausted = true;
            break;
        }
        if (r.status != LoopStatus::Continue) break;
        if (components.srm) {
            try {
                const auto summary =
                    maybe_reflect(graph, *backends.srm_analyzer, config.srm_window, ctx.active_heuristics);
                if (summary) note_oscillation(ctx, *summary);
                ctx = inject_reflection(std::move(ctx), summary);
            } catch (const BackendError& e) {
                res.warnings.push_back(std::string("reflection skipped: ") + e.what());
            }
        }
    }
    if (env.failed()) budget_exhausted = true;

    std::optional<Action> terminal = env.terminal_action();
    EpisodeOutcome outcome;
    try {
        outcome = evaluate_outcome(instance.map, goal, terminal, {env.pose(), budget_exhausted});
    } catch (const ContractError& e) {
        res.warnings.push_back(e.what());
        outcome = {false, 0.0};
    }
    graph.finalize(outcome.success ? Outcome::Success : Outcome::Failure);

    EpisodeRecord& rec = res.record;
    rec.episode_id = instance.episode_id;
    rec.task = goal.kind;
    rec.success = outcome.success;
    rec.shortest_length = shortest_task_length(instance.map, goal, instance.start.cell());
    rec.path_length = env.path_length();
    rec.actions = env.actions_taken();
    rec.answer_score = outcome.answer_score;
    rec.oscillation = detect_oscillation(graph.full_trace()).detected;

    if (components.lpm_commit)
        res.principles = build_principles(graph, *backends.principle_analyzer, config.lpm_horizon, &res.warnings);
    if (components.aki_write) res.heuristics = extract_heuristics(*backends.extractor, graph, &res.warnings);
    return res;
}

// ---------------------------------------------------------------- suites

namespace {

RunRecord run_with(const SuiteManifest& manifest, const CortexConfig& config, const Components& comp,
                   const std::string& label, Stores& stores, const BackendFactory& factory, const RunOptions& options,
                   int round) {
    validate(config);
    if (round < 1) throw ContractError("round must be >= 1");
    RunRecord rec;
    rec.suite_id = manifest.suite_id;
    rec.mode = label;
    rec.round = round;
    rec.config = config;
    rec.bank_path = stores.bank_dir().string();
    rec.library_path = stores.library_dir().string();

    const std::size_t n = manifest.episodes.size();
    const bool writes = comp.lpm_commit || comp.aki_write;
    const std::size_t workers = writes ? 1 : static_cast<std::size_t>(std::max(1, options.workers));

    auto run_one = [&](std::size_t i) {
        const EpisodeInstance inst = expand_episode(manifest, i, round);
        BackendSet backends = factory(inst.map);
        const auto guidance = comp.aki_read ? select_guidance(stores.library(), config.confidence_floor,
                                                              config.min_support)
                                            : std::vector<MergedHeuristic>{};
        return std::make_pair(run_episode(inst, backends, config, comp, stores.bank(), guidance, options),
                              backends.merger);
    };

    auto absorb = [&](EpisodeResult res, const std::shared_ptr<HeuristicMergerBackend>& merger) {
        for (const auto& w : res.warnings) rec.warnings.push_back(res.record.episode_id + ": " + w);
        rec.episodes.push_back(res.record);
        if (comp.lpm_commit) {
            stores.bank().commit(std::move(res.graph), std::move(res.principles), config.max_episodes_per_goal);
            stores.save_bank();
        }
        if (comp.aki_write && !res.heuristics.empty()) {
            rec.heuristics_extracted += static_cast<int>(res.heuristics.size());
            stores.library().update(res.heuristics, config.sim_threshold, *merger);
            stores.save_library();
        }
    };

    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            auto [res, merger] = run_one(i);
            absorb(std::move(res), merger);
        }
    } else {
        for (std::size_t base = 0; base < n; base += workers) {
            std::vector<std::future<std::pair<EpisodeResult, std::shared_ptr<HeuristicMergerBackend>>>> batch;
            for (std::size_t i = base; i < std::min(n, base + workers); ++i)
                batch.push_back(std::async(std::launch::async, run_one, i));
            for (auto& f : batch) {
                auto [res, merger] = f.get();
                absorb(std::move(res), merger);
            }
        }
    }
    rec.metrics = compute_metrics(rec.episodes);
    return rec;
}

}  // namespace

RunRecord run_suite(const SuiteManifest& manifest, const CortexConfig& config, Mode mode, Stores& stores,
                    const BackendFactory& factory, const RunOptions& options, int round) {
    const Components comp = components_of(mode);
    if (comp.aki_write && !stores.library_dir().empty()) {
        std::error_code ec;
        std::filesystem::create_directories(stores.library_dir(), ec);
        if (ec) throw ConfigError("library directory is not writable: " + stores.library_dir().string());
    }
    if (comp.lpm_commit && !stores.bank_dir().empty()) {
        std::error_code ec;
        std::filesystem::create_directories(stores.bank_dir(), ec);
        if (ec) throw ConfigError("bank directory is not writable: " + stores.bank_dir().string());
    }
    return run_with(manifest, config, comp, to_string(mode), stores, factory, options, round);
}

std::vector<RunRecord> run_rounds(const SuiteManifest& manifest, const CortexConfig& config, Mode mode, int n_rounds,
                                  Stores& stores, const BackendFactory& factory, const RunOptions& options) {
    if (n_rounds < 1) throw ContractError("n_rounds must be >= 1");
    std::vector<RunRecord> out;
    for (int r = 1; r <= n_rounds; ++r) out.push_back(run_suite(manifest, config, mode, stores, factory, options, r));
    return out;
}

RunRecord transfer_heuristics(const std::filesystem::path& source_library, const SuiteManifest& target,
                              const CortexConfig& config, bool freeze, const BackendFactory& factory,
                              const RunOptions& options, const std::filesystem::path& output_library) {
    if (!std::filesystem::exists(source_library / "raw.log"))
        throw ConfigError("library load failure: no raw.log under " + source_library.string());
    BackendSet probe = factory(expand_episode(target, 0, 1).map);
    Stores stores;
    if (freeze) {
        stores = Stores::open({}, source_library, config.sim_threshold, *probe.merger);
        // Detach from the directory so nothing is ever written back.
        Stores detached;
        detached.library() = stores.library();
        stores = std::move(detached);
    } else {
        const auto out = output_library.empty() ? source_library : output_library;
        stores = Stores::open({}, source_library, config.sim_threshold, *probe.merger);
        if (out != source_library) {
            HeuristicLibrary lib = stores.library();
            lib.save(out);
            stores = Stores::open({}, out, config.sim_threshold, *probe.merger);
        }
    }
    const Components comp{true, false, false, true, !freeze};
    return run_with(target, config, comp, freeze ? "transfer-frozen" : "transfer-update", stores, factory, options, 1);
}

// ---------------------------------------------------------------- reports

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string metrics_table(const std::vector<RunRecord>& records) {
    if (records.empty()) throw ContractError("empty record list");
    std::string out = "suite\tmode\tround\tepisodes\tSR\tSPL\tMeanTraj\tScore\n";
    for (const auto& r : records) {
        out += r.suite_id + '\t' + r.mode + '\t' + std::to_string(r.round) + '\t' + std::to_string(r.episodes.size()) +
               '\t' + fixed(100.0 * r.metrics.sr) + '\t' + fixed(100.0 * r.metrics.spl) + '\t' +
               fixed(r.metrics.mean_traj) + '\t' + (r.metrics.answer_score ? fixed(*r.metrics.answer_score) : "-") +
               '\n';
    }
    return out;
}

std::string curve_table(const std::vector<RunRecord>& records) {
    if (records.empty()) throw ContractError("empty record list");
    std::vector<const RunRecord*> sorted;
    for (const auto& r : records) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const RunRecord* a, const RunRecord* b) {
        return std::tie(a->suite_id, a->mode, a->round) < std::tie(b->suite_id, b->mode, b->round);
    });
    std::string out = "suite\tmode\tround\tSR\tSPL\tMeanTraj\n";
    for (const RunRecord* r : sorted)
        out += r->suite_id + '\t' + r->mode + '\t' + std::to_string(r->round) + '\t' + fixed(100.0 * r->metrics.sr) +
               '\t' + fixed(100.0 * r->metrics.spl) + '\t' + fixed(r->metrics.mean_traj) + '\n';
    return out;
}

std::string episodes_table(const std::vector<RunRecord>& records) {
    std::string out = "suite\tmode\tround\tepisode\ttask\tsuccess\tshortest\tpath\tactions\tanswer_score\toscillation\n";
    for (const auto& r : records)
        for (const auto& e : r.episodes)
            out += r.suite_id + '\t' + r.mode + '\t' + std::to_string(r.round) + '\t' + e.episode_id + '\t' +
                   to_string(e.task) + '\t' + (e.success ? "1" : "0") + '\t' + std::to_string(e.shortest_length) +
                   '\t' + std::to_string(e.path_length) + '\t' + std::to_string(e.actions) + '\t' +
                   text::format_hexfloat(e.answer_score) + '\t' + (e.oscillation ? "1" : "0") + '\n';
    return out;
}

void report(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir) {
    if (records.empty()) throw ContractError("empty record list");
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir / "metrics.tsv", std::ios::binary) << metrics_table(records);
    std::ofstream(out_dir / "curve.tsv", std::ios::binary) << curve_table(records);
    std::ofstream(out_dir / "episodes.tsv", std::ios::binary) << episodes_table(records);

    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json m{{"sr", r.metrics.sr}, {"spl", r.metrics.spl}, {"mean_traj", r.metrics.mean_traj}};
        if (r.metrics.answer_score) m["answer_score"] = *r.metrics.answer_score;
        runs.push_back({{"suite", r.suite_id},
                        {"mode", r.mode},
                        {"round", r.round},
                        {"episodes", r.episodes.size()},
                        {"config", serialize_config(r.config)},
                        {"metrics", m},
                        {"heuristics_extracted", r.heuristics_extracted},
                        {"bank", r.bank_path},
                        {"library", r.library_path},
                        {"warnings", r.warnings}});
    }
    std::ofstream(out_dir / "summary.json", std::ios::binary) << nlohmann::json{{"runs", runs}}.dump(2) << "\n";
}

std::vector<RunRecord> load_records(const std::filesystem::path& run_dir) {
    std::ifstream in(run_dir / "episodes.tsv", std::ios::binary);
    if (!in) throw ConfigError("no episodes.tsv under " + run_dir.string());
    std::string line;
    std::getline(in, line);
    std::vector<RunRecord> out;
    std::map<std::tuple<std::string, std::string, int>, std::size_t> slot;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = text::split(line, '\t');
        if (f.size() != 11) throw ConfigError("episodes.tsv line " + std::to_string(lineno) + ": expected 11 fields");
        EpisodeRecord e;
        int round = 0;
        try {
            round = std::stoi(f[2]);
            e.episode_id = f[3];
            e.task = parse_task_kind(f[4]);
            e.success = f[5] == "1";
            e.shortest_length = std::stoi(f[6]);
            e.path_length = std::stoi(f[7]);
            e.actions = std::stoi(f[8]);
            e.answer_score = text::parse_double(f[9]);
            e.oscillation = f[10] == "1";
        } catch (const std::exception& ex) {
            throw ConfigError("episodes.tsv line " + std::to_string(lineno) + ": " + ex.what());
        }
        const auto key = std::make_tuple(f[0], f[1], round);
        auto it = slot.find(key);
        if (it == slot.end()) {
            RunRecord r;
            r.suite_id = f[0];
            r.mode = f[1];
            r.round = round;
            it = slot.emplace(key, out.size()).first;
            out.push_back(std::move(r));
        }
        out[it->second].episodes.push_back(e);
    }
    if (out.empty()) throw ConfigError("episodes.tsv has no rows");
    for (auto& r : out) r.metrics = compute_metrics(r.episodes);
    return out;
}

}  // namespace evonav
