#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "evonav/aki.hpp"
#include "evonav/backends.hpp"
#include "evonav/config.hpp"
#include "evonav/gridworld.hpp"
#include "evonav/lpm.hpp"
#include "evonav/memory_graph.hpp"

namespace evonav {

enum class Split { Seen, Unseen };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct EpisodeSpec {
    std::uint64_t map_seed = 0;
    std::uint64_t goal_seed = 0;
    bool operator==(const EpisodeSpec&) const = default;
};

struct SuiteManifest {
    std::string suite_id;
    TaskKind task = TaskKind::IGNav;
    Split split = Split::Seen;
    int width = 20;
    int height = 20;
    int rooms = 4;
    int objects = 6;
    // Open arena with no interior walls; the IGNav goal is placed inside the start view.
    bool obstacle_free = false;
    int min_goal_distance = 6;
    std::vector<EpisodeSpec> episodes;
    bool operator==(const SuiteManifest&) const = default;
};

// YAML document. Episodes come either as an explicit list of {map_seed, goal_seed}
// or as a range {first_seed, count}, where goal seeds are derived from map seeds.
SuiteManifest load_manifest(std::string_view document);
SuiteManifest load_manifest_file(const std::string& path);

struct EpisodeInstance {
    std::string episode_id;
    GridMap map;
    GoalSpec goal;
    Pose start;
};

// "r<round>-<suite>-<index, 3 digits>"
std::string episode_id(const std::string& suite_id, int round, std::size_t index);
EpisodeInstance expand_episode(const SuiteManifest& manifest, std::size_t index, int round);

enum class Mode { Basic, Srm, Lpm, SrmLpm, StaticFull, AdaptiveFull };
// basic, srm, lpm, srm-lpm, static, adaptive
std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct Components {
    bool srm = false;
    bool lpm = false;
    bool lpm_commit = false;
    bool aki_read = false;
    bool aki_write = false;
    bool operator==(const Components&) const = default;
};
Components components_of(Mode m);

// Builds the backend stack for one episode's map.
using BackendFactory = std::function<BackendSet(const GridMap& map)>;
BackendFactory oracle_factory(const CortexConfig& config);

// Persistent experience stores. Empty paths keep a store in memory only.
class Stores {
public:
    Stores() = default;
    // Loads whatever already exists under the given directories.
    static Stores open(std::filesystem::path bank_dir, std::filesystem::path library_dir, double sim_threshold,
                       HeuristicMergerBackend& merger);

    EpisodeBank& bank() { return bank_; }
    const EpisodeBank& bank() const { return bank_; }
    HeuristicLibrary& library() { return library_; }
    const HeuristicLibrary& library() const { return library_; }
    const std::filesystem::path& bank_dir() const { return bank_dir_; }
    const std::filesystem::path& library_dir() const { return library_dir_; }

    void save_bank() const;
    void save_library();

private:
    EpisodeBank bank_;
    HeuristicLibrary library_;
    std::filesystem::path bank_dir_;
    std::filesystem::path library_dir_;
    std::size_t library_saved_ = 0;
};

struct RunOptions {
    bool open_loop = false;
    // Episodes run concurrently only when the mode writes no store.
    int workers = 1;
};

struct EpisodeResult {
    EpisodeRecord record;
    MemoryGraph graph;
    std::vector<Principle> principles;
    std::vector<Heuristic> heuristics;
    std::vector<std::string> warnings;
};

// Runs one episode to completion without touching any store.
EpisodeResult run_episode(const EpisodeInstance& instance, BackendSet& backends, const CortexConfig& config,
                          const Components& components, const EpisodeBank& bank,
                          const std::vector<MergedHeuristic>& guidance, const RunOptions& options = {});

struct RunRecord {
    std::string suite_id;
    std::string mode;
    int round = 1;
    CortexConfig config;
    std::vector<EpisodeRecord> episodes;
    Metrics metrics;
    std::string bank_path;
    std::string library_path;
    int heuristics_extracted = 0;
    std::vector<std::string> warnings;
};

RunRecord run_suite(const SuiteManifest& manifest, const CortexConfig& config, Mode mode, Stores& stores,
                    const BackendFactory& factory, const RunOptions& options = {}, int round = 1);

std::vector<RunRecord> run_rounds(const SuiteManifest& manifest, const CortexConfig& config, Mode mode, int n_rounds,
                                  Stores& stores, const BackendFactory& factory, const RunOptions& options = {});

// Runs the target suite with SRM and a library imported from `source_library`. With freeze the library
// is only read; otherwise it keeps learning and is written back to `output_library` (the source when empty).
RunRecord transfer_heuristics(const std::filesystem::path& source_library, const SuiteManifest& target,
                              const CortexConfig& config, bool freeze, const BackendFactory& factory,
                              const RunOptions& options = {}, const std::filesystem::path& output_library = {});

// Writes metrics.tsv, curve.tsv, episodes.tsv and summary.json.
void report(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir);
std::string metrics_table(const std::vector<RunRecord>& records);
std::string curve_table(const std::vector<RunRecord>& records);
std::string episodes_table(const std::vector<RunRecord>& records);
// Reconstructs records (without config snapshots) from an episodes.tsv file.
std::vector<RunRecord> load_records(const std::filesystem::path& run_dir);

}  // namespace evonav
