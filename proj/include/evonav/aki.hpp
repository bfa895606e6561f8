#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evonav/backends.hpp"
#include "evonav/types.hpp"

namespace evonav {

// Backend failures yield an empty list and a warning.
std::vector<Heuristic> extract_heuristics(HeuristicExtractorBackend& extractor, const MemoryGraph& graph,
                                          std::vector<std::string>* warnings = nullptr);

// Same pattern id and single-linkage text similarity of description + strategy >= threshold.
// Clusters and their members come back in a canonical order independent of input order.
std::vector<std::vector<Heuristic>> cluster(const std::vector<Heuristic>& heuristics, double threshold);

MergedHeuristic merge_cluster(const std::vector<Heuristic>& members, HeuristicMergerBackend& merger);

// Canonical member ordering used for clusters and merging.
bool heuristic_less(const Heuristic& a, const Heuristic& b);

class HeuristicLibrary {
public:
    const std::vector<Heuristic>& raw() const { return raw_; }
    // Sorted by pattern id, then description, then strategy.
    const std::vector<MergedHeuristic>& merged() const { return merged_; }

    // Appends to the raw log and recomputes the affected pattern groups from the whole log.
    void update(const std::vector<Heuristic>& heuristics, double threshold, HeuristicMergerBackend& merger);

    static HeuristicLibrary rebuild(const std::vector<Heuristic>& raw, double threshold, HeuristicMergerBackend& merger);

    // raw.log and merged.idx.
    void save(const std::filesystem::path& dir) const;
    // Appends only the records past the first `already_saved` raw entries, then rewrites the index.
    void append_save(const std::filesystem::path& dir, std::size_t already_saved) const;
    // Throws ParseError when the stored index disagrees with a recompute from the raw log.
    static HeuristicLibrary load(const std::filesystem::path& dir, double threshold, HeuristicMergerBackend& merger);

    bool operator==(const HeuristicLibrary&) const = default;

private:
    std::vector<Heuristic> raw_;
    std::vector<MergedHeuristic> merged_;
};

HeuristicLibrary update_library(HeuristicLibrary library, const std::vector<Heuristic>& heuristics, double threshold,
                                HeuristicMergerBackend& merger);

std::vector<MergedHeuristic> select_guidance(const HeuristicLibrary& library, double confidence_floor, int min_support,
                                             std::size_t cap = kHeuristicCap);

std::string encode_heuristic(const Heuristic& h);
Heuristic decode_heuristic(const std::string& line);
std::string encode_merged(const MergedHeuristic& m);

}  // namespace evonav
