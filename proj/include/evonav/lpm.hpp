#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evonav/backends.hpp"
#include "evonav/memory_graph.hpp"
#include "evonav/types.hpp"

namespace evonav {

inline constexpr std::size_t kEmbeddingDim = 64;
inline constexpr std::size_t kRetrieveTopN = 3;

// Goal-conditioned feature-hashed state embedding, L2-normalized.
Embedding embed_state(const GoalSpec& goal, const SubtaskNode& subtask);

// Query used at decision time: a subtask with only the current pose and visible objects.
Embedding query_embedding(const GoalSpec& goal, const Observation& obs);

// One principle per subtask from its downstream trajectory of k successors.
// Subtasks the analyzer fails on are skipped and noted in warnings.
std::vector<Principle> build_principles(const MemoryGraph& graph, PrincipleAnalyzerBackend& analyzer, int k,
                                        std::vector<std::string>* warnings = nullptr);

double embedding_distance(const Embedding& a, const Embedding& b);
// Mean of the subtask embeddings; the zero vector for a graph without subtasks.
Embedding mean_subtask_embedding(const MemoryGraph& graph);

// Indices (into the given list) of the failures kept for a goal with no successes.
std::vector<std::size_t> select_diverse_failures(const std::vector<MemoryGraph>& failures, int m);

class EpisodeBank {
public:
    // Per-goal episodes in commit order.
    const std::map<std::string, std::vector<MemoryGraph>>& episodes() const { return episodes_; }
    const std::vector<Principle>& principles() const { return principles_; }
    std::size_t size() const;
    bool contains(const std::string& episode_id) const;
    std::vector<MemoryGraph> trajectories(const std::string& goal_digest) const;

    void commit(MemoryGraph graph, std::vector<Principle> principles, int max_per_goal);
    void consolidate(const std::string& goal_digest, int max_per_goal);
    std::vector<std::pair<Principle, double>> retrieve(const Embedding& query, double threshold,
                                                       std::size_t top_n = kRetrieveTopN) const;

    // Directory layout: episodes/<id>.mem, index.txt, principles.txt.
    void save(const std::filesystem::path& dir) const;
    static EpisodeBank load(const std::filesystem::path& dir);

    bool operator==(const EpisodeBank&) const = default;

private:
    std::map<std::string, std::vector<MemoryGraph>> episodes_;
    std::vector<Principle> principles_;
};

std::vector<std::pair<Principle, double>> retrieve(const EpisodeBank& bank, const Embedding& query, double threshold,
                                                   std::size_t top_n = kRetrieveTopN);
EpisodeBank consolidate(EpisodeBank bank, const std::string& goal_digest, int max_per_goal);
EpisodeBank commit_episode(EpisodeBank bank, MemoryGraph graph, std::vector<Principle> principles, int max_per_goal);

}  // namespace evonav
