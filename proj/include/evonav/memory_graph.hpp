#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evonav/gridworld.hpp"

namespace evonav {

struct NodeId {
    std::uint32_t value = 0;
    auto operator<=>(const NodeId&) const = default;
};

using ObservationId = std::string;

enum class SubtaskStatus { Executed, Aborted };

struct RootNode {
    std::string episode_id;
    TaskKind task_kind = TaskKind::IGNav;
    GoalSpec goal;
    Outcome outcome = Outcome::Pending;
    int total_steps = 0;
    bool operator==(const RootNode&) const = default;
};

struct TrajectoryNode {
    int step_index = 0;
    std::string selected_plan_digest;
    ObservationId observation_ref;
    bool operator==(const TrajectoryNode&) const = default;
};

struct SubtaskNode {
    std::vector<Action> actions;
    std::string rationale;
    SubtaskStatus status = SubtaskStatus::Executed;
    ObservationId pre_observation;
    ObservationId post_observation;
    std::vector<Pose> pose_trace;             // actions.size() + 1 entries
    std::vector<std::string> visible_objects; // "<color> <category>" seen before the unit ran
    bool operator==(const SubtaskNode&) const = default;
};

using GraphNode = std::variant<RootNode, TrajectoryNode, SubtaskNode>;

// Per-episode experience record: a root, one trajectory node per decision step,
// subtask nodes under them, and a temporal chain linking subtasks in execution order.
class MemoryGraph {
public:
    MemoryGraph() = default;
    static MemoryGraph create(const std::string& episode_id, TaskKind task_kind, const GoalSpec& goal);

    NodeId root_id() const { return NodeId{0}; }
    const RootNode& root() const { return std::get<RootNode>(nodes_.front()); }
    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<std::pair<NodeId, NodeId>>& parent_child_edges() const { return parent_child_; }
    const std::vector<std::pair<NodeId, NodeId>>& temporal_edges() const { return temporal_; }
    const std::vector<NodeId>& subtask_ids() const { return subtask_order_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t subtask_count() const { return subtask_order_.size(); }
    bool finalized() const { return root().outcome != Outcome::Pending; }

    const GraphNode& node(NodeId id) const;
    const SubtaskNode& subtask(NodeId id) const;
    bool is_subtask(NodeId id) const;
    std::optional<NodeId> parent(NodeId id) const;
    // Step index of the trajectory node that owns a subtask.
    int step_of(NodeId subtask_id) const;

    // Attaches a subtask under the trajectory node for step_index, creating it if needed.
    NodeId append_subtask(int step_index, SubtaskNode subtask, std::string plan_digest = {},
                          ObservationId observation_ref = {});

    // Last min(w, count) subtasks in temporal order.
    std::vector<SubtaskNode> recent_window(int w) const;
    std::vector<NodeId> recent_window_ids(int w) const;

    // Start node followed by up to k temporal successors.
    std::vector<SubtaskNode> downstream_trajectory(NodeId start, int k) const;
    std::vector<NodeId> downstream_ids(NodeId start, int k) const;

    // total_steps defaults to the number of motion actions across all subtasks.
    void finalize(Outcome outcome, std::optional<int> total_steps = std::nullopt);

    // Every motion/terminal pose visited, boundary poses shared between consecutive subtasks counted once.
    std::vector<Pose> full_trace() const;

    bool operator==(const MemoryGraph&) const = default;

    // Throws ContractError when a structural invariant does not hold.
    void check_invariants() const;

    std::string serialize() const;
    static MemoryGraph deserialize(const std::string& bytes);

private:
    std::vector<GraphNode> nodes_;
    std::vector<std::pair<NodeId, NodeId>> parent_child_;
    std::vector<std::pair<NodeId, NodeId>> temporal_;
    std::vector<NodeId> subtask_order_;
    std::vector<NodeId> parent_of_;  // indexed by node id; root maps to itself
};

// Collapses consecutive repeats of the same cell.
std::vector<Cell> visited_cells(const std::vector<Pose>& trace);

}  // namespace evonav
