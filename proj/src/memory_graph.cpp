#include "evonav/memory_graph.hpp"

#include <algorithm>
#include <sstream>

#include "evonav/error.hpp"
#include "evonav/text.hpp"

namespace evonav {

MemoryGraph MemoryGraph::create(const std::string& episode_id, TaskKind task_kind, const GoalSpec& goal) {
    if (episode_id.empty()) throw ContractError("episode_id must be non-empty");
    MemoryGraph g;
    RootNode root;
    root.episode_id = episode_id;
    root.task_kind = task_kind;
    root.goal = goal;
    g.nodes_.emplace_back(std::move(root));
    g.parent_of_.push_back(NodeId{0});
    return g;
}

const GraphNode& MemoryGraph::node(NodeId id) const {
    if (id.value >= nodes_.size()) throw ContractError("unknown node id " + std::to_string(id.value));
    return nodes_[id.value];
}

bool MemoryGraph::is_subtask(NodeId id) const {
    return id.value < nodes_.size() && std::holds_alternative<SubtaskNode>(nodes_[id.value]);
}

const SubtaskNode& MemoryGraph::subtask(NodeId id) const {
    if (!is_subtask(id)) throw ContractError("not a subtask node");
    return std::get<SubtaskNode>(nodes_[id.value]);
}

std::optional<NodeId> MemoryGraph::parent(NodeId id) const {
    if (id.value == 0 || id.value >= parent_of_.size()) return std::nullopt;
    return parent_of_[id.value];
}

int MemoryGraph::step_of(NodeId subtask_id) const {
    if (!is_subtask(subtask_id)) throw ContractError("not a subtask node");
    return std::get<TrajectoryNode>(nodes_[parent_of_[subtask_id.value].value]).step_index;
}

NodeId MemoryGraph::append_subtask(int step_index, SubtaskNode subtask, std::string plan_digest,
                                   ObservationId observation_ref) {
    if (nodes_.empty()) throw ContractError("graph has no root");
    if (finalized()) throw ContractError("episode closed");
    if (subtask.actions.empty()) throw ContractError("subtask actions must be non-empty");
    if (subtask.pose_trace.size() != subtask.actions.size() + 1)
        throw ContractError("pose_trace length must equal actions + 1");

    // most recent trajectory node
    std::optional<NodeId> last_traj;
    for (auto it = parent_child_.rbegin(); it != parent_child_.rend(); ++it) {
        if (it->first.value == 0) {
            last_traj = it->second;
            break;
        }
    }
    NodeId traj_id;
    if (last_traj) {
        const int last_step = std::get<TrajectoryNode>(nodes_[last_traj->value]).step_index;
        if (step_index < last_step) throw ContractError("non-monotonic step_index");
        if (step_index == last_step) traj_id = *last_traj;
    }
    if (!last_traj || std::get<TrajectoryNode>(nodes_[last_traj->value]).step_index != step_index) {
        if (step_index < 0) throw ContractError("non-monotonic step_index");
        traj_id = NodeId{static_cast<std::uint32_t>(nodes_.size())};
        nodes_.emplace_back(TrajectoryNode{step_index, std::move(plan_digest), std::move(observation_ref)});
        parent_of_.push_back(root_id());
        parent_child_.emplace_back(root_id(), traj_id);
    }
    const NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.emplace_back(std::move(subtask));
    parent_of_.push_back(traj_id);
    parent_child_.emplace_back(traj_id, id);
    if (!subtask_order_.empty()) temporal_.emplace_back(subtask_order_.back(), id);
    subtask_order_.push_back(id);
    return id;
}

std::vector<NodeId> MemoryGraph::recent_window_ids(int w) const {
    if (w < 1) throw ContractError("window size must be >= 1");
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(w), subtask_order_.size());
    return {subtask_order_.end() - static_cast<std::ptrdiff_t>(n), subtask_order_.end()};
}

std::vector<SubtaskNode> MemoryGraph::recent_window(int w) const {
    std::vector<SubtaskNode> out;
    for (NodeId id : recent_window_ids(w)) out.push_back(subtask(id));
    return out;
}

std::vector<NodeId> MemoryGraph::downstream_ids(NodeId start, int k) const {
    if (!is_subtask(start)) throw ContractError("not a subtask node");
    if (k < 0) throw ContractError("horizon must be >= 0");
    const auto it = std::find(subtask_order_.begin(), subtask_order_.end(), start);
    const auto remaining = static_cast<std::size_t>(subtask_order_.end() - it);
    const std::size_t n = std::min<std::size_t>(remaining, static_cast<std::size_t>(k) + 1);
    return {it, it + static_cast<std::ptrdiff_t>(n)};
}

std::vector<SubtaskNode> MemoryGraph::downstream_trajectory(NodeId start, int k) const {
    std::vector<SubtaskNode> out;
    for (NodeId id : downstream_ids(start, k)) out.push_back(subtask(id));
    return out;
}

void MemoryGraph::finalize(Outcome outcome, std::optional<int> total_steps) {
    if (nodes_.empty()) throw ContractError("graph has no root");
    if (finalized()) throw ContractError("already finalized");
    if (outcome == Outcome::Pending) throw ContractError("outcome must be SUCCESS or FAILURE");
    auto& root = std::get<RootNode>(nodes_.front());
    root.outcome = outcome;
    if (total_steps) {
        root.total_steps = *total_steps;
    } else {
        int steps = 0;
        for (NodeId id : subtask_order_)
            for (const auto& a : subtask(id).actions) steps += a.is_motion() ? 1 : 0;
        root.total_steps = steps;
    }
}

std::vector<Pose> MemoryGraph::full_trace() const {
    std::vector<Pose> out;
    for (NodeId id : subtask_order_) {
        const auto& trace = subtask(id).pose_trace;
        out.insert(out.end(), trace.begin() + (out.empty() ? 0 : 1), trace.end());
    }
    return out;
}

std::vector<Cell> visited_cells(const std::vector<Pose>& trace) {
    std::vector<Cell> out;
    for (const auto& p : trace)
        if (out.empty() || out.back() != p.cell()) out.push_back(p.cell());
    return out;
}

void MemoryGraph::check_invariants() const {
    if (nodes_.empty() || !std::holds_alternative<RootNode>(nodes_.front())) throw ContractError("missing root");
    if (parent_child_.size() + 1 != nodes_.size()) throw ContractError("tree property violated");
    std::vector<int> parents(nodes_.size(), 0);
    int last_step = -1;
    for (const auto& [p, c] : parent_child_) {
        if (p.value >= nodes_.size() || c.value >= nodes_.size() || c.value == 0)
            throw ContractError("edge references unknown node");
        if (p.value >= c.value) throw ContractError("parent must precede child");
        if (++parents[c.value] > 1) throw ContractError("node has more than one parent");
        const auto& child = nodes_[c.value];
        if (std::holds_alternative<TrajectoryNode>(child)) {
            if (p.value != 0) throw ContractError("trajectory node must hang off the root");
            const int s = std::get<TrajectoryNode>(child).step_index;
            if (s <= last_step) throw ContractError("trajectory step indices must increase");
            last_step = s;
        } else if (std::holds_alternative<SubtaskNode>(child)) {
            if (!std::holds_alternative<TrajectoryNode>(nodes_[p.value]))
                throw ContractError("subtask node must hang off a trajectory node");
        } else {
            throw ContractError("root cannot be a child");
        }
    }
    std::size_t n_sub = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (std::holds_alternative<SubtaskNode>(nodes_[i])) {
            ++n_sub;
            const auto& s = std::get<SubtaskNode>(nodes_[i]);
            if (s.actions.empty() || s.pose_trace.size() != s.actions.size() + 1)
                throw ContractError("subtask " + std::to_string(i) + " is malformed");
        }
    }
    if (n_sub != subtask_order_.size()) throw ContractError("subtask order incomplete");
    if (temporal_.size() != (n_sub == 0 ? 0 : n_sub - 1)) throw ContractError("temporal chain size mismatch");
    for (std::size_t i = 0; i < temporal_.size(); ++i)
        if (temporal_[i].first != subtask_order_[i] || temporal_[i].second != subtask_order_[i + 1])
            throw ContractError("temporal chain broken");
    for (std::size_t i = 1; i < subtask_order_.size(); ++i)
        if (subtask_order_[i] <= subtask_order_[i - 1]) throw ContractError("temporal chain out of order");
}

// ---------------------------------------------------------------- serialization
//
// One whitespace-separated record per line; free text is escaped so every field is a single token.

namespace {

std::string join_actions(const std::vector<Action>& actions) {
    std::string out;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (i) out += ';';
        out += text::escape(to_string(actions[i]));
    }
    return out;
}

std::string join_poses(const std::vector<Pose>& poses) {
    std::string out;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(poses[i].x) + ':' + std::to_string(poses[i].y) + ':' + std::to_string(poses[i].heading);
    }
    return out;
}

std::string join_strings(const std::vector<std::string>& items) {
    if (items.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ';';
        out += text::escape(items[i]);
    }
    return out;
}

}  // namespace

std::string MemoryGraph::serialize() const {
    std::ostringstream out;
    out << "evonav-mem 1\n";
    const auto& r = root();
    out << "root " << text::escape(r.episode_id) << ' ' << to_string(r.task_kind) << ' ' << to_string(r.outcome)
        << ' ' << r.total_steps << ' ' << encode_goal(r.goal) << "\n";
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (const auto* t = std::get_if<TrajectoryNode>(&nodes_[i])) {
            out << "traj " << i << ' ' << t->step_index << ' ' << text::escape(t->selected_plan_digest) << ' '
                << text::escape(t->observation_ref) << "\n";
        } else {
            const auto& s = std::get<SubtaskNode>(nodes_[i]);
            out << "sub " << i << ' ' << (s.status == SubtaskStatus::Executed ? "EXECUTED" : "ABORTED") << ' '
                << text::escape(s.pre_observation) << ' ' << text::escape(s.post_observation) << ' '
                << join_actions(s.actions) << ' ' << join_poses(s.pose_trace) << ' ' << join_strings(s.visible_objects)
                << ' ' << text::escape(s.rationale) << "\n";
        }
    }
    for (const auto& [p, c] : parent_child_) out << "edge " << p.value << ' ' << c.value << "\n";
    for (const auto& [a, b] : temporal_) out << "temporal " << a.value << ' ' << b.value << "\n";
    out << "end\n";
    return out.str();
}

MemoryGraph MemoryGraph::deserialize(const std::string& bytes) {
    MemoryGraph g;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool saw_end = false;
    auto fail = [&](const std::string& what, std::size_t offset) -> ParseError {
        return ParseError("line " + std::to_string(line_no) + ": " + what, offset);
    };
    while (pos < bytes.size()) {
        const std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos) throw fail("record not newline-terminated", bytes.size());
        const std::string line = bytes.substr(pos, nl - pos);
        const std::size_t line_offset = pos;
        pos = nl + 1;
        ++line_no;
        if (saw_end) throw fail("data after end record", line_offset);
        std::istringstream in(line);
        std::string kind;
        in >> kind;
        try {
            if (line_no == 1) {
                if (line != "evonav-mem 1") throw fail("bad header", line_offset);
                continue;
            }
            if (kind == "root") {
                if (!g.nodes_.empty()) throw fail("duplicate root", line_offset);
                std::string id, task, outcome, goal;
                int steps;
                if (!(in >> id >> task >> outcome >> steps >> goal)) throw fail("malformed root record", line_offset);
                RootNode r{text::unescape(id), parse_task_kind(task), decode_goal(goal), parse_outcome(outcome), steps};
                g.nodes_.emplace_back(std::move(r));
                g.parent_of_.push_back(NodeId{0});
            } else if (kind == "traj" || kind == "sub") {
                std::size_t id;
                if (!(in >> id) || id != g.nodes_.size() || g.nodes_.empty())
                    throw fail("node ids must be dense and follow the root", line_offset);
                if (kind == "traj") {
                    TrajectoryNode t;
                    std::string digest, obs;
                    if (!(in >> t.step_index >> digest >> obs)) throw fail("malformed traj record", line_offset);
                    t.selected_plan_digest = text::unescape(digest);
                    t.observation_ref = text::unescape(obs);
                    g.nodes_.emplace_back(std::move(t));
                } else {
                    SubtaskNode s;
                    std::string status, pre, post, actions, poses, objects, rationale;
                    if (!(in >> status >> pre >> post >> actions >> poses >> objects >> rationale))
                        throw fail("malformed sub record", line_offset);
                    if (status == "EXECUTED") s.status = SubtaskStatus::Executed;
                    else if (status == "ABORTED") s.status = SubtaskStatus::Aborted;
                    else throw fail("bad status", line_offset);
                    s.pre_observation = text::unescape(pre);
                    s.post_observation = text::unescape(post);
                    for (const auto& a : text::split(actions, ';')) s.actions.push_back(parse_action(text::unescape(a)));
                    for (const auto& p : text::split(poses, ';')) {
                        const auto f = text::split(p, ':');
                        if (f.size() != 3) throw fail("bad pose", line_offset);
                        s.pose_trace.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2])});
                    }
                    if (objects != "-")
                        for (const auto& o : text::split(objects, ';')) s.visible_objects.push_back(text::unescape(o));
                    s.rationale = text::unescape(rationale);
                    g.nodes_.emplace_back(std::move(s));
                }
                g.parent_of_.push_back(NodeId{0});
            } else if (kind == "edge" || kind == "temporal") {
                std::uint32_t a, b;
                if (!(in >> a >> b)) throw fail("malformed " + kind + " record", line_offset);
                if (a >= g.nodes_.size() || b >= g.nodes_.size()) throw fail("edge references unknown node", line_offset);
                if (kind == "edge") {
                    g.parent_child_.emplace_back(NodeId{a}, NodeId{b});
                    g.parent_of_[b] = NodeId{a};
                } else {
                    g.temporal_.emplace_back(NodeId{a}, NodeId{b});
                }
            } else if (kind == "end") {
                saw_end = true;
            } else {
                throw fail("unknown record '" + kind + "'", line_offset);
            }
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw fail(e.what(), line_offset);
        }
    }
    if (!saw_end) throw ParseError("line " + std::to_string(line_no) + ": truncated stream, missing end record", bytes.size());
    if (g.nodes_.empty()) throw ParseError("no root record", bytes.size());
    for (std::size_t i = 0; i < g.nodes_.size(); ++i)
        if (std::holds_alternative<SubtaskNode>(g.nodes_[i])) g.subtask_order_.push_back(NodeId{static_cast<std::uint32_t>(i)});
    try {
        g.check_invariants();
    } catch (const ContractError& e) {
        throw ParseError(std::string("invalid graph: ") + e.what(), bytes.size());
    }
    return g;
}

}  // namespace evonav
