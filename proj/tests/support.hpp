#pragma once

#include <random>
#include <string>
#include <vector>

#include "evonav/memory_graph.hpp"

namespace evonav::testing {

inline SubtaskNode random_subtask(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(1, 5);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_int_distribution<int> coord(0, 19);
    std::uniform_int_distribution<int> heading(0, 15);
    SubtaskNode s;
    int n = len(rng);
    Pose p{coord(rng), coord(rng), heading(rng)};
    s.pose_trace.push_back(p);
    for (int i = 0; i < n; ++i) {
        int k = kind(rng);
        s.actions.push_back(k == 0 ? Action::forward() : k == 1 ? Action::left() : Action::right());
        p.heading = (p.heading + (k == 1 ? 15 : k == 2 ? 1 : 0)) % 16;
        if (k == 0) p.x = (p.x + 1) % 20;
        s.pose_trace.push_back(p);
    }
    s.rationale = "reach frontier " + std::to_string(coord(rng));
    s.status = (rng() % 5 == 0) ? SubtaskStatus::Aborted : SubtaskStatus::Executed;
    s.pre_observation = "obs" + std::to_string(rng() % 1000);
    s.post_observation = "obs" + std::to_string(rng() % 1000);
    if (rng() % 2) s.visible_objects = {"red chair", "blue table"};
    return s;
}

// Random graph with `count` subtasks spread over non-decreasing steps.
inline MemoryGraph random_graph(std::mt19937_64& rng, int count, const std::string& id = "ep-0") {
    GoalSpec goal;
    goal.target = {3, 4};
    MemoryGraph g = MemoryGraph::create(id, TaskKind::IGNav, goal);
    int step = 0;
    for (int i = 0; i < count; ++i) {
        if (rng() % 2) ++step;
        g.append_subtask(step, random_subtask(rng), "plan" + std::to_string(step), "obs" + std::to_string(step));
    }
    return g;
}

}  // namespace evonav::testing

#include "evonav/types.hpp"

namespace evonav::testing {

// Heuristic logs drawn from a small vocabulary so clusters of several members form.
inline Heuristic random_heuristic(std::mt19937_64& rng) {
    static const std::vector<std::string> patterns{"OSCILLATION", "DOOR_FIRST", "COLLISION_STREAK", "DIRECT_APPROACH"};
    static const std::vector<std::string> words{"agent", "revisits", "doorway", "corridor", "turns", "wall",
                                                "goal", "frontier", "backtracks", "room", "north", "east"};
    Heuristic h;
    h.pattern_id = patterns[rng() % patterns.size()];
    auto phrase = [&](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += (i ? " " : "") + words[rng() % words.size()];
        return s;
    };
    const int variant = static_cast<int>(rng() % 3);
    h.description = variant == 0 ? "agent revisits the same cells" : phrase(4);
    h.strategy = variant == 0 ? "commit to one frontier" : phrase(3);
    h.confidence = static_cast<double>(rng() % 11) / 10.0;
    h.outcome_tag = rng() % 2 ? Outcome::Success : Outcome::Failure;
    h.source_episode = "ep" + std::to_string(rng() % 50);
    return h;
}

}  // namespace evonav::testing
