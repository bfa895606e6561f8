#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "evonav/remote.hpp"

namespace evonav::testing {

inline RemoteSettings fixture_settings() {
    RemoteSettings s;
    s.base_url = "http://fixture.invalid";
    s.model = "fixture-model";
    s.max_attempts = 3;
    s.initial_backoff = std::chrono::milliseconds(1);
    return s;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string chat_reply(const std::string& content) {
    std::string escaped;
    for (char c : content) {
        if (c == '"' || c == '\\') escaped += '\\';
        if (c == '\n') {
            escaped += "\\n";
            continue;
        }
        escaped += c;
    }
    return R"({"choices":[{"message":{"role":"assistant","content":")" + escaped + R"("}}]})";
}

inline std::string fenced(const std::string& json_text) { return "Here you go.\n```json\n" + json_text + "\n```\n"; }

// Fixed inputs for the seven request bodies; every value is spelled out so the bodies never
// depend on a random generator or map generator.
struct RemoteScenario {
    GoalSpec goal;
    Observation obs;
    PlannerContext context;
    std::vector<SubtaskUnit> units;
    Rollout rollout;
    std::vector<SubtaskNode> window;
    MemoryGraph graph;
    std::vector<Heuristic> cluster;

    RemoteScenario() {
        goal.kind = TaskKind::IGNav;
        goal.map_seed = 1150;
        goal.target = {12, 7};
        goal.goal_heading = 4;
        goal.signature = "5f3a9c01";

        obs.agent_pose = {3, 4, 4};
        obs.step = 6;
        obs.visible_cells = {{{4, 4}, Occupancy::Free}, {{5, 4}, Occupancy::Free}, {{6, 4}, Occupancy::Wall}};
        obs.visible_objects = {{{5, 4}, "chair", "red"}};

        context = make_context(goal, 20, 20);
        context.known.integrate(obs);
        ReflectionSummary r;
        r.progress_assessment = Progress::Stalled;
        r.failure_patterns = {kOscillation};
        r.subgoal_context = "around (4,4)";
        r.recommendations = {"commit to one frontier"};
        r.window_span = {3, 7};
        context.recent_reflection = r;
        MergedHeuristic mh;
        mh.pattern_id = kDoorFirst;
        mh.description = "room changes through a doorway preceded reaching the goal";
        mh.strategy = "prefer frontiers next to doorways";
        mh.confidence = 0.75;
        mh.support = 3;
        mh.success_count = 3;
        mh.provenance = {"r1-ignav-001", "r1-ignav-004", "r2-ignav-001"};
        context.active_heuristics = {mh};
        Principle p;
        p.kind = PrincipleKind::Guiding;
        p.text = "in the hall, moving east led to goal 1a2b3c4d at (12,7)";
        p.source_episode = "r1-ignav-001";
        context.retrieved_principles = {p};
        context.step = 6;

        units = {{{Action::forward(), Action::forward()}, "approach the doorway"},
                 {{Action::right(), Action::forward()}, "enter the kitchen"}};

        Observation o1 = obs;
        o1.agent_pose = {4, 4, 4};
        o1.step = 7;
        Observation o2 = obs;
        o2.agent_pose = {5, 4, 4};
        o2.step = 8;
        rollout.predicted_observations = {o1, o2};
        rollout.source_plan_index = 1;

        SubtaskNode a;
        a.actions = {Action::forward(), Action::forward()};
        a.pose_trace = {{3, 4, 4}, {4, 4, 4}, {5, 4, 4}};
        a.rationale = "approach the doorway";
        a.pre_observation = "obs-6";
        a.post_observation = "obs-8";
        a.visible_objects = {"red chair"};
        SubtaskNode b;
        b.actions = {Action::right(), Action::forward()};
        b.pose_trace = {{5, 4, 4}, {5, 4, 5}, {6, 5, 5}};
        b.rationale = "enter the kitchen";
        b.status = SubtaskStatus::Aborted;
        b.pre_observation = "obs-8";
        b.post_observation = "obs-10";
        window = {a, b};

        graph = MemoryGraph::create("r1-ignav-007", TaskKind::IGNav, goal);
        graph.append_subtask(0, a, "plan-a", "obs-6");
        graph.append_subtask(1, b, "plan-b", "obs-8");
        graph.finalize(Outcome::Failure);

        cluster = {Heuristic{kOscillation, "agent revisits the same cells", "commit to one frontier", 0.6,
                             Outcome::Failure, "r1-ignav-002"},
                   Heuristic{kOscillation, "agent revisits cells near a wall", "commit to the nearest frontier", 0.8,
                             Outcome::Failure, "r1-ignav-005"}};
    }

    std::vector<std::pair<Role, std::string>> payloads() const {
        return {{Role::Planner, planner_payload(obs, goal, context, 3, 4)},
                {Role::WorldModel, world_model_payload(obs, units, 4, 99)},
                {Role::Evaluator, evaluator_payload(rollout, goal, context.known)},
                {Role::SrmAnalyzer, srm_payload(window, goal, context.active_heuristics)},
                {Role::PrincipleAnalyzer, principle_payload(window, Outcome::Success, goal)},
                {Role::HeuristicExtractor, extractor_payload(graph)},
                {Role::HeuristicMerger, merger_payload(cluster)}};
    }
};

inline std::filesystem::path golden_path(Role role) {
    return std::filesystem::path(EVONAV_FIXTURES) / "remote" / (to_string(role) + ".request.json");
}

// A stream of bodies that each role must reject with a typed parse error.
struct MalformedCase {
    std::string name;
    Role role;
    std::string body;
};

inline std::vector<MalformedCase> malformed_cases() {
    namespace fs = std::filesystem;
    std::vector<MalformedCase> out;
    const fs::path dir = fs::path(EVONAV_FIXTURES) / "remote" / "malformed";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string stem = f.stem().string();
        const std::string role_name = stem.substr(0, stem.find('.'));
        for (Role r : all_roles())
            if (to_string(r) == role_name) out.push_back({stem, r, read_file(f)});
    }
    return out;
}

// Sends one malformed body through the matching remote backend; true when it raised RemoteResponseError.
inline bool rejects_as_parse_error(const MalformedCase& c, const RemoteScenario& s) {
    auto transport = std::make_shared<ScriptedTransport>();
    transport->push_ok(c.body);
    auto client = std::make_shared<RemoteClient>(fixture_settings(), transport, [](std::chrono::milliseconds) {});
    BackendSet b = make_remote_backends(client);
    try {
        switch (c.role) {
            case Role::Planner: b.planner->propose(s.obs, s.goal, s.context, 3, 4); break;
            case Role::WorldModel: b.world_model->predict(s.obs, s.units, 4, 99); break;
            case Role::Evaluator: b.evaluator->score(s.rollout, s.goal, s.context.known); break;
            case Role::SrmAnalyzer: b.srm_analyzer->analyze(s.window, s.goal, {}); break;
            case Role::PrincipleAnalyzer: b.principle_analyzer->analyze(s.window, Outcome::Success, s.goal); break;
            case Role::HeuristicExtractor: b.extractor->extract(s.graph); break;
            case Role::HeuristicMerger: b.merger->merge(s.cluster); break;
        }
    } catch (const RemoteResponseError& e) {
        return e.role() == c.role;
    } catch (...) {
        return false;
    }
    return false;
}

}  // namespace evonav::testing
