#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <map>
#include <regex>
#include <set>

#include "evonav/backends.hpp"
#include "evonav/error.hpp"
#include "evonav/rng.hpp"
#include "evonav/text.hpp"

namespace evonav {

namespace {

constexpr int kInf = std::numeric_limits<int>::max() / 4;

int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

int turn_distance(int from, int to) {
    const int d = ((to - from) % kHeadings + kHeadings) % kHeadings;
    return std::min(d, kHeadings - d);
}

Cell neighbour(Cell c, int direction) {
    const Cell d = direction_delta(direction);
    return {c.x + d.x, c.y + d.y};
}

// Same geometry as observe(), but over the agent's partial map with unknown cells treated as open.
bool predicted_in_view(const KnownMap& known, const Pose& pose, Cell target, int range) {
    const int dx = target.x - pose.x, dy = target.y - pose.y;
    const int d2 = dx * dx + dy * dy;
    if (d2 == 0) return true;
    if (d2 > kViewRange * kViewRange || chebyshev(pose.cell(), target) > range) return false;
    const double theta = (pose.heading % kHeadings) * (M_PI / 8.0);
    const double hx = std::sin(theta), hy = -std::cos(theta);
    if (dx * hx + dy * hy < std::sqrt(static_cast<double>(d2)) * std::sqrt(0.5) - 1e-9) return false;
    int x0 = pose.x, y0 = pose.y;
    const int adx = std::abs(dx), ady = -std::abs(dy);
    const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
    int err = adx + ady;
    while (true) {
        if (x0 == target.x && y0 == target.y) return true;
        if (!(x0 == pose.x && y0 == pose.y) && known.state({x0, y0}) == 1) return false;
        const int e2 = 2 * err;
        if (e2 >= ady) {
            err += ady;
            x0 += sx;
        }
        if (e2 <= adx) {
            err += adx;
            y0 += sy;
        }
    }
}

struct StateIndex {
    int width, height;
    std::size_t operator()(Cell c, int h) const {
        return (static_cast<std::size_t>(c.y) * width + c.x) * kHeadings + h;
    }
    std::size_t size() const { return static_cast<std::size_t>(width) * height * kHeadings; }
};

// Breadth-first search over (cell, heading) with unit-cost actions.
struct PoseSearch {
    StateIndex idx;
    std::vector<int> dist;
    std::vector<std::size_t> parent;
    std::vector<Action> via;

    PoseSearch(const KnownMap& known, const Pose& start, const std::function<bool(Cell)>& passable, int max_depth)
        : idx{known.width(), known.height()},
          dist(idx.size(), -1),
          parent(idx.size(), 0),
          via(idx.size()) {
        std::deque<Pose> q;
        const std::size_t s = idx(start.cell(), start.heading);
        dist[s] = 0;
        q.push_back(start);
        while (!q.empty()) {
            const Pose p = q.front();
            q.pop_front();
            const std::size_t pi = idx(p.cell(), p.heading);
            if (max_depth >= 0 && dist[pi] >= max_depth) continue;
            const std::array<Action, 3> actions = {Action::forward(), Action::right(), Action::left()};
            for (const auto& a : actions) {
                Pose n = p;
                if (a.kind == ActionKind::Forward) {
                    const Cell c = neighbour(p.cell(), move_direction(p.heading));
                    if (!passable(c)) continue;
                    n.x = c.x;
                    n.y = c.y;
                } else {
                    n.heading = (p.heading + (a.kind == ActionKind::TurnRight ? 1 : kHeadings - 1)) % kHeadings;
                }
                const std::size_t ni = idx(n.cell(), n.heading);
                if (dist[ni] >= 0) continue;
                dist[ni] = dist[pi] + 1;
                parent[ni] = pi;
                via[ni] = a;
                q.push_back(n);
            }
        }
    }

    // Cheapest heading at a cell, or -1.
    int best_heading(Cell c) const {
        int best = -1;
        for (int h = 0; h < kHeadings; ++h) {
            const int d = dist[idx(c, h)];
            if (d >= 0 && (best < 0 || d < dist[idx(c, best)])) best = h;
        }
        return best;
    }

    std::vector<Action> path_to(Cell c, int h) const {
        std::vector<Action> out;
        std::size_t i = idx(c, h);
        while (dist[i] > 0) {
            out.push_back(via[i]);
            i = parent[i];
        }
        std::reverse(out.begin(), out.end());
        return out;
    }
};

Pose simulate(Pose p, const std::vector<Action>& actions) {
    for (const auto& a : actions) {
        if (a.kind == ActionKind::TurnLeft) p.heading = (p.heading + kHeadings - 1) % kHeadings;
        else if (a.kind == ActionKind::TurnRight) p.heading = (p.heading + 1) % kHeadings;
        else if (a.kind == ActionKind::Forward) {
            const Cell c = neighbour(p.cell(), move_direction(p.heading));
            p.x = c.x;
            p.y = c.y;
        }
    }
    return p;
}

std::optional<int> first_move_direction(const Pose& start, const std::vector<Action>& actions) {
    Pose p = start;
    for (const auto& a : actions) {
        if (a.kind == ActionKind::Forward) return move_direction(p.heading);
        p = simulate(p, {a});
    }
    return std::nullopt;
}

std::string fmt_cell(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

// One rationale per maximal run of turns followed by forwards; a terminal action gets its own.
std::vector<std::string> segment_rationales(const Pose& start, const std::vector<Action>& actions,
                                            const std::string& purpose) {
    std::vector<std::string> out;
    Pose p = start;
    std::size_t i = 0;
    while (i < actions.size()) {
        const Action& a = actions[i];
        if (a.kind == ActionKind::Stop) {
            out.push_back("stop here, the goal view matches");
            ++i;
            continue;
        }
        if (a.kind == ActionKind::Answer) {
            out.push_back("answer \"" + a.text + "\" from the current view");
            ++i;
            continue;
        }
        int turns = 0, forwards = 0;
        int net = 0;
        while (i < actions.size() && (actions[i].kind == ActionKind::TurnLeft || actions[i].kind == ActionKind::TurnRight)) {
            net += actions[i].kind == ActionKind::TurnRight ? 1 : -1;
            p = simulate(p, {actions[i]});
            ++turns;
            ++i;
        }
        const int dir = move_direction(p.heading);
        while (i < actions.size() && actions[i].kind == ActionKind::Forward) {
            p = simulate(p, {actions[i]});
            ++forwards;
            ++i;
        }
        if (forwards == 0) {
            out.push_back(std::string("turn ") + (net >= 0 ? "right" : "left") + " to scan " + purpose);
        } else {
            std::string r = "head " + direction_name(dir) + " " + std::to_string(forwards) +
                            (forwards == 1 ? " cell" : " cells") + " toward " + purpose;
            if (turns > 0) r = std::string("turn ") + (net >= 0 ? "right" : "left") + " and " + r;
            out.push_back(r);
        }
    }
    return out;
}

CandidatePlan make_plan(const Pose& start, std::vector<Action> actions, const std::string& purpose,
                        std::optional<Cell> target) {
    CandidatePlan p;
    p.reasoning = segment_rationales(start, actions, purpose);
    p.actions = std::move(actions);
    p.target = target;
    return p;
}

bool door_like(const KnownMap& known, Cell c) {
    if (!known.known_free(c)) return false;
    const bool ew = known.state({c.x - 1, c.y}) == 1 && known.state({c.x + 1, c.y}) == 1;
    const bool ns = known.state({c.x, c.y - 1}) == 1 && known.state({c.x, c.y + 1}) == 1;
    return ew || ns;
}

std::optional<Action> terminal_for(const GoalSpec& goal, const KnownMap& known, Cell target) {
    switch (goal.kind) {
        case TaskKind::IGNav: return Action::stop();
        case TaskKind::AR:
            if (auto it = known.seen_objects().find(target); it != known.seen_objects().end())
                return Action::answer(it->second.category);
            return std::nullopt;
        case TaskKind::AEQA:
            if (auto it = known.seen_objects().find(target); it != known.seen_objects().end())
                return Action::answer(it->second.color + " " + it->second.category);
            return std::nullopt;
    }
    return std::nullopt;
}

// Route toward a localized target using only distance-reducing moves, taking as much
// progress as the length limit allows.
std::optional<CandidatePlan> goal_plan(const Pose& start, const GoalSpec& goal, const TargetEstimate& est,
                                       const KnownMap& known, bool prefer_known, int limit) {
    const int W = known.width(), H = known.height();
    auto optimistic = [&](Cell c) { return known.state(c) != 1; };
    auto known_only = [&](Cell c) { return known.known_free(c) || c == est.cell; };
    std::vector<int> D;
    if (prefer_known) {
        D = bfs_distances(W, H, known_only, est.cell);
        if (D[static_cast<std::size_t>(start.y) * W + start.x] < 0) D.clear();
    }
    if (D.empty()) D = bfs_distances(W, H, optimistic, est.cell);
    auto dist_at = [&](Cell c) -> int {
        if (c.x < 0 || c.y < 0 || c.x >= W || c.y >= H) return -1;
        return D[static_cast<std::size_t>(c.y) * W + c.x];
    };
    if (dist_at(start.cell()) < 0) return std::nullopt;

    const int range = goal.kind == TaskKind::AR ? kRecognitionRange : kViewRange;
    auto reached = [&](const Pose& p) {
        if (goal.kind == TaskKind::IGNav) return p.cell() == est.cell;
        return predicted_in_view(known, p, est.cell, range);
    };

    // C(cell, heading): fewest actions to finish using distance-reducing moves only.
    StateIndex idx{W, H};
    std::vector<int> C(idx.size(), kInf);
    std::vector<Cell> order;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (dist_at({x, y}) >= 0) order.push_back({x, y});
    std::stable_sort(order.begin(), order.end(), [&](Cell a, Cell b) { return dist_at(a) < dist_at(b); });
    for (const Cell c : order) {
        for (int h = 0; h < kHeadings; ++h) {
            if (reached({c.x, c.y, h}) || dist_at(c) == 0) {
                C[idx(c, h)] = 0;
                continue;
            }
            int best = kInf;
            for (int dir = 0; dir < 8; ++dir) {
                const Cell n = neighbour(c, dir);
                const int dn = dist_at(n);
                if (dn < 0 || dn >= dist_at(c)) continue;
                for (int h2 = 2 * dir; h2 <= 2 * dir + 1; ++h2)
                    best = std::min(best, turn_distance(h, h2) + 1 + C[idx(n, h2)]);
            }
            C[idx(c, h)] = best;
        }
    }
    // The cell-level zero covers targets that never come into view; refine headings there.
    for (int h = 0; h < kHeadings; ++h) {
        const Cell c = est.cell;
        if (reached({c.x, c.y, h})) continue;
        int best = kInf;
        for (int h2 = 0; h2 < kHeadings; ++h2)
            if (reached({c.x, c.y, h2})) best = std::min(best, turn_distance(h, h2));
        if (best < kInf) C[idx(c, h)] = best;
    }

    auto progress_ok = [&](Cell from, Cell to) {
        const int a = dist_at(from), b = dist_at(to);
        return b >= 0 && b < a;
    };
    // Breadth-first over states reachable with distance-reducing forwards.
    std::vector<int> t(idx.size(), -1);
    std::vector<std::size_t> parent(idx.size(), 0);
    std::vector<Action> via(idx.size());
    std::deque<Pose> q;
    t[idx(start.cell(), start.heading)] = 0;
    q.push_back(start);
    std::optional<Pose> hit;
    Pose best_end = start;
    auto key = [&](const Pose& p) {
        return std::make_tuple(dist_at(p.cell()), C[idx(p.cell(), p.heading)], t[idx(p.cell(), p.heading)]);
    };
    while (!q.empty()) {
        const Pose p = q.front();
        q.pop_front();
        const std::size_t pi = idx(p.cell(), p.heading);
        if (reached(p)) {
            if (!hit) hit = p;
            continue;
        }
        if (key(p) < key(best_end)) best_end = p;
        if (t[pi] >= limit) continue;
        const std::array<Action, 3> actions = {Action::forward(), Action::right(), Action::left()};
        for (const auto& a : actions) {
            Pose n = p;
            if (a.kind == ActionKind::Forward) {
                const Cell c = neighbour(p.cell(), move_direction(p.heading));
                if (!progress_ok(p.cell(), c)) continue;
                n.x = c.x;
                n.y = c.y;
            } else {
                n.heading = (p.heading + (a.kind == ActionKind::TurnRight ? 1 : kHeadings - 1)) % kHeadings;
            }
            const std::size_t ni = idx(n.cell(), n.heading);
            if (t[ni] >= 0) continue;
            t[ni] = t[pi] + 1;
            parent[ni] = pi;
            via[ni] = a;
            q.push_back(n);
        }
    }
    const Pose end = hit ? *hit : best_end;
    std::vector<Action> actions;
    for (std::size_t i = idx(end.cell(), end.heading); t[i] > 0; i = parent[i]) actions.push_back(via[i]);
    std::reverse(actions.begin(), actions.end());
    if (hit) {
        if (auto term = terminal_for(goal, known, est.cell)) actions.push_back(*term);
    }
    if (actions.empty()) return std::nullopt;
    const std::string purpose = goal.kind == TaskKind::IGNav ? "the goal at " + fmt_cell(est.cell)
                                                            : "the " + (goal.category.empty() ? std::string("target")
                                                                                                : goal.category) +
                                                                  " at " + fmt_cell(est.cell);
    return make_plan(start, std::move(actions), purpose, est.cell);
}

// Route that makes the most headway along one compass direction, treating unknown cells as open.
std::optional<CandidatePlan> heading_plan(const Pose& start, const KnownMap& known, int dir, int limit) {
    const PoseSearch search(known, start, [&](Cell c) { return known.state(c) != 1; }, limit);
    const Cell d = direction_delta(dir);
    for (int k = 4; k >= 1; --k) {
        const Cell c{start.x + d.x * k, start.y + d.y * k};
        if (known.state(c) == 1) continue;
        const int h = search.best_heading(c);
        if (h < 0) continue;
        auto route = search.path_to(c, h);
        if (route.empty()) continue;
        return make_plan(start, std::move(route), "the way that worked before, " + direction_name(dir), c);
    }
    return std::nullopt;
}

// Route to a remembered goal location, truncated to the plan length limit.
std::optional<CandidatePlan> recall_plan(const Pose& start, const KnownMap& known, Cell goal_cell, int limit) {
    const PoseSearch search(known, start, [&](Cell c) { return known.state(c) != 1; }, -1);
    const int h = search.best_heading(goal_cell);
    if (h < 0 || goal_cell == start.cell()) return std::nullopt;
    auto route = search.path_to(goal_cell, h);
    if (route.size() > static_cast<std::size_t>(limit)) route.resize(limit);
    if (route.empty()) return std::nullopt;
    return make_plan(start, std::move(route), "the goal remembered at " + fmt_cell(goal_cell), goal_cell);
}

std::string goal_tag(const GoalSpec& goal) { return text::hex64(text::fnv1a(goal.digest())).substr(0, 8); }

// "... led to goal <tag> at (x,y)" for this goal.
std::optional<Cell> recalled_goal_cell(const std::vector<Principle>& principles, const GoalSpec& goal) {
    static const std::regex re(R"(goal ([0-9a-f]+) at \((\d+),(\d+)\))");
    const std::string tag = goal_tag(goal);
    for (const auto& p : principles) {
        if (p.kind != PrincipleKind::Guiding) continue;
        std::smatch m;
        if (std::regex_search(p.text, m, re) && m[1] == tag) return Cell{std::stoi(m[2]), std::stoi(m[3])};
    }
    return std::nullopt;
}

constexpr int kDoorSlack = 0;

struct Frontier {
    Cell rep;
    int cost = 0;
    int heading = 0;
    bool near_door = false;
};

bool within_45(int dir_a, int dir_b) {
    const int d = std::abs(dir_a - dir_b) % 8;
    return std::min(d, 8 - d) <= 1;
}

std::vector<Frontier> frontier_clusters(const KnownMap& known, const PoseSearch& search, Cell here) {
    const auto cells = known.frontier_cells();
    std::set<Cell> pending(cells.begin(), cells.end());
    std::vector<Frontier> out;
    while (!pending.empty()) {
        std::vector<Cell> comp;
        std::deque<Cell> q{*pending.begin()};
        pending.erase(pending.begin());
        while (!q.empty()) {
            const Cell c = q.front();
            q.pop_front();
            comp.push_back(c);
            for (int d = 0; d < 8; ++d) {
                const Cell n = neighbour(c, d);
                if (auto it = pending.find(n); it != pending.end()) {
                    pending.erase(it);
                    q.push_back(n);
                }
            }
        }
        Frontier best;
        bool found = false;
        for (const Cell c : comp) {
            if (c == here) continue;
            const int h = search.best_heading(c);
            if (h < 0) continue;
            const int cost = search.dist[search.idx(c, h)];
            if (!found || cost < best.cost || (cost == best.cost && c < best.rep)) {
                best = {c, cost, h, false};
                found = true;
            }
        }
        if (!found) continue;
        for (int d = -1; d < 8 && !best.near_door; ++d)
            best.near_door = door_like(known, d < 0 ? best.rep : neighbour(best.rep, d));
        out.push_back(best);
    }
    std::sort(out.begin(), out.end(), [](const Frontier& a, const Frontier& b) {
        return a.cost != b.cost ? a.cost < b.cost : a.rep < b.rep;
    });
    return out;
}

template <typename Pred>
void filter_if_alternatives(std::vector<Frontier>& fs, Pred drop) {
    std::vector<Frontier> kept;
    for (const auto& f : fs)
        if (!drop(f)) kept.push_back(f);
    if (!kept.empty()) fs = std::move(kept);
}

// Second most recent distinct target: the place the agent keeps bouncing back to.
std::optional<Cell> previous_target(const std::vector<Cell>& history) {
    if (history.empty()) return std::nullopt;
    const Cell last = history.back();
    for (auto it = history.rbegin(); it != history.rend(); ++it)
        if (chebyshev(*it, last) > 2) return *it;
    return std::nullopt;
}

}  // namespace

std::optional<int> principle_direction(const std::string& text) {
    const auto tokens = text::tokenize(text);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (tokens[i] != "moving") continue;
        for (int d = 0; d < 8; ++d)
            if (tokens[i + 1] == direction_name(d)) return d;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- planner

std::vector<CandidatePlan> OraclePlanner::propose(const Observation& obs, const GoalSpec& goal,
                                                  const PlannerContext& context, int n, int max_plan_length) {
    if (n < 1) throw ContractError("candidate count must be >= 1");
    if (max_plan_length < 1) throw ContractError("plan length limit must be >= 1");
    const KnownMap& known = context.known;
    const Pose start = obs.agent_pose;
    bool any_open = false;
    for (int d = 0; d < 8; ++d) any_open = any_open || known.state(neighbour(start.cell(), d)) != 1;
    if (!any_open) throw ContractError("degenerate map: no FREE neighbour around the agent");

    std::vector<CandidatePlan> plans;
    std::optional<CandidatePlan> goal_route;
    if (auto term = ready_terminal(goal, obs)) {
        goal_route = make_plan(start, {*term}, "the goal", start.cell());
    } else if (auto est = localize_target(goal, known)) {
        goal_route = goal_plan(start, goal, *est, known, context.has_heuristic(kCollisionStreak), max_plan_length);
    }
    if (goal_route) {
        plans.push_back(*goal_route);
        if (context.has_heuristic(kDirectApproach)) {
            while (static_cast<int>(plans.size()) < n) plans.push_back(*goal_route);
        }
    }

    // A guiding principle recalled for this spot: retrace the direction that worked before.
    if (plans.empty()) {
        if (auto cell = recalled_goal_cell(context.retrieved_principles, goal); cell && !known.known(*cell)) {
            if (auto plan = recall_plan(start, known, *cell, max_plan_length)) {
                while (static_cast<int>(plans.size()) < n) plans.push_back(*plan);
            }
        }
    }
    if (plans.empty()) {
        for (const auto& p : context.retrieved_principles) {
            if (p.kind != PrincipleKind::Guiding) continue;
            const auto dir = principle_direction(p.text);
            if (!dir) continue;
            if (auto plan = heading_plan(start, known, *dir, max_plan_length)) {
                while (static_cast<int>(plans.size()) < n) plans.push_back(*plan);
            }
            break;
        }
    }
    if (static_cast<int>(plans.size()) < n) {
        const PoseSearch search(known, start, [&](Cell c) { return known.known_free(c); }, -1);
        auto fronts = frontier_clusters(known, search, start.cell());

        std::vector<Cell> excluded = context.excluded_targets;
        const bool oscillating = context.recent_reflection &&
                                 std::count(context.recent_reflection->failure_patterns.begin(),
                                            context.recent_reflection->failure_patterns.end(), kOscillation) > 0;
        const bool stalling = context.recent_reflection &&
                              context.recent_reflection->progress_assessment != Progress::Advancing;
        if (oscillating || (stalling && context.has_heuristic(kOscillation)))
            if (auto prev = previous_target(context.target_history)) excluded.push_back(*prev);
        filter_if_alternatives(fronts, [&](const Frontier& f) {
            return std::any_of(excluded.begin(), excluded.end(), [&](Cell e) { return chebyshev(e, f.rep) <= 2; });
        });
        for (const auto& p : context.retrieved_principles) {
            const auto dir = principle_direction(p.text);
            if (!dir) continue;
            auto dir_of = [&](const Frontier& f) { return direction_of(start.cell(), f.rep); };
            if (p.kind == PrincipleKind::Guiding)
                filter_if_alternatives(fronts, [&](const Frontier& f) {
                    const auto d = dir_of(f);
                    return !d || !within_45(*d, *dir);
                });
            else
                filter_if_alternatives(fronts, [&](const Frontier& f) {
                    const auto d = dir_of(f);
                    return d && *d == *dir;
                });
        }
        // While oscillating, commit to the single nearest remaining frontier so scoring noise cannot flip it.
        if (oscillating && fronts.size() > 1) fronts.resize(1);
        // Doorway frontiers jump the queue only when they are not much farther than the nearest one.
        if (context.has_heuristic(kDoorFirst) && !fronts.empty()) {
            const int slack = fronts.front().cost + kDoorSlack;
            std::stable_sort(fronts.begin(), fronts.end(), [&](const Frontier& a, const Frontier& b) {
                return (a.near_door && a.cost <= slack) && !(b.near_door && b.cost <= slack);
            });
        }

        // Prefer frontiers whose routes leave in distinct directions.
        std::vector<CandidatePlan> distinct, rest;
        std::set<int> used_dirs;
        for (const auto& f : fronts) {
            auto route = search.path_to(f.rep, f.heading);
            if (route.size() > static_cast<std::size_t>(max_plan_length)) route.resize(max_plan_length);
            if (route.empty()) continue;
            const auto dir = first_move_direction(start, route);
            auto plan = make_plan(start, std::move(route), "the frontier near " + fmt_cell(f.rep), f.rep);
            if (dir && used_dirs.insert(*dir).second)
                distinct.push_back(std::move(plan));
            else
                rest.push_back(std::move(plan));
        }
        for (auto* bucket : {&distinct, &rest})
            for (auto& p : *bucket)
                if (static_cast<int>(plans.size()) < n) plans.push_back(std::move(p));
    }

    // A stalled reflection means turning in place has stopped paying off.
    const bool stalled = context.recent_reflection &&
                         context.recent_reflection->progress_assessment != Progress::Advancing && !plans.empty();
    if (stalled)
        while (static_cast<int>(plans.size()) < n) plans.push_back(plans.back());
    const int scan_len = std::min(max_plan_length, 4);
    for (ActionKind k : {ActionKind::TurnLeft, ActionKind::TurnRight}) {
        if (static_cast<int>(plans.size()) >= n) break;
        plans.push_back(make_plan(start, std::vector<Action>(scan_len, Action{k, {}}), "unexplored space", std::nullopt));
    }
    while (static_cast<int>(plans.size()) < n) plans.push_back(plans.front());
    for (int i = 0; i < n; ++i) plans[i].index = i;
    return plans;
}

// ---------------------------------------------------------------- world model

OracleWorldModel::OracleWorldModel(const GridMap& map, double noise) : map_(&map), noise_(noise) {
    if (!(noise >= 0.0 && noise <= 1.0)) throw ContractError("world_model_noise out of [0,1]");
}

Rollout OracleWorldModel::predict(const Observation& current, const std::vector<SubtaskUnit>& subtasks, int h,
                                  std::uint64_t seed) {
    if (h < 1) throw ContractError("imagination horizon must be >= 1");
    Rng rng(seed);
    Rollout r;
    Pose pose = current.agent_pose;
    int k = 0;
    for (const auto& unit : subtasks) {
        for (const auto& a : unit.actions) {
            if (k >= h || r.terminal_action) return r;
            ++k;
            if (a.is_terminal()) {
                r.terminal_action = a;
                r.predicted_observations.push_back(observe(*map_, pose, current.step + k));
                continue;
            }
            pose = step(*map_, pose, a).pose;
            if (noise_ > 0.0 && rng.bernoulli(noise_)) {
                std::vector<Cell> options;
                for (int d = 0; d < 8; ++d) {
                    const Cell c = neighbour(pose.cell(), d);
                    if (map_->is_free(c)) options.push_back(c);
                }
                if (!options.empty()) {
                    const Cell c = options[rng.uniform(options.size())];
                    pose.x = c.x;
                    pose.y = c.y;
                }
            }
            r.predicted_observations.push_back(observe(*map_, pose, current.step + k));
        }
    }
    return r;
}

// ---------------------------------------------------------------- evaluator

OracleEvaluator::OracleEvaluator(const GridMap& map) : map_(&map) {}

double OracleEvaluator::score(const Rollout& rollout, const GoalSpec& goal, const KnownMap& known) {
    if (rollout.predicted_observations.empty()) throw ContractError("empty rollout");
    if (auto est = localize_target(goal, known)) {
        const Cell end = rollout.predicted_observations.back().agent_pose.cell();
        if (!map_->is_free(est->cell)) return -static_cast<double>(map_->width() * map_->height());
        const auto d = geodesic(*map_, end, est->cell);
        if (!d) return -static_cast<double>(map_->width() * map_->height());
        return -static_cast<double>(std::max(0, *d - est->radius));
    }
    std::set<Cell> fresh;
    for (const auto& o : rollout.predicted_observations)
        for (const auto& [c, _] : o.visible_cells)
            if (!known.known(c)) fresh.insert(c);
    return static_cast<double>(fresh.size());
}

// ---------------------------------------------------------------- detectors

OscillationEvidence detect_oscillation(const std::vector<Pose>& trace) {
    const auto cells = visited_cells(trace);
    OscillationEvidence ev;
    constexpr std::size_t kWindow = 8;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::map<Cell, int> counts;
        for (std::size_t j = i; j < std::min(cells.size(), i + kWindow); ++j) {
            const int c = ++counts[cells[j]];
            if (c > ev.strength) {
                ev.strength = c;
                ev.cell = cells[j];
            }
        }
    }
    bool alternation = false;
    for (std::size_t i = 0; i + 3 < cells.size(); ++i)
        if (cells[i] == cells[i + 2] && cells[i + 1] == cells[i + 3] && cells[i] != cells[i + 1]) {
            alternation = true;
            if (ev.strength < 3) ev.cell = cells[i];
            break;
        }
    ev.detected = ev.strength >= 3 || alternation;
    if (alternation) ev.strength = std::max(ev.strength, 3);
    return ev;
}

namespace {

// Per-action collision flags in execution order.
std::vector<int> collision_flags(const std::vector<SubtaskNode>& subtasks) {
    std::vector<int> flags;  // 1 collision, 0 successful move, -1 turn or terminal
    for (const auto& s : subtasks)
        for (std::size_t i = 0; i < s.actions.size(); ++i) {
            if (s.actions[i].kind != ActionKind::Forward) {
                flags.push_back(-1);
                continue;
            }
            flags.push_back(s.pose_trace[i].cell() == s.pose_trace[i + 1].cell() ? 1 : 0);
        }
    return flags;
}

}  // namespace

int longest_collision_streak(const std::vector<SubtaskNode>& subtasks) {
    int best = 0, run = 0;
    for (int f : collision_flags(subtasks)) {
        if (f == 1) best = std::max(best, ++run);
        else if (f == 0) run = 0;
    }
    return best;
}

int collision_count(const std::vector<SubtaskNode>& subtasks) {
    const auto flags = collision_flags(subtasks);
    return static_cast<int>(std::count(flags.begin(), flags.end(), 1));
}

namespace {

std::vector<Pose> window_trace(const std::vector<SubtaskNode>& window) {
    std::vector<Pose> out;
    for (const auto& s : window)
        for (std::size_t i = 0; i < s.pose_trace.size(); ++i)
            if (!(i == 0 && !out.empty() && out.back() == s.pose_trace[0])) out.push_back(s.pose_trace[i]);
    return out;
}

std::string room_phrase(const GridMap* map, Cell c) {
    if (map) {
        if (auto r = map->room_of(c)) return "the " + map->rooms()[*r].label;
    }
    return "cell " + fmt_cell(c);
}

}  // namespace

// ---------------------------------------------------------------- SRM analyzer

OracleSrmAnalyzer::OracleSrmAnalyzer(const GridMap& map) : map_(&map) {}

ReflectionSummary OracleSrmAnalyzer::analyze(const std::vector<SubtaskNode>& window, const GoalSpec& goal,
                                             const std::vector<MergedHeuristic>& active_heuristics) {
    if (window.empty()) throw ContractError("empty reflection window");
    ReflectionSummary s;
    const auto trace = window_trace(window);
    auto osc = detect_oscillation(trace);
    if (!osc.detected) {
        // Flag the first return to a cell left a few moves earlier, before it hardens into a loop.
        const auto cells = visited_cells(trace);
        for (std::size_t j = 2; j < cells.size() && !osc.detected; ++j)
            for (std::size_t i = j >= 4 ? j - 4 : 0; i + 2 <= j; ++i)
                if (cells[i] == cells[j]) {
                    osc = {true, 2, cells[j]};
                    break;
                }
    }
    if (osc.detected) s.failure_patterns.push_back(kOscillation);
    if (collision_count(window) >= 3) s.failure_patterns.push_back(kCollisionStreak);

    const Cell first = trace.front().cell(), last = trace.back().cell();
    if (goal.kind != TaskKind::AEQA && map_->is_free(goal.target)) {
        const auto d0 = geodesic(*map_, first, goal.target);
        const auto d1 = geodesic(*map_, last, goal.target);
        const int a = d0.value_or(0), b = d1.value_or(0);
        s.progress_assessment = b < a ? Progress::Advancing : (b == a ? Progress::Stalled : Progress::Regressing);
        s.subgoal_context = "at " + fmt_cell(last) + " in " + room_phrase(map_, last) + ", " + std::to_string(b) +
                            " cells from the target";
    } else {
        std::set<Cell> before, fresh;
        for (const auto& [c, _] : observe(*map_, trace.front(), 0).visible_cells) before.insert(c);
        for (std::size_t i = 1; i < trace.size(); ++i)
            for (const auto& [c, _] : observe(*map_, trace[i], 0).visible_cells)
                if (!before.count(c)) fresh.insert(c);
        s.progress_assessment = fresh.empty() ? Progress::Stalled : Progress::Advancing;
        s.subgoal_context = "searching for the " + goal.category + " from " + room_phrase(map_, last) + ", " +
                            std::to_string(fresh.size()) + " new cells seen";
    }

    if (osc.detected)
        s.recommendations.push_back("stop alternating near " + fmt_cell(osc.cell) + "; commit to a different frontier");
    if (collision_count(window) >= 3) s.recommendations.push_back("route through cells already seen to be free");
    if (s.progress_assessment == Progress::Stalled) s.recommendations.push_back("pick a frontier not tried recently");
    if (s.progress_assessment == Progress::Regressing) s.recommendations.push_back("turn back toward the target");
    for (const auto& h : active_heuristics)
        if (std::find(s.failure_patterns.begin(), s.failure_patterns.end(), h.pattern_id) != s.failure_patterns.end())
            s.recommendations.push_back("heuristic " + h.pattern_id + ": " + h.strategy);
    return s;
}

// ---------------------------------------------------------------- principle analyzer

OraclePrincipleAnalyzer::OraclePrincipleAnalyzer(const GridMap* map) : map_(map) {}

std::string OraclePrincipleAnalyzer::analyze(const std::vector<SubtaskNode>& trajectory, Outcome outcome,
                                             const GoalSpec& goal) {
    if (trajectory.empty()) throw ContractError("empty trajectory");
    const Cell from = trajectory.front().pose_trace.front().cell();
    const Cell to = trajectory.back().pose_trace.back().cell();
    const int collisions = collision_count(trajectory);
    const auto net = direction_of(from, to);
    const std::string motion = net ? "moving " + direction_name(*net) : std::string("turning in place");
    const std::string where = "from " + room_phrase(map_, trajectory.front().pose_trace.front().cell());
    if (outcome == Outcome::Success) {
        std::string t = where + ", " + motion + " led to goal " + goal_tag(goal) + " at " + fmt_cell(goal.target);
        if (collisions > 0) t += " despite " + std::to_string(collisions) + " collision" + (collisions > 1 ? "s" : "");
        return t;
    }
    std::string t = where + ", " + motion + " did not reach the goal";
    if (collisions > 0) t += " and caused " + std::to_string(collisions) + " collision" + (collisions > 1 ? "s" : "");
    return t;
}

// ---------------------------------------------------------------- heuristic extractor

OracleHeuristicExtractor::OracleHeuristicExtractor(const GridMap& map) : map_(&map) {}

std::vector<Heuristic> OracleHeuristicExtractor::extract(const MemoryGraph& graph) {
    std::vector<Heuristic> out;
    if (graph.subtask_count() == 0) return out;
    const auto& root = graph.root();
    const auto trace = graph.full_trace();
    std::vector<SubtaskNode> subtasks;
    for (NodeId id : graph.subtask_ids()) subtasks.push_back(graph.subtask(id));
    auto add = [&](const std::string& pattern, const std::string& d, const std::string& a, double c) {
        out.push_back({pattern, d, a, std::clamp(c, 0.0, 1.0), root.outcome, root.episode_id});
    };

    if (const auto osc = detect_oscillation(trace); osc.detected)
        add(kOscillation, "agent kept revisiting the same cells in " + room_phrase(map_, osc.cell),
            "commit to one frontier and do not return to a recently targeted one", osc.strength / 4.0);

    if (const int streak = longest_collision_streak(subtasks); streak >= 3)
        add(kCollisionStreak, "repeated wall collisions in " + room_phrase(map_, trace.back().cell()),
            "route through cells already seen to be free", streak / 5.0);

    if (root.outcome == Outcome::Success) {
        const GoalSpec& goal = root.goal;
        std::size_t acquired = trace.size();
        for (std::size_t i = 0; i < trace.size() && acquired == trace.size(); ++i) {
            const auto obs = observe(*map_, trace[i], 0);
            for (const auto& o : obs.visible_objects)
                if (goal.kind == TaskKind::AEQA ? o.category == goal.category : o.cell == goal.target) acquired = i;
            if (goal.kind == TaskKind::IGNav && obs.sees(goal.target)) acquired = i;
        }
        int transitions = 0;
        std::optional<int> room;
        std::string entered;
        for (std::size_t i = 0; i < acquired && i < trace.size(); ++i) {
            const auto r = map_->room_of(trace[i].cell());
            if (!r) continue;
            if (room && *r != *room) {
                ++transitions;
                entered = map_->rooms()[*r].label;
            }
            room = r;
        }
        if (transitions > 0)
            add(kDoorFirst, "passed a doorway into the " + entered + " before the target came into view",
                "head for doorways to reach unexplored rooms first", 0.6 + 0.2 * transitions);

        const Cell start = trace.front().cell();
        const int shortest = shortest_task_length(*map_, goal, start);
        int path = 0;
        for (std::size_t i = 1; i < trace.size(); ++i) path += trace[i].cell() != trace[i - 1].cell() ? 1 : 0;
        const double ratio = shortest == 0 ? (path == 0 ? 1.0 : INFINITY) : static_cast<double>(path) / shortest;
        if (ratio <= 1.2)
            add(kDirectApproach, "approached the target along a near-shortest path",
                "once the target is localized, put every candidate on the direct route", 1.0 - 2.5 * (ratio - 1.0));
    }
    return out;
}

// ---------------------------------------------------------------- merger

namespace {

std::string generalize(std::vector<std::string> texts) {
    std::sort(texts.begin(), texts.end());
    texts.erase(std::unique(texts.begin(), texts.end()), texts.end());
    if (texts.size() == 1) return texts.front();
    std::vector<std::set<std::string>> token_sets;
    for (const auto& t : texts) {
        const auto toks = text::tokenize(t);
        token_sets.emplace_back(toks.begin(), toks.end());
    }
    std::string common;
    std::set<std::string> emitted;
    for (const auto& tok : text::tokenize(texts.front())) {
        if (emitted.count(tok)) continue;
        if (std::all_of(token_sets.begin(), token_sets.end(), [&](const auto& s) { return s.count(tok) > 0; })) {
            common += (common.empty() ? "" : " ") + tok;
            emitted.insert(tok);
        }
    }
    std::string variants;
    for (std::size_t i = 0; i < texts.size(); ++i) variants += (i ? " | " : "") + texts[i];
    return common + " [" + variants + "]";
}

}  // namespace

std::pair<std::string, std::string> OracleHeuristicMerger::merge(const std::vector<Heuristic>& cluster) {
    if (cluster.empty()) throw ContractError("empty cluster");
    std::vector<std::string> ds, as;
    int successes = 0, failures = 0;
    for (const auto& h : cluster) {
        ds.push_back(h.description);
        as.push_back(h.strategy);
        (h.outcome_tag == Outcome::Success ? successes : failures) += 1;
    }
    std::string d = generalize(ds);
    if (successes > 0 && failures > successes) d = "Caution: " + d;
    return {d, generalize(as)};
}

BackendSet make_oracle_backends(const GridMap& map, const CortexConfig& config) {
    BackendSet b;
    b.planner = std::make_shared<OraclePlanner>();
    b.world_model = std::make_shared<OracleWorldModel>(map, config.world_model_noise);
    b.evaluator = std::make_shared<OracleEvaluator>(map);
    b.srm_analyzer = std::make_shared<OracleSrmAnalyzer>(map);
    b.principle_analyzer = std::make_shared<OraclePrincipleAnalyzer>(&map);
    b.extractor = std::make_shared<OracleHeuristicExtractor>(map);
    b.merger = std::make_shared<OracleHeuristicMerger>();
    return b;
}

}  // namespace evonav
