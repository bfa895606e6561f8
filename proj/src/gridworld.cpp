#include "evonav/gridworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "evonav/error.hpp"
#include "evonav/rng.hpp"
#include "evonav/text.hpp"

namespace evonav {

namespace {

constexpr std::array<Cell, 8> kDeltas = {{{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};
constexpr std::array<const char*, 8> kDirectionNames = {"north", "northeast", "east",      "southeast",
                                                        "south", "southwest", "west",      "northwest"};

const std::array<std::string, 8> kCategories = {"chair", "table", "sofa", "bed", "plant", "tv", "lamp", "sink"};
const std::array<std::string, 6> kColors = {"red", "blue", "green", "yellow", "white", "black"};
const std::array<std::string, 8> kRoomNames = {"hall", "kitchen", "bedroom", "study",
                                               "bath", "garage",  "office",  "den"};

std::string fmt_cell(Cell c) { return std::to_string(c.x) + "," + std::to_string(c.y); }

}  // namespace

// ---------------------------------------------------------------- GridMap

GridMap::GridMap(int width, int height, std::uint64_t seed)
    : width_(width), height_(height), seed_(seed),
      occupancy_(static_cast<std::size_t>(width) * height, Occupancy::Free) {}

std::optional<int> GridMap::room_of(Cell c) const {
    if (!is_free(c)) return std::nullopt;
    for (std::size_t i = 0; i < rooms_.size(); ++i)
        if (rooms_[i].contains(c)) return static_cast<int>(i);
    return std::nullopt;
}

std::vector<Cell> GridMap::free_cells() const {
    std::vector<Cell> out;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            if (at({x, y}) == Occupancy::Free) out.push_back({x, y});
    return out;
}

// ---------------------------------------------------------------- directions & actions

Cell direction_delta(int direction) { return kDeltas[((direction % 8) + 8) % 8]; }

std::string direction_name(int direction) { return kDirectionNames[((direction % 8) + 8) % 8]; }

std::optional<int> direction_of(Cell from, Cell to) {
    const int dx = to.x - from.x;
    const int dy = to.y - from.y;
    if (dx == 0 && dy == 0) return std::nullopt;
    // angle measured clockwise from north
    const double angle = std::atan2(static_cast<double>(dx), static_cast<double>(-dy));
    int octant = static_cast<int>(std::lround(angle / (M_PI / 4.0)));
    return ((octant % 8) + 8) % 8;
}

std::string to_string(const Action& a) {
    switch (a.kind) {
        case ActionKind::Forward: return "F";
        case ActionKind::TurnLeft: return "L";
        case ActionKind::TurnRight: return "R";
        case ActionKind::Stop: return "STOP";
        case ActionKind::Answer: return "ANSWER(" + a.text + ")";
    }
    return "?";
}

Action parse_action(const std::string& raw) {
    const std::string s = text::trim(raw);
    if (s == "F" || s == "FORWARD") return Action::forward();
    if (s == "L" || s == "TURN_LEFT") return Action::left();
    if (s == "R" || s == "TURN_RIGHT") return Action::right();
    if (s == "STOP") return Action::stop();
    if (s.rfind("ANSWER(", 0) == 0 && s.size() >= 8 && s.back() == ')')
        return Action::answer(s.substr(7, s.size() - 8));
    throw ParseError("unknown action '" + s + "'", 0);
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::IGNav: return "IGNAV";
        case TaskKind::AR: return "AR";
        case TaskKind::AEQA: return "AEQA";
    }
    return "?";
}

TaskKind parse_task_kind(const std::string& raw) {
    const std::string s = text::to_lower(text::trim(raw));
    if (s == "ignav") return TaskKind::IGNav;
    if (s == "ar") return TaskKind::AR;
    if (s == "aeqa") return TaskKind::AEQA;
    throw ParseError("unknown task kind '" + raw + "'", 0);
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Pending: return "PENDING";
        case Outcome::Success: return "SUCCESS";
        case Outcome::Failure: return "FAILURE";
    }
    return "?";
}

Outcome parse_outcome(const std::string& s) {
    if (s == "PENDING") return Outcome::Pending;
    if (s == "SUCCESS") return Outcome::Success;
    if (s == "FAILURE") return Outcome::Failure;
    throw ParseError("unknown outcome '" + s + "'", 0);
}

// ---------------------------------------------------------------- observation

bool Observation::sees(Cell c) const {
    return std::any_of(visible_cells.begin(), visible_cells.end(), [&](const auto& vc) { return vc.first == c; });
}

std::string Observation::digest() const {
    std::ostringstream s;
    s << agent_pose.x << ',' << agent_pose.y << ',' << agent_pose.heading << ';' << step << ';';
    for (const auto& [c, o] : visible_cells) s << c.x << ',' << c.y << (o == Occupancy::Wall ? '#' : '.') << ';';
    for (const auto& v : visible_objects) s << v.cell.x << ',' << v.cell.y << ',' << v.category << ',' << v.color << ';';
    return text::hex64(text::fnv1a(s.str()));
}

namespace {

bool line_of_sight(const GridMap& map, Cell a, Cell b) {
    int x0 = a.x, y0 = a.y;
    const int dx = std::abs(b.x - a.x), dy = -std::abs(b.y - a.y);
    const int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (x0 == b.x && y0 == b.y) return true;
        if (!(x0 == a.x && y0 == a.y) && !map.is_free({x0, y0})) return false;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace

Observation observe(const GridMap& map, const Pose& pose, int step) {
    Observation obs;
    obs.agent_pose = pose;
    obs.step = step;
    const double theta = (pose.heading % kHeadings) * (M_PI / 8.0);
    const double hx = std::sin(theta), hy = -std::cos(theta);
    const double cos_half_fov = std::sqrt(0.5);
    for (int y = pose.y - kViewRange; y <= pose.y + kViewRange; ++y) {
        for (int x = pose.x - kViewRange; x <= pose.x + kViewRange; ++x) {
            const Cell c{x, y};
            if (!map.in_bounds(c)) continue;
            const int dx = x - pose.x, dy = y - pose.y;
            const int d2 = dx * dx + dy * dy;
            if (d2 > kViewRange * kViewRange) continue;
            if (d2 > 0) {
                const double len = std::sqrt(static_cast<double>(d2));
                if (dx * hx + dy * hy < len * cos_half_fov - 1e-9) continue;
                if (!line_of_sight(map, pose.cell(), c)) continue;
            }
            obs.visible_cells.emplace_back(c, map.at(c));
            if (auto it = map.objects().find(c); it != map.objects().end())
                obs.visible_objects.push_back({c, it->second.category, it->second.color});
        }
    }
    return obs;
}

// ---------------------------------------------------------------- goals

std::string GoalSpec::digest() const {
    std::string base = text::to_lower(to_string(kind)) + "@" + std::to_string(map_seed) + ":";
    if (kind == TaskKind::AEQA) return base + category;
    return base + fmt_cell(target);
}

std::string encode_goal(const GoalSpec& g) {
    std::vector<std::string> f = {to_string(g.kind),  std::to_string(g.map_seed), std::to_string(g.target.x),
                                  std::to_string(g.target.y), std::to_string(g.goal_heading), g.signature,
                                  g.category,          g.question,                g.answer};
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) out += ',';
        out += text::escape(f[i]);
    }
    return out;
}

GoalSpec decode_goal(const std::string& s) {
    const auto f = text::split(s, ',');
    if (f.size() != 9) throw ParseError("goal record needs 9 fields", 0);
    GoalSpec g;
    try {
        g.kind = parse_task_kind(text::unescape(f[0]));
        g.map_seed = std::stoull(text::unescape(f[1]));
        g.target = {std::stoi(text::unescape(f[2])), std::stoi(text::unescape(f[3]))};
        g.goal_heading = std::stoi(text::unescape(f[4]));
    } catch (const std::logic_error&) {
        throw ParseError("bad goal record", 0);
    }
    g.signature = text::unescape(f[5]);
    g.category = text::unescape(f[6]);
    g.question = text::unescape(f[7]);
    g.answer = text::unescape(f[8]);
    return g;
}

GoalSpec make_ignav_goal(const GridMap& map, const Pose& goal_pose) {
    if (!map.is_free(goal_pose.cell())) throw ContractError("goal pose must be on a FREE cell");
    GoalSpec g;
    g.kind = TaskKind::IGNav;
    g.map_seed = map.seed();
    g.target = goal_pose.cell();
    g.goal_heading = goal_pose.heading;
    g.signature = observe(map, goal_pose, 0).digest();
    return g;
}

GoalSpec make_ar_goal(const GridMap& map, Cell object_cell) {
    auto it = map.objects().find(object_cell);
    if (it == map.objects().end()) throw ContractError("AR target must be an object cell");
    GoalSpec g;
    g.kind = TaskKind::AR;
    g.map_seed = map.seed();
    g.target = object_cell;
    g.category = it->second.category;
    return g;
}

GoalSpec make_aeqa_goal(const GridMap& map, Cell object_cell) {
    auto it = map.objects().find(object_cell);
    if (it == map.objects().end()) throw ContractError("AEQA referent must be an object cell");
    GoalSpec g;
    g.kind = TaskKind::AEQA;
    g.map_seed = map.seed();
    g.target = object_cell;
    g.category = it->second.category;
    g.question = "What color is the " + it->second.category + "?";
    g.answer = it->second.color + " " + it->second.category;
    return g;
}

// ---------------------------------------------------------------- dynamics & search

StepResult step(const GridMap& map, const Pose& pose, const Action& action) {
    StepResult r{pose, false};
    switch (action.kind) {
        case ActionKind::TurnLeft: r.pose.heading = (pose.heading + kHeadings - 1) % kHeadings; break;
        case ActionKind::TurnRight: r.pose.heading = (pose.heading + 1) % kHeadings; break;
        case ActionKind::Forward: {
            const Cell d = direction_delta(move_direction(pose.heading));
            const Cell next{pose.x + d.x, pose.y + d.y};
            if (map.is_free(next)) {
                r.pose.x = next.x;
                r.pose.y = next.y;
            } else {
                r.collision = true;
            }
            break;
        }
        case ActionKind::Stop:
        case ActionKind::Answer: break;
    }
    return r;
}

std::vector<int> bfs_distances(int width, int height, const std::function<bool(Cell)>& passable, Cell source) {
    std::vector<int> dist(static_cast<std::size_t>(width) * height, -1);
    auto idx = [&](Cell c) { return static_cast<std::size_t>(c.y) * width + c.x; };
    if (source.x < 0 || source.y < 0 || source.x >= width || source.y >= height) return dist;
    std::deque<Cell> q;
    dist[idx(source)] = 0;
    q.push_back(source);
    while (!q.empty()) {
        const Cell c = q.front();
        q.pop_front();
        for (const Cell d : kDeltas) {
            const Cell n{c.x + d.x, c.y + d.y};
            if (n.x < 0 || n.y < 0 || n.x >= width || n.y >= height) continue;
            if (dist[idx(n)] >= 0 || !passable(n)) continue;
            dist[idx(n)] = dist[idx(c)] + 1;
            q.push_back(n);
        }
    }
    return dist;
}

std::vector<int> distance_field(const GridMap& map, Cell source) {
    return bfs_distances(map.width(), map.height(), [&](Cell c) { return map.is_free(c); }, source);
}

std::optional<int> geodesic(const GridMap& map, Cell a, Cell b) {
    if (!map.is_free(a) || !map.is_free(b)) throw ContractError("geodesic endpoints must be FREE cells");
    if (a == b) return 0;
    const auto dist = distance_field(map, a);
    const int d = dist[map.index(b)];
    if (d < 0) return std::nullopt;
    return d;
}

// ---------------------------------------------------------------- generation

bool free_space_connected(const GridMap& map) {
    const auto cells = map.free_cells();
    if (cells.empty()) return true;
    const auto dist = distance_field(map, cells.front());
    return std::all_of(cells.begin(), cells.end(), [&](Cell c) { return dist[map.index(c)] >= 0; });
}

namespace {

struct Region {
    int x0, y0, x1, y1;
    int w() const { return x1 - x0 + 1; }
    int h() const { return y1 - y0 + 1; }
};

bool try_generate(GridMap& map, Rng& rng, int n_rooms, int n_objects) {
    const int W = map.width(), H = map.height();
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            map.set({x, y}, (x == 0 || y == 0 || x == W - 1 || y == H - 1) ? Occupancy::Wall : Occupancy::Free);
    map.objects().clear();
    map.rooms().clear();

    std::vector<Region> regions = {{1, 1, W - 2, H - 2}};
    std::vector<Cell> doors;
    auto near_door = [&](Cell c) {
        return std::any_of(doors.begin(), doors.end(),
                           [&](Cell d) { return std::abs(d.x - c.x) <= 1 && std::abs(d.y - c.y) <= 1; });
    };
    constexpr int kMinSide = 3;
    while (static_cast<int>(regions.size()) < n_rooms) {
        // largest splittable region first
        int best = -1;
        for (int i = 0; i < static_cast<int>(regions.size()); ++i) {
            const auto& r = regions[i];
            if (std::max(r.w(), r.h()) < 2 * kMinSide + 1) continue;
            if (best < 0 || r.w() * r.h() > regions[best].w() * regions[best].h()) best = i;
        }
        if (best < 0) return false;
        const Region r = regions[best];
        const bool vertical = r.w() >= r.h();
        std::vector<int> positions;
        if (vertical) {
            for (int x = r.x0 + kMinSide; x <= r.x1 - kMinSide; ++x)
                if (!near_door({x, r.y0 - 1}) && !near_door({x, r.y1 + 1})) positions.push_back(x);
        } else {
            for (int y = r.y0 + kMinSide; y <= r.y1 - kMinSide; ++y)
                if (!near_door({r.x0 - 1, y}) && !near_door({r.x1 + 1, y})) positions.push_back(y);
        }
        if (positions.empty()) return false;
        const int at = positions[rng.uniform(positions.size())];
        Region a = r, b = r;
        if (vertical) {
            const int door_y = rng.uniform_int(r.y0, r.y1);
            for (int y = r.y0; y <= r.y1; ++y)
                if (y != door_y) map.set({at, y}, Occupancy::Wall);
            doors.push_back({at, door_y});
            a.x1 = at - 1;
            b.x0 = at + 1;
        } else {
            const int door_x = rng.uniform_int(r.x0, r.x1);
            for (int x = r.x0; x <= r.x1; ++x)
                if (x != door_x) map.set({x, at}, Occupancy::Wall);
            doors.push_back({door_x, at});
            a.y1 = at - 1;
            b.y0 = at + 1;
        }
        regions[best] = a;
        regions.insert(regions.begin() + best + 1, b);
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
        std::string label = kRoomNames[i % kRoomNames.size()];
        if (i >= kRoomNames.size()) label += std::to_string(i / kRoomNames.size());
        const auto& r = regions[i];
        map.rooms().push_back({label, r.x0, r.y0, r.x1, r.y1});
    }

    std::vector<Cell> candidates;
    for (const auto& c : map.free_cells())
        if (map.room_of(c) && !near_door(c)) candidates.push_back(c);
    if (static_cast<int>(candidates.size()) < n_objects) return false;
    for (int i = 0; i < n_objects; ++i) {
        const std::size_t k = i + rng.uniform(candidates.size() - i);
        std::swap(candidates[i], candidates[k]);
        map.objects()[candidates[i]] = {kCategories[rng.uniform(kCategories.size())],
                                        kColors[rng.uniform(kColors.size())]};
    }
    return free_space_connected(map);
}

}  // namespace

GridMap generate_map(std::uint64_t seed, int width, int height, int n_rooms, int n_objects) {
    if (width < 8 || height < 8) throw ContractError("map dimensions must be >= 8");
    if (n_rooms < 1 || n_objects < 0) throw ContractError("infeasible map parameters: n_rooms >= 1, n_objects >= 0");
    const int interior = (width - 2) * (height - 2);
    if (n_rooms > interior / 16) throw ContractError("infeasible map parameters: too many rooms for the area");
    if (n_objects > interior / 4) throw ContractError("infeasible map parameters: too many objects for the area");
    GridMap map(width, height, seed);
    Rng rng(seed);
    for (int attempt = 0; attempt < 32; ++attempt)
        if (try_generate(map, rng, n_rooms, n_objects)) return map;
    throw ContractError("infeasible map parameters: generation failed for seed " + std::to_string(seed));
}

std::string save_map_text(const GridMap& map) {
    std::ostringstream out;
    out << "# evonav map v1\n";
    out << "size " << map.width() << ' ' << map.height() << "\n";
    out << "seed " << map.seed() << "\n";
    out << "legend # wall . free\n";
    out << "grid\n";
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) out << (map.at({x, y}) == Occupancy::Wall ? '#' : '.');
        out << "\n";
    }
    out << "objects " << map.objects().size() << "\n";
    for (const auto& [c, o] : map.objects())
        out << c.x << ' ' << c.y << ' ' << text::escape(o.category) << ' ' << text::escape(o.color) << "\n";
    out << "rooms " << map.rooms().size() << "\n";
    for (const auto& r : map.rooms())
        out << text::escape(r.label) << ' ' << r.x0 << ' ' << r.y0 << ' ' << r.x1 << ' ' << r.y1 << "\n";
    return out.str();
}

GridMap load_map_text(const std::string& data) {
    std::istringstream in(data);
    std::string line;
    std::size_t offset = 0;
    auto next = [&]() -> std::string {
        while (std::getline(in, line)) {
            offset += line.size() + 1;
            if (!line.empty() && line[0] != '#') return line;
            if (line.size() > 1 && line[0] == '#' && line[1] != ' ') return line;  // grid rows
        }
        throw ParseError("unexpected end of map text", offset);
    };
    int w = 0, h = 0;
    std::uint64_t seed = 0;
    {
        std::istringstream s(next());
        std::string kw;
        if (!(s >> kw >> w >> h) || kw != "size") throw ParseError("expected 'size W H'", offset);
    }
    {
        std::istringstream s(next());
        std::string kw;
        if (!(s >> kw >> seed) || kw != "seed") throw ParseError("expected 'seed N'", offset);
    }
    std::string l = next();
    if (l.rfind("legend", 0) == 0) l = next();
    if (l != "grid") throw ParseError("expected 'grid'", offset);
    if (w < 1 || h < 1) throw ParseError("bad map size", offset);
    GridMap map(w, h, seed);
    for (int y = 0; y < h; ++y) {
        if (!std::getline(in, line)) throw ParseError("truncated grid", offset);
        offset += line.size() + 1;
        if (static_cast<int>(line.size()) != w) throw ParseError("grid row " + std::to_string(y) + " has wrong width", offset);
        for (int x = 0; x < w; ++x) {
            if (line[x] == '#') map.set({x, y}, Occupancy::Wall);
            else if (line[x] == '.') map.set({x, y}, Occupancy::Free);
            else throw ParseError("bad grid character", offset);
        }
    }
    std::size_t n = 0;
    {
        std::istringstream s(next());
        std::string kw;
        if (!(s >> kw >> n) || kw != "objects") throw ParseError("expected 'objects N'", offset);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::istringstream s(next());
        int x, y;
        std::string cat, col;
        if (!(s >> x >> y >> cat >> col)) throw ParseError("bad object row", offset);
        map.objects()[{x, y}] = {text::unescape(cat), text::unescape(col)};
    }
    {
        std::istringstream s(next());
        std::string kw;
        if (!(s >> kw >> n) || kw != "rooms") throw ParseError("expected 'rooms N'", offset);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::istringstream s(next());
        Room r;
        std::string label;
        if (!(s >> label >> r.x0 >> r.y0 >> r.x1 >> r.y1)) throw ParseError("bad room row", offset);
        r.label = text::unescape(label);
        map.rooms().push_back(r);
    }
    return map;
}

// ---------------------------------------------------------------- outcomes & metrics

EpisodeOutcome evaluate_outcome(const GridMap& map, const GoalSpec& goal, const std::optional<Action>& final_action,
                                const TerminalState& state) {
    if (final_action) {
        const bool needs_stop = goal.kind == TaskKind::IGNav;
        if (needs_stop && final_action->kind != ActionKind::Stop)
            throw ContractError("terminal action " + to_string(*final_action) + " is illegal for IGNAV");
        if (!needs_stop && final_action->kind != ActionKind::Answer)
            throw ContractError("terminal action " + to_string(*final_action) + " is illegal for " + to_string(goal.kind));
        if (final_action->is_motion()) throw ContractError("motion action is not terminal");
    }
    if (state.budget_exhausted || !final_action) return {false, 0.0};

    switch (goal.kind) {
        case TaskKind::IGNav: {
            const auto d = geodesic(map, state.pose.cell(), goal.target);
            return {d && *d <= kSuccessRadius, 0.0};
        }
        case TaskKind::AR:
            return {text::to_lower(text::trim(final_action->text)) == text::to_lower(text::trim(goal.category)), 0.0};
        case TaskKind::AEQA: {
            const auto answer = text::tokenize(final_action->text);
            const auto truth = text::tokenize(goal.answer);
            if (answer == truth) return {true, 100.0};
            if (truth.size() != 2) return {false, 0.0};
            const bool color_ok = std::find(answer.begin(), answer.end(), truth[0]) != answer.end();
            const bool category_ok = std::find(answer.begin(), answer.end(), truth[1]) != answer.end();
            return {false, (color_ok || category_ok) ? 50.0 : 0.0};
        }
    }
    return {false, 0.0};
}

int shortest_task_length(const GridMap& map, const GoalSpec& goal, Cell start) {
    const auto d = geodesic(map, start, goal.target);
    if (!d) throw ContractError("task target unreachable from start");
    switch (goal.kind) {
        case TaskKind::IGNav: return *d;
        case TaskKind::AR: return std::max(0, *d - kRecognitionRange);
        case TaskKind::AEQA: return std::max(0, *d - kViewRange);
    }
    return *d;
}

double episode_spl(const EpisodeRecord& r) {
    if (!r.success) return 0.0;
    const int denom = std::max(r.path_length, r.shortest_length);
    if (denom == 0) return 1.0;
    return static_cast<double>(r.shortest_length) / denom;
}

Metrics compute_metrics(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw ContractError("empty result list");
    Metrics m;
    double score_sum = 0;
    int aeqa = 0;
    for (const auto& r : records) {
        m.sr += r.success ? 1.0 : 0.0;
        m.spl += episode_spl(r);
        m.mean_traj += r.actions;
        if (r.task == TaskKind::AEQA) {
            score_sum += r.answer_score;
            ++aeqa;
        }
    }
    const double n = static_cast<double>(records.size());
    m.sr /= n;
    m.spl /= n;
    m.mean_traj /= n;
    if (aeqa > 0) m.answer_score = score_sum / aeqa;
    return m;
}

// ---------------------------------------------------------------- agent-side knowledge

KnownMap::KnownMap(int width, int height)
    : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height, -1) {}

int KnownMap::state(Cell c) const {
    if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_) return 1;
    return cells_[static_cast<std::size_t>(c.y) * width_ + c.x];
}

void KnownMap::integrate(const Observation& obs) {
    for (const auto& [c, o] : obs.visible_cells) {
        if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_) continue;
        auto& s = cells_[static_cast<std::size_t>(c.y) * width_ + c.x];
        if (s < 0) ++known_count_;
        s = o == Occupancy::Wall ? 1 : 0;
    }
    for (const auto& v : obs.visible_objects) objects_[v.cell] = {v.category, v.color};
}

std::vector<Cell> KnownMap::frontier_cells() const {
    std::vector<Cell> out;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (!known_free({x, y})) continue;
            for (const Cell d : kDeltas) {
                const Cell n{x + d.x, y + d.y};
                if (n.x < 0 || n.y < 0 || n.x >= width_ || n.y >= height_) continue;
                if (!known(n)) {
                    out.push_back({x, y});
                    break;
                }
            }
        }
    }
    return out;
}

std::optional<TargetEstimate> localize_target(const GoalSpec& goal, const KnownMap& known) {
    switch (goal.kind) {
        case TaskKind::IGNav:
            if (known.known_free(goal.target)) return TargetEstimate{goal.target, 0};
            return std::nullopt;
        case TaskKind::AR: return TargetEstimate{goal.target, kRecognitionRange};
        case TaskKind::AEQA:
            for (const auto& [c, o] : known.seen_objects())
                if (o.category == goal.category) return TargetEstimate{c, kViewRange};
            return std::nullopt;
    }
    return std::nullopt;
}

std::optional<Action> ready_terminal(const GoalSpec& goal, const Observation& obs) {
    const Cell here = obs.agent_pose.cell();
    switch (goal.kind) {
        case TaskKind::IGNav:
            if (here == goal.target) return Action::stop();
            return std::nullopt;
        case TaskKind::AR:
            for (const auto& v : obs.visible_objects)
                if (v.cell == goal.target &&
                    std::max(std::abs(v.cell.x - here.x), std::abs(v.cell.y - here.y)) <= kRecognitionRange)
                    return Action::answer(v.category);
            return std::nullopt;
        case TaskKind::AEQA:
            for (const auto& v : obs.visible_objects)
                if (v.category == goal.category) return Action::answer(v.color + " " + v.category);
            return std::nullopt;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- environment

Environment::Environment(const GridMap& map, GoalSpec goal, Pose start)
    : map_(&map), goal_(std::move(goal)), start_(start), pose_(start) {
    if (!map.is_free(start.cell())) throw ContractError("start pose must be on a FREE cell");
}

Observation Environment::observation() const { return observe(*map_, pose_, actions_); }

StepResult Environment::apply(const Action& a) {
    if (done_) throw ContractError("episode already finished");
    const StepResult r = step(*map_, pose_, a);
    if (a.is_motion()) {
        ++actions_;
        if (r.pose.cell() != pose_.cell()) ++path_length_;
        pose_ = r.pose;
    } else {
        terminal_ = a;
        done_ = true;
    }
    return r;
}

}  // namespace evonav
