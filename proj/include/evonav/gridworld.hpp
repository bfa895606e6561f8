#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evonav {

struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

enum class Occupancy : std::uint8_t { Free, Wall };

struct ObjectInfo {
    std::string category;
    std::string color;
    bool operator==(const ObjectInfo&) const = default;
};

struct Room {
    std::string label;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
    bool contains(Cell c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
    bool operator==(const Room&) const = default;
};

class GridMap {
public:
    GridMap() = default;
    GridMap(int width, int height, std::uint64_t seed);

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint64_t seed() const { return seed_; }

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    Occupancy at(Cell c) const { return occupancy_[index(c)]; }
    bool is_free(Cell c) const { return in_bounds(c) && at(c) == Occupancy::Free; }
    void set(Cell c, Occupancy o) { occupancy_[index(c)] = o; }

    const std::map<Cell, ObjectInfo>& objects() const { return objects_; }
    std::map<Cell, ObjectInfo>& objects() { return objects_; }
    const std::vector<Room>& rooms() const { return rooms_; }
    std::vector<Room>& rooms() { return rooms_; }
    // Index into rooms(), or nullopt for cells outside every room (walls, doorways).
    std::optional<int> room_of(Cell c) const;

    std::vector<Cell> free_cells() const;
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

    bool operator==(const GridMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<Occupancy> occupancy_;
    std::map<Cell, ObjectInfo> objects_;
    std::vector<Room> rooms_;
};

// 16 headings of 22.5 degrees; 0 faces north (y decreasing), increasing clockwise.
inline constexpr int kHeadings = 16;
inline constexpr int kViewRange = 6;
inline constexpr int kRecognitionRange = 3;
inline constexpr int kSuccessRadius = 5;

struct Pose {
    int x = 0;
    int y = 0;
    int heading = 0;
    Cell cell() const { return {x, y}; }
    auto operator<=>(const Pose&) const = default;
};

// Move direction (0..7, N, NE, E, SE, S, SW, W, NW) of a heading. Odd headings
// sit between two directions and round toward the lower index.
inline int move_direction(int heading) { return ((heading % kHeadings + kHeadings) % kHeadings) / 2; }
Cell direction_delta(int direction);
std::string direction_name(int direction);
// Direction whose delta best matches the displacement; nullopt for zero displacement.
std::optional<int> direction_of(Cell from, Cell to);

enum class ActionKind { Forward, TurnLeft, TurnRight, Stop, Answer };

struct Action {
    ActionKind kind = ActionKind::Forward;
    std::string text;  // ANSWER payload

    static Action forward() { return {ActionKind::Forward, {}}; }
    static Action left() { return {ActionKind::TurnLeft, {}}; }
    static Action right() { return {ActionKind::TurnRight, {}}; }
    static Action stop() { return {ActionKind::Stop, {}}; }
    static Action answer(std::string t) { return {ActionKind::Answer, std::move(t)}; }

    bool is_motion() const {
        return kind == ActionKind::Forward || kind == ActionKind::TurnLeft || kind == ActionKind::TurnRight;
    }
    bool is_terminal() const { return !is_motion(); }
    bool operator==(const Action&) const = default;
};

// "F", "L", "R", "STOP", "ANSWER(<text>)".
std::string to_string(const Action& a);
Action parse_action(const std::string& s);

enum class TaskKind { IGNav, AR, AEQA };
std::string to_string(TaskKind k);
TaskKind parse_task_kind(const std::string& s);

struct VisibleObject {
    Cell cell;
    std::string category;
    std::string color;
    bool operator==(const VisibleObject&) const = default;
};

struct Observation {
    std::vector<std::pair<Cell, Occupancy>> visible_cells;
    std::vector<VisibleObject> visible_objects;
    Pose agent_pose;
    int step = 0;

    bool sees(Cell c) const;
    std::string digest() const;
    bool operator==(const Observation&) const = default;
};

// Ray-cast view: 90 degree field of view, range kViewRange, walls occlude.
Observation observe(const GridMap& map, const Pose& pose, int step);

struct GoalSpec {
    TaskKind kind = TaskKind::IGNav;
    std::uint64_t map_seed = 0;
    // IGNav: the goal cell. AR: the cell of the object to recognize. AEQA: the cell
    // of the object the question refers to (ground truth, hidden from the planner).
    Cell target;
    int goal_heading = 0;       // IGNav goal pose heading
    std::string signature;      // IGNav: digest of the observation at the goal pose
    std::string category;       // AR: ground-truth category. AEQA: the category asked about
    std::string question;       // AEQA
    std::string answer;         // AEQA ground truth, "<color> <category>"

    // Stable key used by the episode bank.
    std::string digest() const;
    bool operator==(const GoalSpec&) const = default;
};

std::string encode_goal(const GoalSpec& g);
GoalSpec decode_goal(const std::string& s);

GoalSpec make_ignav_goal(const GridMap& map, const Pose& goal_pose);
GoalSpec make_ar_goal(const GridMap& map, Cell object_cell);
GoalSpec make_aeqa_goal(const GridMap& map, Cell object_cell);

struct StepResult {
    Pose pose;
    bool collision = false;
};

// Pure transition. STOP/ANSWER leave the pose unchanged.
StepResult step(const GridMap& map, const Pose& pose, const Action& action);

// BFS over an 8-connected grid given a passability predicate; -1 marks unreachable.
std::vector<int> bfs_distances(int width, int height, const std::function<bool(Cell)>& passable, Cell source);
std::vector<int> distance_field(const GridMap& map, Cell source);

// Shortest 8-connected path length between FREE cells; nullopt if unreachable.
std::optional<int> geodesic(const GridMap& map, Cell a, Cell b);

// Map generation and interchange.
GridMap generate_map(std::uint64_t seed, int width, int height, int n_rooms, int n_objects);
bool free_space_connected(const GridMap& map);
std::string save_map_text(const GridMap& map);
GridMap load_map_text(const std::string& text);

enum class Outcome { Pending, Success, Failure };
std::string to_string(Outcome o);
Outcome parse_outcome(const std::string& s);

struct EpisodeOutcome {
    bool success = false;
    double answer_score = 0.0;  // AEQA only
};

struct TerminalState {
    Pose pose;
    bool budget_exhausted = false;
};

// Applies the task success rule. Throws ContractError for a terminal action the task does not allow.
EpisodeOutcome evaluate_outcome(const GridMap& map, const GoalSpec& goal, const std::optional<Action>& final_action,
                                const TerminalState& state);

// Shortest path length the SPL metric compares against.
int shortest_task_length(const GridMap& map, const GoalSpec& goal, Cell start);

struct EpisodeRecord {
    std::string episode_id;
    TaskKind task = TaskKind::IGNav;
    bool success = false;
    int shortest_length = 0;  // geodesic cells
    int path_length = 0;      // cells traversed
    int actions = 0;          // motion actions issued
    double answer_score = 0.0;
    bool oscillation = false;  // OSCILLATION detected over the episode
    bool operator==(const EpisodeRecord&) const = default;
};

struct Metrics {
    double sr = 0.0;
    double spl = 0.0;
    double mean_traj = 0.0;
    std::optional<double> answer_score;
    bool operator==(const Metrics&) const = default;
};

double episode_spl(const EpisodeRecord& r);
Metrics compute_metrics(const std::vector<EpisodeRecord>& records);

// Cells the agent has observed so far.
class KnownMap {
public:
    KnownMap() = default;
    KnownMap(int width, int height);

    void integrate(const Observation& obs);
    // -1 unknown, 0 free, 1 wall
    int state(Cell c) const;
    bool known(Cell c) const { return state(c) >= 0; }
    bool known_free(Cell c) const { return state(c) == 0; }
    int width() const { return width_; }
    int height() const { return height_; }
    const std::map<Cell, ObjectInfo>& seen_objects() const { return objects_; }
    std::size_t known_count() const { return known_count_; }

    // Known-free cells with an unknown 8-neighbour.
    std::vector<Cell> frontier_cells() const;

    bool operator==(const KnownMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::int8_t> cells_;
    std::map<Cell, ObjectInfo> objects_;
    std::size_t known_count_ = 0;
};

// Agent-side view of where the task target is, if it has been localized.
struct TargetEstimate {
    Cell cell;
    int radius = 0;  // satisfied within this geodesic distance
};
std::optional<TargetEstimate> localize_target(const GoalSpec& goal, const KnownMap& known);
// Terminal action the agent may issue right now, if the task is complete from this observation.
std::optional<Action> ready_terminal(const GoalSpec& goal, const Observation& obs);

// Mutable per-episode world state.
class Environment {
public:
    Environment(const GridMap& map, GoalSpec goal, Pose start);

    const GridMap& map() const { return *map_; }
    const GoalSpec& goal() const { return goal_; }
    const Pose& pose() const { return pose_; }
    const Pose& start() const { return start_; }
    int actions_taken() const { return actions_; }
    int path_length() const { return path_length_; }
    bool done() const { return done_; }
    bool failed() const { return failed_; }
    const std::optional<Action>& terminal_action() const { return terminal_; }
    Observation observation() const;

    StepResult apply(const Action& a);
    void mark_failed() { failed_ = true; done_ = true; }

private:
    const GridMap* map_;
    GoalSpec goal_;
    Pose start_;
    Pose pose_;
    int actions_ = 0;
    int path_length_ = 0;
    bool done_ = false;
    bool failed_ = false;
    std::optional<Action> terminal_;
};

}  // namespace evonav
