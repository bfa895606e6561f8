#include "evonav/types.hpp"

#include <algorithm>

#include "evonav/error.hpp"

namespace evonav {

std::string to_string(Progress p) {
    switch (p) {
        case Progress::Advancing: return "ADVANCING";
        case Progress::Stalled: return "STALLED";
        case Progress::Regressing: return "REGRESSING";
    }
    return "STALLED";
}

Progress parse_progress(const std::string& s) {
    if (s == "ADVANCING") return Progress::Advancing;
    if (s == "STALLED") return Progress::Stalled;
    if (s == "REGRESSING") return Progress::Regressing;
    throw ParseError("unknown progress '" + s + "'", 0);
}

std::string to_string(PrincipleKind k) { return k == PrincipleKind::Guiding ? "GUIDING" : "CAUTIONARY"; }

PrincipleKind parse_principle_kind(const std::string& s) {
    if (s == "GUIDING") return PrincipleKind::Guiding;
    if (s == "CAUTIONARY") return PrincipleKind::Cautionary;
    throw ParseError("unknown principle kind '" + s + "'", 0);
}

bool PlannerContext::has_heuristic(const std::string& pattern_id) const {
    return std::any_of(active_heuristics.begin(), active_heuristics.end(),
                       [&](const MergedHeuristic& h) { return h.pattern_id == pattern_id; });
}

PlannerContext make_context(const GoalSpec& goal, int width, int height) {
    PlannerContext ctx;
    ctx.goal = goal;
    ctx.known = KnownMap(width, height);
    return ctx;
}

}  // namespace evonav
