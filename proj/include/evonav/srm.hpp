#pragma once

#include <optional>

#include "evonav/backends.hpp"
#include "evonav/memory_graph.hpp"
#include "evonav/types.hpp"

namespace evonav {

// Summary over exactly the last w subtasks, or nullopt while fewer than w exist.
std::optional<ReflectionSummary> maybe_reflect(const MemoryGraph& graph, SrmAnalyzerBackend& analyzer, int w,
                                               const std::vector<MergedHeuristic>& active_heuristics = {});

// Replaces any earlier summary; an absent summary leaves the context as it was.
PlannerContext inject_reflection(PlannerContext context, const std::optional<ReflectionSummary>& summary);

}  // namespace evonav
