#include "evonav/srm.hpp"

#include "evonav/error.hpp"

namespace evonav {

std::optional<ReflectionSummary> maybe_reflect(const MemoryGraph& graph, SrmAnalyzerBackend& analyzer, int w,
                                               const std::vector<MergedHeuristic>& active_heuristics) {
    if (w < 1) throw ContractError("srm window must be >= 1");
    if (graph.subtask_count() < static_cast<std::size_t>(w)) return std::nullopt;
    const auto ids = graph.recent_window_ids(w);
    std::vector<SubtaskNode> window;
    for (NodeId id : ids) window.push_back(graph.subtask(id));
    ReflectionSummary summary;
    try {
        summary = analyzer.analyze(window, graph.root().goal, active_heuristics);
    } catch (const BackendError&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(std::string("srm analyzer: ") + e.what(), -1);
    }
    summary.window_span = {graph.step_of(ids.front()), graph.step_of(ids.back())};
    return summary;
}

PlannerContext inject_reflection(PlannerContext context, const std::optional<ReflectionSummary>& summary) {
    if (summary) context.recent_reflection = *summary;
    return context;
}

}  // namespace evonav
