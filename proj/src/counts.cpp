#include "ema/counts.hpp"

namespace ema {

EnsembleCounts::EnsembleCounts(std::shared_ptr<const VariableSet> vars, std::size_t modelCount)
    : vars_(std::move(vars)),
      n_(modelCount),
      v_(vars_ ? vars_->size() : 0),
      connection_(v_ * v_, 0),
      oriented_(v_ * v_, 0) {}

void checkModelSet(std::span<const MixedGraph> models) {
    if (models.empty()) throw ArgumentError("model list is empty");
    const auto& first = models.front().variables();
    for (std::size_t i = 1; i < models.size(); ++i)
        if (!models[i].variables().sameNames(first))
            throw ArgumentError("model " + std::to_string(i) +
                                " is defined over a different variable set");
}

namespace {

void tally(const MixedGraph& m, std::size_t v, int* conn, int* orient) {
    for (const auto& e : m.edges()) {
        ++conn[e.source * v + e.target];
        ++conn[e.target * v + e.source];
        if (e.mark == EdgeMark::Directed) ++orient[e.source * v + e.target];
    }
}

}  // namespace

EnsembleCounts connectionCounts(std::span<const MixedGraph> models) {
    checkModelSet(models);
    EnsembleCounts out(models.front().variablesPtr(), models.size());
    const std::size_t v = out.variableCount();
    const std::size_t cells = v * v;
    int* conn = out.connectionTable().data();
    int* orient = out.orientedTable().data();
    const auto count = static_cast<std::ptrdiff_t>(models.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : conn[:cells], orient[:cells])
    for (std::ptrdiff_t i = 0; i < count; ++i) tally(models[i], v, conn, orient);
    return out;
}

namespace serial {

EnsembleCounts connectionCounts(std::span<const MixedGraph> models) {
    checkModelSet(models);
    EnsembleCounts out(models.front().variablesPtr(), models.size());
    const std::size_t v = out.variableCount();
    for (const auto& m : models)
        tally(m, v, out.connectionTable().data(), out.orientedTable().data());
    return out;
}

}  // namespace serial
}  // namespace ema
