#include "ema/closure.hpp"

#include <vector>

namespace ema {
namespace {

std::vector<std::vector<VarId>> directedChildren(const MixedGraph& g) {
    std::vector<std::vector<VarId>> children(g.size());
    for (const auto& e : g.edges())
        if (e.mark == EdgeMark::Directed) children[e.source].push_back(e.target);
    return children;
}

void reachFrom(VarId source, const std::vector<std::vector<VarId>>& children,
               std::uint8_t* row, std::vector<VarId>& stack) {
    stack.assign(1, source);
    while (!stack.empty()) {
        VarId v = stack.back();
        stack.pop_back();
        for (VarId c : children[v]) {
            if (!row[c]) {
                row[c] = 1;
                stack.push_back(c);
            }
        }
    }
    row[source] = 0;
}

}  // namespace

Reachability ancestorClosure(const MixedGraph& g) {
    const auto children = directedChildren(g);
    const auto n = static_cast<std::ptrdiff_t>(g.size());
    Reachability r(g.size());
    auto* bits = r.raw().data();
#pragma omp parallel
    {
        std::vector<VarId> stack;
#pragma omp for schedule(dynamic, 4)
        for (std::ptrdiff_t s = 0; s < n; ++s)
            reachFrom(static_cast<VarId>(s), children, bits + s * n, stack);
    }
    return r;
}

namespace serial {

Reachability ancestorClosure(const MixedGraph& g) {
    const auto children = directedChildren(g);
    const auto n = g.size();
    Reachability r(n);
    std::vector<VarId> stack;
    for (VarId s = 0; s < n; ++s) reachFrom(s, children, r.raw().data() + s * n, stack);
    return r;
}

}  // namespace serial
}  // namespace ema
