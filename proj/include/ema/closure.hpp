#pragma once

#include "ema/graph.hpp"

namespace ema {

/// Ancestor relation over the Directed sub-graph of g: r(x,y) iff a chain of
/// Directed edges leads from x to y. The diagonal is always false, even
/// when g has directed cycles. One DFS per source, sources run in parallel.
Reachability ancestorClosure(const MixedGraph& g);

namespace serial {
/// Single-threaded reference for ancestorClosure.
Reachability ancestorClosure(const MixedGraph& g);
}  // namespace serial

}  // namespace ema
