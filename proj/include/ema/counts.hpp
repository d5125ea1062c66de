#pragma once

#include "ema/graph.hpp"

#include <span>

namespace ema {

/// Connection and orientation counts over a model set.
///
/// connection(a,b) counts models with any edge on the unordered pair {a,b};
/// oriented(x,y) counts models with the Directed edge x -> y. Undirected and
/// bidirected edges count as connections only.
class EnsembleCounts {
public:
    EnsembleCounts() = default;
    EnsembleCounts(std::shared_ptr<const VariableSet> vars, std::size_t modelCount);

    std::size_t modelCount() const { return n_; }
    std::size_t variableCount() const { return v_; }
    const VariableSet& variables() const { return *vars_; }
    const std::shared_ptr<const VariableSet>& variablesPtr() const { return vars_; }

    int connection(VarId a, VarId b) const { return connection_[a * v_ + b]; }
    int oriented(VarId x, VarId y) const { return oriented_[x * v_ + y]; }

    /// Row-major V x V tables; connection is stored symmetrically.
    std::vector<int>& connectionTable() { return connection_; }
    std::vector<int>& orientedTable() { return oriented_; }
    const std::vector<int>& connectionTable() const { return connection_; }
    const std::vector<int>& orientedTable() const { return oriented_; }

    bool operator==(const EnsembleCounts& o) const {
        return n_ == o.n_ && v_ == o.v_ && connection_ == o.connection_ && oriented_ == o.oriented_;
    }

private:
    std::shared_ptr<const VariableSet> vars_;
    std::size_t n_ = 0;
    std::size_t v_ = 0;
    std::vector<int> connection_;
    std::vector<int> oriented_;
};

/// Throws ArgumentError for an empty list or models over different variables.
void checkModelSet(std::span<const MixedGraph> models);

/// Counts over all models; models are processed in parallel with an array
/// reduction.
EnsembleCounts connectionCounts(std::span<const MixedGraph> models);

namespace serial {
EnsembleCounts connectionCounts(std::span<const MixedGraph> models);
}  // namespace serial

}  // namespace ema
