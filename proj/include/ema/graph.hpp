#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ema {

using VarId = std::size_t;

/// Raised for invalid ids, duplicate names, mismatched variable sets and
/// similar caller mistakes.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation would break a structural invariant (e.g. a
/// cycle-inducing insertion into a Dag).
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Variable {
    VarId id = 0;
    std::string name;
    std::optional<std::vector<std::string>> values;
    std::optional<std::string> description;
};

/// Ordered registry of uniquely named variables. A variable's id is its
/// position in the set.
class VariableSet {
public:
    VariableSet() = default;
    explicit VariableSet(const std::vector<std::string>& names);

    VarId add(std::string name,
              std::optional<std::vector<std::string>> values = std::nullopt,
              std::optional<std::string> description = std::nullopt);

    std::size_t size() const { return vars_.size(); }
    bool empty() const { return vars_.empty(); }

    const Variable& operator[](VarId id) const;
    const std::string& name(VarId id) const { return (*this)[id].name; }

    std::optional<VarId> find(std::string_view name) const;
    VarId at(std::string_view name) const;

    void check(VarId id) const;

    const std::vector<Variable>& variables() const { return vars_; }

    /// Same names in the same order. Metadata is not compared.
    bool sameNames(const VariableSet& other) const;

private:
    std::vector<Variable> vars_;
    std::unordered_map<std::string, VarId> index_;
};

enum class EdgeMark { Directed, Undirected, Bidirected };

std::string_view markToken(EdgeMark m);
EdgeMark markFromToken(std::string_view token);

struct Edge {
    VarId source = 0;
    VarId target = 0;
    EdgeMark mark = EdgeMark::Directed;

    auto operator<=>(const Edge&) const = default;
};

/// Candidate causal model: at most one edge of any mark per unordered pair.
/// Undirected and bidirected edges are stored as (min id, max id).
class MixedGraph {
public:
    MixedGraph() = default;
    explicit MixedGraph(std::shared_ptr<const VariableSet> vars);

    const VariableSet& variables() const { return *vars_; }
    const std::shared_ptr<const VariableSet>& variablesPtr() const { return vars_; }
    std::size_t size() const { return vars_ ? vars_->size() : 0; }

    void addEdge(VarId source, VarId target, EdgeMark mark);
    void addEdge(std::string_view source, std::string_view target, EdgeMark mark);
    bool removeEdge(VarId a, VarId b);

    /// The edge on the unordered pair {a,b}, if any, in its stored orientation.
    std::optional<Edge> edgeBetween(VarId a, VarId b) const;
    bool hasDirected(VarId source, VarId target) const;

    /// Edges sorted by (source, target).
    std::vector<Edge> edges() const;
    std::size_t edgeCount() const { return edges_.size(); }

    bool operator==(const MixedGraph& other) const;

private:
    static std::uint64_t key(VarId a, VarId b);

    std::shared_ptr<const VariableSet> vars_;
    std::unordered_map<std::uint64_t, Edge> edges_;
};

/// Directed acyclic graph. Acyclicity is maintained on every insertion.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::shared_ptr<const VariableSet> vars);

    const VariableSet& variables() const { return *vars_; }
    const std::shared_ptr<const VariableSet>& variablesPtr() const { return vars_; }
    std::size_t size() const { return children_.size(); }

    /// True iff adding x -> y would close a cycle, i.e. y already reaches x.
    bool edgeCreatesCycle(VarId x, VarId y) const;
    void addEdge(VarId x, VarId y);

    bool hasEdge(VarId x, VarId y) const;
    std::size_t edgeCount() const { return edgeCount_; }
    std::vector<std::pair<VarId, VarId>> edges() const;
    const std::set<VarId>& children(VarId x) const { return children_.at(x); }

    /// Kahn topological order; empty optional if a cycle exists (never, for
    /// a Dag built through addEdge).
    std::optional<std::vector<VarId>> topologicalOrder() const;

    MixedGraph toMixed() const;

    bool operator==(const Dag& other) const;

private:
    void checkIds(VarId x, VarId y) const;

    std::shared_ptr<const VariableSet> vars_;
    std::vector<std::set<VarId>> children_;
    std::size_t edgeCount_ = 0;
};

/// Row-major V x V boolean reachability relation over Directed edges.
class Reachability {
public:
    Reachability() = default;
    explicit Reachability(std::size_t n) : n_(n), bits_(n * n, 0) {}

    std::size_t size() const { return n_; }
    bool operator()(VarId from, VarId to) const { return bits_[from * n_ + to] != 0; }
    void set(VarId from, VarId to) { bits_[from * n_ + to] = 1; }
    std::vector<std::uint8_t>& raw() { return bits_; }
    const std::vector<std::uint8_t>& raw() const { return bits_; }

    bool operator==(const Reachability&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Ground-truth model with its directed ancestor relation precomputed.
class GroundTruth {
public:
    explicit GroundTruth(MixedGraph graph);

    const MixedGraph& graph() const { return graph_; }
    const VariableSet& variables() const { return graph_.variables(); }

    /// True iff a chain of Directed edges leads from x to y (x != y).
    bool ancestorOf(VarId x, VarId y) const;
    bool related(VarId x, VarId y) const { return ancestorOf(x, y) || ancestorOf(y, x); }

    const Reachability& closure() const { return closure_; }

private:
    MixedGraph graph_;
    Reachability closure_;
};

}  // namespace ema
