#include "ema/graph.hpp"

#include "ema/closure.hpp"

#include <algorithm>
#include <deque>

namespace ema {

VariableSet::VariableSet(const std::vector<std::string>& names) {
    for (const auto& n : names) add(n);
}

VarId VariableSet::add(std::string name, std::optional<std::vector<std::string>> values,
                       std::optional<std::string> description) {
    if (name.empty()) throw ArgumentError("variable name must be non-empty");
    if (index_.count(name)) throw ArgumentError("duplicate variable name '" + name + "'");
    VarId id = vars_.size();
    index_.emplace(name, id);
    vars_.push_back(Variable{id, std::move(name), std::move(values), std::move(description)});
    return id;
}

const Variable& VariableSet::operator[](VarId id) const {
    check(id);
    return vars_[id];
}

std::optional<VarId> VariableSet::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

VarId VariableSet::at(std::string_view name) const {
    auto id = find(name);
    if (!id) throw ArgumentError("unknown variable '" + std::string(name) + "'");
    return *id;
}

void VariableSet::check(VarId id) const {
    if (id >= vars_.size())
        throw ArgumentError("variable id " + std::to_string(id) + " out of range (size " +
                            std::to_string(vars_.size()) + ")");
}

bool VariableSet::sameNames(const VariableSet& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (vars_[i].name != other.vars_[i].name) return false;
    return true;
}

std::string_view markToken(EdgeMark m) {
    switch (m) {
        case EdgeMark::Directed: return "->";
        case EdgeMark::Undirected: return "--";
        case EdgeMark::Bidirected: return "<->";
    }
    return "?";
}

EdgeMark markFromToken(std::string_view token) {
    if (token == "->") return EdgeMark::Directed;
    if (token == "--") return EdgeMark::Undirected;
    if (token == "<->") return EdgeMark::Bidirected;
    throw ArgumentError("bad edge mark '" + std::string(token) + "'");
}

// ---------------------------------------------------------------------------
// MixedGraph

MixedGraph::MixedGraph(std::shared_ptr<const VariableSet> vars) : vars_(std::move(vars)) {
    if (!vars_) throw ArgumentError("MixedGraph requires a variable set");
}

std::uint64_t MixedGraph::key(VarId a, VarId b) {
    auto lo = std::min(a, b), hi = std::max(a, b);
    return (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint64_t>(hi);
}

void MixedGraph::addEdge(VarId source, VarId target, EdgeMark mark) {
    vars_->check(source);
    vars_->check(target);
    if (source == target)
        throw ArgumentError("self-loop on '" + vars_->name(source) + "'");
    auto k = key(source, target);
    if (edges_.count(k))
        throw ArgumentError("duplicate edge on pair ('" + vars_->name(source) + "', '" +
                            vars_->name(target) + "')");
    if (mark != EdgeMark::Directed && source > target) std::swap(source, target);
    edges_.emplace(k, Edge{source, target, mark});
}

void MixedGraph::addEdge(std::string_view source, std::string_view target, EdgeMark mark) {
    addEdge(vars_->at(source), vars_->at(target), mark);
}

bool MixedGraph::removeEdge(VarId a, VarId b) {
    return edges_.erase(key(a, b)) > 0;
}

std::optional<Edge> MixedGraph::edgeBetween(VarId a, VarId b) const {
    auto it = edges_.find(key(a, b));
    if (it == edges_.end()) return std::nullopt;
    return it->second;
}

bool MixedGraph::hasDirected(VarId source, VarId target) const {
    auto e = edgeBetween(source, target);
    return e && e->mark == EdgeMark::Directed && e->source == source;
}

std::vector<Edge> MixedGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edges_.size());
    for (const auto& [k, e] : edges_) out.push_back(e);
    std::sort(out.begin(), out.end());
    return out;
}

bool MixedGraph::operator==(const MixedGraph& other) const {
    if (!vars_ || !other.vars_) return vars_ == other.vars_;
    return vars_->sameNames(*other.vars_) && edges() == other.edges();
}

// ---------------------------------------------------------------------------
// Dag

Dag::Dag(std::shared_ptr<const VariableSet> vars) : vars_(std::move(vars)) {
    if (!vars_) throw ArgumentError("Dag requires a variable set");
    children_.resize(vars_->size());
}

void Dag::checkIds(VarId x, VarId y) const {
    vars_->check(x);
    vars_->check(y);
    if (x == y) throw ArgumentError("self-loop on '" + vars_->name(x) + "'");
}

bool Dag::edgeCreatesCycle(VarId x, VarId y) const {
    checkIds(x, y);
    // DFS from y over current edges; a cycle closes iff x is reachable.
    std::vector<char> seen(size(), 0);
    std::vector<VarId> stack{y};
    seen[y] = 1;
    while (!stack.empty()) {
        VarId v = stack.back();
        stack.pop_back();
        if (v == x) return true;
        for (VarId c : children_[v]) {
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
        }
    }
    return false;
}

void Dag::addEdge(VarId x, VarId y) {
    checkIds(x, y);
    if (children_[x].count(y) || children_[y].count(x))
        throw ArgumentError("edge between '" + vars_->name(x) + "' and '" + vars_->name(y) +
                            "' already present");
    if (edgeCreatesCycle(x, y))
        throw InvariantError("adding '" + vars_->name(x) + "' -> '" + vars_->name(y) +
                             "' would create a cycle");
    children_[x].insert(y);
    ++edgeCount_;
#ifndef NDEBUG
    if (!topologicalOrder()) throw InvariantError("Dag lost acyclicity");
#endif
}

bool Dag::hasEdge(VarId x, VarId y) const {
    return x < size() && children_[x].count(y) > 0;
}

std::vector<std::pair<VarId, VarId>> Dag::edges() const {
    std::vector<std::pair<VarId, VarId>> out;
    out.reserve(edgeCount_);
    for (VarId x = 0; x < size(); ++x)
        for (VarId y : children_[x]) out.emplace_back(x, y);
    return out;
}

std::optional<std::vector<VarId>> Dag::topologicalOrder() const {
    std::vector<std::size_t> indeg(size(), 0);
    for (const auto& ch : children_)
        for (VarId c : ch) ++indeg[c];
    std::deque<VarId> ready;
    for (VarId v = 0; v < size(); ++v)
        if (indeg[v] == 0) ready.push_back(v);
    std::vector<VarId> order;
    order.reserve(size());
    while (!ready.empty()) {
        VarId v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (VarId c : children_[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (order.size() != size()) return std::nullopt;
    return order;
}

MixedGraph Dag::toMixed() const {
    MixedGraph g(vars_);
    for (auto [x, y] : edges()) g.addEdge(x, y, EdgeMark::Directed);
    return g;
}

bool Dag::operator==(const Dag& other) const {
    if (!vars_ || !other.vars_) return vars_ == other.vars_;
    return vars_->sameNames(*other.vars_) && children_ == other.children_;
}

// ---------------------------------------------------------------------------
// GroundTruth

GroundTruth::GroundTruth(MixedGraph graph)
    : graph_(std::move(graph)), closure_(ancestorClosure(graph_)) {}

bool GroundTruth::ancestorOf(VarId x, VarId y) const {
    graph_.variables().check(x);
    graph_.variables().check(y);
    return closure_(x, y);
}

}  // namespace ema
