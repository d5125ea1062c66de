#include "ema/closure.hpp"
#include "ema/counts.hpp"
#include "ema/graph.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace ema;
using testutil::graph;
using testutil::letters;

TEST(VariableSet, RejectsDuplicatesAndUnknownNames) {
    VariableSet vs;
    EXPECT_EQ(vs.add("a"), 0u);
    EXPECT_EQ(vs.add("b"), 1u);
    EXPECT_THROW(vs.add("a"), ArgumentError);
    EXPECT_THROW(vs.at("z"), ArgumentError);
    EXPECT_THROW(vs.check(2), ArgumentError);
    EXPECT_EQ(vs.at("b"), 1u);
}

TEST(MixedGraph, AtMostOneEdgePerPair) {
    auto vs = letters(3);
    MixedGraph g(vs);
    g.addEdge(0, 1, EdgeMark::Directed);
    EXPECT_THROW(g.addEdge(1, 0, EdgeMark::Directed), ArgumentError);
    EXPECT_THROW(g.addEdge(0, 1, EdgeMark::Undirected), ArgumentError);
    EXPECT_THROW(g.addEdge(2, 2, EdgeMark::Directed), ArgumentError);
    EXPECT_THROW(g.addEdge(0, 3, EdgeMark::Directed), ArgumentError);
}

TEST(MixedGraph, UndirectedIsNormalized) {
    auto vs = letters(2);
    MixedGraph g(vs);
    g.addEdge(1, 0, EdgeMark::Undirected);
    auto e = g.edgeBetween(0, 1);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->source, 0u);
    EXPECT_EQ(e->target, 1u);
    EXPECT_EQ(g, graph(vs, "a--b"));
}

TEST(Dag, EdgeCreatesCycle) {
    auto vs = letters(3);
    Dag empty(vs);
    EXPECT_FALSE(empty.edgeCreatesCycle(0, 1));
    Dag d(vs);
    d.addEdge(0, 1);
    d.addEdge(1, 2);
    EXPECT_TRUE(d.edgeCreatesCycle(2, 0));
    EXPECT_FALSE(d.edgeCreatesCycle(0, 2));
}

TEST(Dag, AddEdge) {
    auto vs = letters(3);
    Dag d(vs);
    d.addEdge(0, 1);
    EXPECT_EQ(d.edgeCount(), 1u);
    d.addEdge(1, 2);
    EXPECT_EQ(d.edges(), (std::vector<std::pair<VarId, VarId>>{{0, 1}, {1, 2}}));
    EXPECT_THROW(d.addEdge(2, 0), InvariantError);
    EXPECT_THROW(d.addEdge(1, 0), ArgumentError);  // antiparallel
    EXPECT_THROW(d.addEdge(0, 1), ArgumentError);  // duplicate
    EXPECT_EQ(d.edgeCount(), 2u);
}

TEST(Dag, TopologicalOrderRespectsEdges) {
    auto vs = letters(5);
    Dag d(vs);
    d.addEdge(3, 1);
    d.addEdge(1, 0);
    d.addEdge(4, 0);
    auto order = d.topologicalOrder();
    ASSERT_TRUE(order);
    std::vector<std::size_t> pos(5);
    for (std::size_t k = 0; k < 5; ++k) pos[(*order)[k]] = k;
    for (auto [x, y] : d.edges()) EXPECT_LT(pos[x], pos[y]);
}

TEST(GroundTruth, AncestorOf) {
    auto vs = letters(3);
    GroundTruth chain(graph(vs, "a->b b->c"));
    EXPECT_TRUE(chain.ancestorOf(0, 2));
    EXPECT_FALSE(chain.ancestorOf(2, 0));
    GroundTruth iso(graph(vs, "a->b"));
    EXPECT_FALSE(iso.ancestorOf(0, 2));
    EXPECT_THROW(iso.ancestorOf(0, 7), ArgumentError);
}

TEST(GroundTruth, OnlyDirectedEdgesFormChains) {
    auto vs = letters(3);
    GroundTruth g(graph(vs, "a--b b->c"));
    EXPECT_FALSE(g.ancestorOf(0, 2));
    EXPECT_TRUE(g.ancestorOf(1, 2));
}

// Repeated boolean squaring as an independent closure oracle.
static std::vector<std::vector<bool>> squaringClosure(const MixedGraph& g) {
    const std::size_t n = g.size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (const auto& e : g.edges())
        if (e.mark == EdgeMark::Directed) r[e.source][e.target] = true;
    for (std::size_t round = 0; (1u << round) < n + 1; ++round) {
        auto next = r;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                if (r[i][k])
                    for (std::size_t j = 0; j < n; ++j)
                        if (r[k][j]) next[i][j] = true;
        r = next;
    }
    for (std::size_t i = 0; i < n; ++i) r[i][i] = false;
    return r;
}

TEST(Closure, MatchesSquaringOracleAndSerial) {
    ema::hash::Stream rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        auto vs = letters(1 + rng.below(9));
        auto g = testutil::randomModel(vs, rng, 0.4);  // may contain directed cycles
        auto par = ancestorClosure(g);
        EXPECT_EQ(par, serial::ancestorClosure(g));
        auto oracle = squaringClosure(g);
        for (VarId i = 0; i < vs->size(); ++i)
            for (VarId j = 0; j < vs->size(); ++j) ASSERT_EQ(par(i, j), oracle[i][j]) << rep;
    }
}

TEST(Counts, DefinitionCases) {
    auto vs = letters(2);
    std::vector<MixedGraph> m1{graph(vs, "a->b"), graph(vs, "b->a"), graph(vs, "a--b")};
    auto c1 = connectionCounts(m1);
    EXPECT_EQ(c1.connection(0, 1), 3);
    EXPECT_EQ(c1.connection(1, 0), 3);
    EXPECT_EQ(c1.oriented(0, 1), 1);
    EXPECT_EQ(c1.oriented(1, 0), 1);

    std::vector<MixedGraph> m2(3, graph(vs, "a->b"));
    auto c2 = connectionCounts(m2);
    EXPECT_EQ(c2.connection(0, 1), 3);
    EXPECT_EQ(c2.oriented(0, 1), 3);

    std::vector<MixedGraph> m3{graph(vs, "a<->b"), graph(vs, "")};
    auto c3 = connectionCounts(m3);
    EXPECT_EQ(c3.connection(0, 1), 1);
    EXPECT_EQ(c3.oriented(0, 1), 0);
    EXPECT_EQ(c3.oriented(1, 0), 0);
    EXPECT_EQ(c3.modelCount(), 2u);
}

TEST(Counts, RejectsBadModelSets) {
    std::vector<MixedGraph> none;
    EXPECT_THROW(connectionCounts(none), ArgumentError);
    std::vector<MixedGraph> mixed{MixedGraph(letters(2)), MixedGraph(testutil::vars({"a", "c"}))};
    EXPECT_THROW(connectionCounts(mixed), ArgumentError);
}

TEST(Counts, ParallelMatchesSerialAndBounds) {
    ema::hash::Stream rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        auto vs = letters(2 + rng.below(7));
        std::vector<MixedGraph> models;
        const auto n = 1 + rng.below(9);
        for (std::size_t k = 0; k < n; ++k) models.push_back(testutil::randomModel(vs, rng));
        auto par = connectionCounts(models);
        ASSERT_EQ(par, serial::connectionCounts(models));
        for (VarId x = 0; x < vs->size(); ++x)
            for (VarId y = 0; y < vs->size(); ++y) {
                if (x == y) continue;
                EXPECT_EQ(par.connection(x, y), par.connection(y, x));
                EXPECT_LE(par.oriented(x, y) + par.oriented(y, x), par.connection(x, y));
                EXPECT_LE(par.connection(x, y), static_cast<int>(n));
            }
    }
}
