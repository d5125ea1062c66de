#include "ema/io.hpp"
#include "ema/metrics.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace ema;
using testutil::graph;
using testutil::letters;

TEST(Confusion, AsiaIdentity) {
    auto vs = io::loadVariables(EMA_FIXTURES "/asia_variables.txt");
    auto truth = io::parseGraphFile(EMA_FIXTURES "/asia_truth.csv", vs);
    auto c = confusion(truth, truth);
    EXPECT_EQ(c.tp, Rational(8));
    EXPECT_EQ(c.fn, Rational(0));
    EXPECT_EQ(c.fp, Rational(0));
    EXPECT_EQ(c.tn, Rational(20));
    EXPECT_EQ(c.a, 8);
    EXPECT_EQ(c.i, 20);
}

TEST(Confusion, PartialMatches) {
    auto vs = letters(2);
    auto rev = confusion(graph(vs, "a->b"), graph(vs, "b->a"));
    EXPECT_EQ(rev.tp, Rational(1, 2));
    EXPECT_EQ(rev.fn, Rational(1, 2));
    EXPECT_EQ(rev.fp, Rational(0));
    auto conf = confusion(graph(vs, "a<->b"), graph(vs, "a->b"));
    EXPECT_EQ(conf.tp, Rational(1, 2));
    EXPECT_EQ(conf.fn, Rational(1, 2));
    auto full = confusion(graph(vs, "a<->b"), graph(vs, "b<->a"));
    EXPECT_EQ(full.tp, Rational(1));
    auto und = confusion(graph(vs, "a->b"), graph(vs, "a--b"));
    EXPECT_EQ(und.tp, Rational(1, 2));
    auto bi = confusion(graph(vs, "a->b"), graph(vs, "a<->b"));
    EXPECT_EQ(bi.tp, Rational(1, 2));
    EXPECT_THROW(confusion(graph(vs, "a->b"), graph(testutil::vars({"a", "c"}), "")), ArgumentError);
}

TEST(Score, Fixtures) {
    auto vs = letters(3);
    auto truth = graph(vs, "a->b");
    auto id = score(truth, truth);
    EXPECT_EQ(id.bsf, Rational(1));
    EXPECT_EQ(*id.f1, Rational(1));
    EXPECT_EQ(*id.precision, Rational(1));
    EXPECT_EQ(id.recall, Rational(1));
    EXPECT_EQ(id.shd, Rational(0));

    auto empty = score(truth, graph(vs, ""));
    EXPECT_EQ(empty.bsf, Rational(0));
    EXPECT_EQ(empty.shd, Rational(1));
    EXPECT_FALSE(empty.precision);
    EXPECT_EQ(*empty.f1, Rational(0));
    EXPECT_EQ(empty.recall, Rational(0));
    EXPECT_FALSE(score(truth, graph(vs, ""), InvalidPrecisionF1::Exclude).f1);

    auto rev = score(truth, graph(vs, "b->a"));
    EXPECT_EQ(rev.confusion.tn, Rational(2));
    EXPECT_EQ(rev.bsf, Rational(1, 2));
    EXPECT_EQ(*rev.f1, Rational(2, 3));
    EXPECT_EQ(*rev.precision, Rational(1));
    EXPECT_EQ(rev.recall, Rational(1, 2));
    EXPECT_EQ(rev.shd, Rational(1, 2));

    EXPECT_THROW(score(graph(vs, ""), graph(vs, "a->b")), ArgumentError);
}

TEST(Score, CompleteTruthHasNoIndependencies) {
    auto vs = letters(2);
    auto r = score(graph(vs, "a->b"), graph(vs, "a->b"));
    EXPECT_EQ(r.confusion.i, 0);
    EXPECT_EQ(r.bsf, Rational(1));
    EXPECT_EQ(score(graph(vs, "a->b"), graph(vs, "")).bsf, Rational(0));
}

TEST(ScoreBatch, Aggregates) {
    auto vs = letters(3);
    auto truth = graph(vs, "a->b b->c");
    auto one = scoreBatch(truth, {graph(vs, "a->b")}, {});
    EXPECT_EQ(one.labels, std::vector<std::string>{"0"});
    EXPECT_DOUBLE_EQ(one.aggregate.bsf.mean, one.reports[0].bsf.toDouble());
    EXPECT_EQ(one.aggregate.bsf.std, 0.0);

    auto two = scoreBatch(truth, {graph(vs, "a->b"), graph(vs, "a->b a->c")}, {"x", "y"});
    EXPECT_EQ(two.reports[0].shd, Rational(1));
    EXPECT_EQ(two.reports[1].shd, Rational(2));
    EXPECT_DOUBLE_EQ(two.aggregate.shd.mean, 1.5);
    EXPECT_NEAR(two.aggregate.shd.std, std::sqrt(0.5), 1e-12);

    auto withEmpty = scoreBatch(truth, {graph(vs, ""), graph(vs, "a->b a->c")}, {});
    EXPECT_EQ(withEmpty.aggregate.invalidPrecision, 1u);
    EXPECT_EQ(withEmpty.aggregate.precision.count, 1u);
    EXPECT_DOUBLE_EQ(withEmpty.aggregate.precision.mean, 0.5);
    EXPECT_EQ(withEmpty.aggregate.f1.count, 2u);

    EXPECT_THROW(scoreBatch(truth, {}, {}), ArgumentError);
}

namespace {
MixedGraph relabel(const MixedGraph& g, const std::vector<VarId>& perm,
                   const std::shared_ptr<const VariableSet>& vs) {
    MixedGraph out(vs);
    for (const auto& e : g.edges()) out.addEdge(perm[e.source], perm[e.target], e.mark);
    return out;
}
}  // namespace

TEST(MetricsProperty, Identities) {
    ema::hash::Stream rng(21);
    for (int rep = 0; rep < 10000; ++rep) {
        auto vs = letters(2 + rng.below(11));
        auto t = testutil::randomModel(vs, rng, 0.3);
        auto p = testutil::randomModel(vs, rng, 0.3);
        auto c = confusion(t, p);
        ASSERT_EQ(c.tp + c.fn, Rational(c.a));
        ASSERT_EQ(c.tn + c.fp, Rational(c.i));
        ASSERT_GE(c.tp, Rational(0));
        ASSERT_GE(c.fn, Rational(0));
        if (rep % 10 == 0) ASSERT_EQ(c, serial::confusion(t, p));
        if (c.a == 0) continue;
        auto r = score(c);
        ASSERT_GE(r.bsf, Rational(-1));
        ASSERT_LE(r.bsf, Rational(1));
        ASSERT_GE(r.shd, Rational(0));
        if (r.precision) {
            ASSERT_LE(*r.precision, Rational(1));
            if (*r.precision + r.recall > Rational(0))
                ASSERT_EQ(*r.f1, Rational(2) * *r.precision * r.recall / (*r.precision + r.recall));
        }
    }
}

TEST(MetricsProperty, SelfScoreAndSpuriousEdge) {
    ema::hash::Stream rng(22);
    for (int rep = 0; rep < 500; ++rep) {
        auto vs = letters(3 + rng.below(8));
        auto t = testutil::randomTruth(vs, rng);
        if (t.edgeCount() == 0) continue;
        auto self = score(t, t);
        EXPECT_EQ(self.shd, Rational(0));
        EXPECT_EQ(self.recall, Rational(1));
        EXPECT_EQ(*self.precision, Rational(1));
        EXPECT_EQ(*self.f1, Rational(1));
        EXPECT_EQ(self.bsf, Rational(1));
        // one spurious edge on a non-adjacent pair
        for (VarId a = 0; a < vs->size(); ++a)
            for (VarId b = a + 1; b < vs->size(); ++b) {
                if (t.edgeBetween(a, b)) continue;
                auto p = t;
                p.addEdge(a, b, EdgeMark::Directed);
                auto r = score(t, p);
                EXPECT_EQ(r.confusion.fp, self.confusion.fp + Rational(1));
                EXPECT_EQ(r.shd, self.shd + Rational(1));
                goto next;
            }
    next:;
    }
}

TEST(MetricsProperty, EmptyAndFlippedBsf) {
    ema::hash::Stream rng(23);
    for (int rep = 0; rep < 500; ++rep) {
        auto vs = letters(2 + rng.below(5));
        auto t = testutil::randomTruth(vs, rng, 0.5);
        if (t.edgeCount() == 0) continue;
        EXPECT_EQ(score(t, MixedGraph(vs)).bsf, Rational(0));
        // complement of the skeleton: every true edge missed, every independence violated
        MixedGraph flip(vs);
        for (VarId a = 0; a < vs->size(); ++a)
            for (VarId b = a + 1; b < vs->size(); ++b)
                if (!t.edgeBetween(a, b)) flip.addEdge(a, b, EdgeMark::Directed);
        EXPECT_LE(score(t, flip).bsf, Rational(0));
    }
}

TEST(MetricsProperty, RelabelingInvariant) {
    ema::hash::Stream rng(24);
    for (int rep = 0; rep < 500; ++rep) {
        const auto n = 2 + rng.below(8);
        auto vs = letters(n);
        auto t = testutil::randomModel(vs, rng, 0.4);
        if (t.edgeCount() == 0) continue;
        auto p = testutil::randomModel(vs, rng, 0.4);
        std::vector<VarId> perm(n);
        for (std::size_t k = 0; k < n; ++k) perm[k] = k;
        for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.below(k)]);
        auto a = score(t, p), b = score(relabel(t, perm, vs), relabel(p, perm, vs));
        EXPECT_EQ(a.confusion, b.confusion);
        EXPECT_EQ(a.bsf, b.bsf);
    }
}
