#include "ema/metrics.hpp"

#include <cmath>

namespace ema {
namespace {

struct HalfCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0, a = 0;  // in half units, a whole
};

// Contribution of one unordered pair, in half units.
inline void classify(const std::optional<Edge>& t, const std::optional<Edge>& p, HalfCounts& h) {
    if (!t) {
        if (p)
            h.fp += 2;
        else
            h.tn += 2;
        return;
    }
    ++h.a;
    if (!p) {
        h.fn += 2;
        return;
    }
    bool full;
    if (t->mark == EdgeMark::Directed)
        full = p->mark == EdgeMark::Directed && p->source == t->source;
    else
        full = p->mark == t->mark;
    if (full) {
        h.tp += 2;
    } else {
        h.tp += 1;
        h.fn += 1;
    }
}

void checkSameVariables(const MixedGraph& truth, const MixedGraph& predicted) {
    if (!truth.variables().sameNames(predicted.variables()))
        throw ArgumentError("truth and prediction are defined over different variables");
}

ConfusionCounts finish(const HalfCounts& h, std::size_t v) {
    ConfusionCounts c;
    c.tp = Rational(h.tp, 2);
    c.fp = Rational(h.fp, 2);
    c.fn = Rational(h.fn, 2);
    c.tn = Rational(h.tn, 2);
    c.a = h.a;
    c.i = static_cast<std::int64_t>(v * (v - 1) / 2) - h.a;
    return c;
}

}  // namespace

ConfusionCounts confusion(const MixedGraph& truth, const MixedGraph& predicted) {
    checkSameVariables(truth, predicted);
    const auto v = static_cast<std::ptrdiff_t>(truth.size());
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0, a = 0;
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : tp, fp, fn, tn, a)
    for (std::ptrdiff_t x = 0; x < v; ++x) {
        HalfCounts h;
        for (std::ptrdiff_t y = x + 1; y < v; ++y)
            classify(truth.edgeBetween(x, y), predicted.edgeBetween(x, y), h);
        tp += h.tp;
        fp += h.fp;
        fn += h.fn;
        tn += h.tn;
        a += h.a;
    }
    return finish(HalfCounts{tp, fp, fn, tn, a}, truth.size());
}

namespace serial {

ConfusionCounts confusion(const MixedGraph& truth, const MixedGraph& predicted) {
    checkSameVariables(truth, predicted);
    HalfCounts h;
    for (VarId x = 0; x < truth.size(); ++x)
        for (VarId y = x + 1; y < truth.size(); ++y)
            classify(truth.edgeBetween(x, y), predicted.edgeBetween(x, y), h);
    return finish(h, truth.size());
}

}  // namespace serial

MetricsReport score(const ConfusionCounts& c, InvalidPrecisionF1 policy) {
    if (c.a < 1) throw ArgumentError("ground truth has no edges; BSF is undefined");
    MetricsReport r;
    r.confusion = c;
    const Rational a(c.a);
    r.recall = c.tp / a;
    if (c.tp + c.fp != Rational(0)) r.precision = c.tp / (c.tp + c.fp);

    if (r.precision) {
        const Rational sum = *r.precision + r.recall;
        r.f1 = sum == Rational(0) ? Rational(0) : Rational(2) * *r.precision * r.recall / sum;
    } else if (policy == InvalidPrecisionF1::Zero) {
        r.f1 = Rational(0);
    }

    // no independencies to recover: that half of the score is vacuously perfect
    const Rational tnShare = c.i > 0 ? c.tn / Rational(c.i) : Rational(1);
    const Rational fpShare = c.i > 0 ? c.fp / Rational(c.i) : Rational(0);
    r.bsf = Rational(1, 2) * (c.tp / a + tnShare - fpShare - c.fn / a);
    r.shd = c.fp + c.fn;
    return r;
}

MetricsReport score(const MixedGraph& truth, const MixedGraph& predicted,
                    InvalidPrecisionF1 policy) {
    return score(confusion(truth, predicted), policy);
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

BatchAggregate aggregate(const std::vector<MetricsReport>& reports) {
    std::vector<double> bsf, f1, precision, recall, shd;
    BatchAggregate agg;
    for (const auto& r : reports) {
        bsf.push_back(r.bsf.toDouble());
        if (r.f1) f1.push_back(r.f1->toDouble());
        if (r.precision)
            precision.push_back(r.precision->toDouble());
        else
            ++agg.invalidPrecision;
        recall.push_back(r.recall.toDouble());
        shd.push_back(r.shd.toDouble());
    }
    agg.bsf = summarize(bsf);
    agg.f1 = summarize(f1);
    agg.precision = summarize(precision);
    agg.recall = summarize(recall);
    agg.shd = summarize(shd);
    return agg;
}

BatchReport scoreBatch(const MixedGraph& truth, const std::vector<MixedGraph>& predictions,
                       std::vector<std::string> labels, InvalidPrecisionF1 policy) {
    if (predictions.empty()) throw ArgumentError("no predictions to score");
    if (labels.empty())
        for (std::size_t k = 0; k < predictions.size(); ++k) labels.push_back(std::to_string(k));
    if (labels.size() != predictions.size())
        throw ArgumentError("label count does not match prediction count");
    BatchReport out;
    out.labels = std::move(labels);
    for (const auto& p : predictions) out.reports.push_back(score(truth, p, policy));
    out.aggregate = aggregate(out.reports);
    return out;
}

}  // namespace ema
