#pragma once

#include "ema/averaging.hpp"
#include "ema/graph.hpp"
#include "ema/rational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ema {

/// Fractional confusion counts over unordered variable pairs. A true edge
/// predicted with the wrong mark is half a true positive and half a false
/// negative.
struct ConfusionCounts {
    Rational tp, fp, fn, tn;
    std::int64_t a = 0;  ///< ground-truth connections
    std::int64_t i = 0;  ///< ground-truth independencies, V(V-1)/2 - a

    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const MixedGraph& truth, const MixedGraph& predicted);

namespace serial {
ConfusionCounts confusion(const MixedGraph& truth, const MixedGraph& predicted);
}  // namespace serial

enum class InvalidPrecisionF1 { Zero, Exclude };

struct MetricsReport {
    Rational bsf;
    std::optional<Rational> f1;
    std::optional<Rational> precision;  ///< empty when nothing was predicted
    Rational recall;
    Rational shd;
    ConfusionCounts confusion;
    std::optional<ExpertCallCounts> expertCalls;

    bool precisionValid() const { return precision.has_value(); }
};

/// precision = tp/(tp+fp); recall = tp/a; bsf = (tp/a + tn/i - fp/i - fn/a)/2;
/// shd = fp + fn. Throws ArgumentError when the truth has no edges.
MetricsReport score(const ConfusionCounts& c,
                    InvalidPrecisionF1 policy = InvalidPrecisionF1::Zero);

MetricsReport score(const MixedGraph& truth, const MixedGraph& predicted,
                    InvalidPrecisionF1 policy = InvalidPrecisionF1::Zero);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation, 0 for a single value
    std::size_t count = 0;
};

struct BatchAggregate {
    MetricSummary bsf, f1, precision, recall, shd;
    std::size_t invalidPrecision = 0;  ///< reports excluded from precision
};

struct BatchReport {
    std::vector<std::string> labels;
    std::vector<MetricsReport> reports;
    BatchAggregate aggregate;
};

MetricSummary summarize(const std::vector<double>& values);

/// Scores each prediction and aggregates mean/std per metric. Invalid
/// precision values are left out of the precision aggregate and counted.
BatchReport scoreBatch(const MixedGraph& truth, const std::vector<MixedGraph>& predictions,
                       std::vector<std::string> labels,
                       InvalidPrecisionF1 policy = InvalidPrecisionF1::Zero);

BatchAggregate aggregate(const std::vector<MetricsReport>& reports);

}  // namespace ema
