#pragma once

#include "ema/counts.hpp"
#include "ema/expert.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace ema {

enum class TieBreak { LexicographicPair, SeededShuffle };

struct AveragingConfig {
    double theta1 = 0.0;  ///< edge threshold
    double theta2 = 0.7;  ///< orientation threshold
    TieBreak tieBreak = TieBreak::LexicographicPair;
    std::uint64_t seed = 0;

    /// Throws ArgumentError when a threshold is outside [0, 1].
    void validate() const;
};

/// Which rule settled the orientation of an admitted pair.
enum class OrientationRule {
    None,          ///< pair not admitted
    OnlyXY,        ///< only x -> y avoided a cycle
    OnlyYX,
    ThresholdXY,   ///< both valid, oriented(x,y)/c >= theta2
    ThresholdYX,
    Expert,        ///< both valid, neither share reached theta2
    BothBlocked,   ///< neither direction is cycle-safe; nothing added
};

std::string_view toString(OrientationRule r);

/// Record of one processed pair. (x, y) is the pair as processed:
/// name(x) < name(y).
struct PairDecision {
    VarId x = 0;
    VarId y = 0;
    CountContext counts;
    bool skippedByTheta1 = false;
    bool majority = false;  ///< c/n > 0.5
    std::optional<ExpertAnswer> existence;
    bool admitted = false;
    bool xyValid = false;
    bool yxValid = false;
    OrientationRule rule = OrientationRule::None;
    std::optional<ExpertAnswer> orientation;
    std::optional<std::pair<VarId, VarId>> edgeAdded;

    bool operator==(const PairDecision&) const = default;
};

struct AveragingTrace {
    std::vector<PairDecision> decisions;  ///< in processing order

    bool operator==(const AveragingTrace&) const = default;
};

struct AveragingResult {
    Dag dag;
    AveragingTrace trace;
};

/// Processing order: pairs with c > 0, strictly decreasing c, ties broken by
/// the configured rule. Each pair is returned as (x, y) with name(x) < name(y).
std::vector<std::pair<VarId, VarId>> sortedPairs(const EnsembleCounts& counts,
                                                 const AveragingConfig& cfg);

/// Expert Model Averaging. Greedily admits pairs by connection count; pairs
/// at or below a strict majority need the expert's acceptance, and an
/// orientation is chosen by cycle safety, then theta2 dominance, then the
/// expert. Expert errors are rethrown as ExpertError naming the pair and the
/// query kind.
AveragingResult expertModelAverage(std::span<const MixedGraph> models, const AveragingConfig& cfg,
                                   Expert& expert);

/// Same, reusing precomputed counts.
AveragingResult expertModelAverage(const EnsembleCounts& counts, const AveragingConfig& cfg,
                                   Expert& expert);

/// Greedy directed-edge averaging baseline: directed edges sorted by count
/// (descending, ties by (parent name, child name)), each with count >=
/// minCount added unless it closes a cycle or its reverse is present.
/// Undirected and bidirected edges are ignored.
Dag bayesysModelAverage(std::span<const MixedGraph> models, int minCount = 1);

struct ExpertCallCounts {
    std::size_t existence = 0;
    std::size_t orientation = 0;
    std::size_t total() const { return existence + orientation; }
    bool operator==(const ExpertCallCounts&) const = default;
};

/// Expert invocations recorded in a trace, excluding answers served from a
/// cache.
ExpertCallCounts countExpertCalls(const AveragingTrace& trace);

}  // namespace ema
