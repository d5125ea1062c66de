#include "ema/averaging.hpp"

#include "ema/hash.hpp"

#include <algorithm>
#include <tuple>

namespace ema {

void AveragingConfig::validate() const {
    auto inUnit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!inUnit(theta1)) throw ArgumentError("theta1 must lie in [0, 1]");
    if (!inUnit(theta2)) throw ArgumentError("theta2 must lie in [0, 1]");
}

std::string_view toString(OrientationRule r) {
    switch (r) {
        case OrientationRule::None: return "none";
        case OrientationRule::OnlyXY: return "only_xy";
        case OrientationRule::OnlyYX: return "only_yx";
        case OrientationRule::ThresholdXY: return "threshold_xy";
        case OrientationRule::ThresholdYX: return "threshold_yx";
        case OrientationRule::Expert: return "expert";
        case OrientationRule::BothBlocked: return "both_blocked";
    }
    return "?";
}

std::vector<std::pair<VarId, VarId>> sortedPairs(const EnsembleCounts& counts,
                                                 const AveragingConfig& cfg) {
    const auto& vars = counts.variables();
    struct Item {
        int c;
        VarId x, y;
        std::uint64_t shuffleKey;
    };
    std::vector<Item> items;
    for (VarId a = 0; a < counts.variableCount(); ++a) {
        for (VarId b = a + 1; b < counts.variableCount(); ++b) {
            int c = counts.connection(a, b);
            if (c == 0) continue;
            VarId x = a, y = b;
            if (vars.name(y) < vars.name(x)) std::swap(x, y);
            std::uint64_t key = 0;
            if (cfg.tieBreak == TieBreak::SeededShuffle)
                key = hash::combine({cfg.seed, hash::ofString(vars.name(x)),
                                     hash::ofString(vars.name(y))});
            items.push_back({c, x, y, key});
        }
    }
    std::sort(items.begin(), items.end(), [&](const Item& l, const Item& r) {
        if (l.c != r.c) return l.c > r.c;
        if (l.shuffleKey != r.shuffleKey) return l.shuffleKey < r.shuffleKey;
        return std::tie(vars.name(l.x), vars.name(l.y)) < std::tie(vars.name(r.x), vars.name(r.y));
    });
    std::vector<std::pair<VarId, VarId>> out;
    out.reserve(items.size());
    for (const auto& it : items) out.emplace_back(it.x, it.y);
    return out;
}

namespace {

ExpertAnswer askChecked(Expert& expert, const ExpertQuery& q) {
    ExpertAnswer a;
    try {
        a = expert.ask(q);
    } catch (const std::exception& e) {
        throw ExpertError(std::string(toString(q.kind)) + " query for ('" + q.xName + "', '" +
                          q.yName + "') failed: " + e.what());
    }
    validateAnswer(q, a);
    return a;
}

}  // namespace

AveragingResult expertModelAverage(std::span<const MixedGraph> models, const AveragingConfig& cfg,
                                   Expert& expert) {
    cfg.validate();
    return expertModelAverage(connectionCounts(models), cfg, expert);
}

AveragingResult expertModelAverage(const EnsembleCounts& counts, const AveragingConfig& cfg,
                                   Expert& expert) {
    cfg.validate();
    if (counts.modelCount() == 0) throw ArgumentError("model list is empty");
    const auto& vars = counts.variables();
    const double n = static_cast<double>(counts.modelCount());

    AveragingResult result{Dag(counts.variablesPtr()), {}};
    Dag& dag = result.dag;

    for (auto [x, y] : sortedPairs(counts, cfg)) {
        PairDecision d;
        d.x = x;
        d.y = y;
        d.counts = CountContext{counts.connection(x, y), counts.modelCount(),
                                counts.oriented(x, y), counts.oriented(y, x)};
        const int c = d.counts.connection;
        const double share = c / n;

        auto query = [&](QueryKind kind) {
            return ExpertQuery{kind, x, y, vars.name(x), vars.name(y), d.counts};
        };

        if (!(share >= cfg.theta1)) {
            d.skippedByTheta1 = true;
            result.trace.decisions.push_back(std::move(d));
            continue;
        }
        d.majority = share > 0.5;
        if (!d.majority) {
            d.existence = askChecked(expert, query(QueryKind::Existence));
            d.admitted = d.existence->accept;
        } else {
            d.admitted = true;
        }

        if (d.admitted) {
            d.xyValid = !dag.edgeCreatesCycle(x, y);
            d.yxValid = !dag.edgeCreatesCycle(y, x);
            if (d.xyValid && d.yxValid) {
                if (static_cast<double>(d.counts.orientedXY) / c >= cfg.theta2) {
                    d.rule = OrientationRule::ThresholdXY;
                    d.edgeAdded = {x, y};
                } else if (static_cast<double>(d.counts.orientedYX) / c >= cfg.theta2) {
                    d.rule = OrientationRule::ThresholdYX;
                    d.edgeAdded = {y, x};
                } else {
                    d.rule = OrientationRule::Expert;
                    d.orientation = askChecked(expert, query(QueryKind::Orientation));
                    d.edgeAdded = {d.orientation->parent, d.orientation->child};
                }
            } else if (d.xyValid) {
                d.rule = OrientationRule::OnlyXY;
                d.edgeAdded = {x, y};
            } else if (d.yxValid) {
                d.rule = OrientationRule::OnlyYX;
                d.edgeAdded = {y, x};
            } else {
                d.rule = OrientationRule::BothBlocked;
            }
            if (d.edgeAdded) dag.addEdge(d.edgeAdded->first, d.edgeAdded->second);
        }
        result.trace.decisions.push_back(std::move(d));
    }
    return result;
}

Dag bayesysModelAverage(std::span<const MixedGraph> models, int minCount) {
    if (minCount < 1) throw ArgumentError("minimum count must be >= 1");
    const auto counts = connectionCounts(models);
    const auto& vars = counts.variables();
    struct Candidate {
        int count;
        VarId parent, child;
    };
    std::vector<Candidate> cands;
    for (VarId p = 0; p < counts.variableCount(); ++p)
        for (VarId ch = 0; ch < counts.variableCount(); ++ch)
            if (p != ch && counts.oriented(p, ch) >= minCount)
                cands.push_back({counts.oriented(p, ch), p, ch});
    std::sort(cands.begin(), cands.end(), [&](const Candidate& l, const Candidate& r) {
        if (l.count != r.count) return l.count > r.count;
        return std::tie(vars.name(l.parent), vars.name(l.child)) <
               std::tie(vars.name(r.parent), vars.name(r.child));
    });
    Dag dag(counts.variablesPtr());
    for (const auto& c : cands) {
        if (dag.hasEdge(c.child, c.parent) || dag.hasEdge(c.parent, c.child)) continue;
        if (dag.edgeCreatesCycle(c.parent, c.child)) continue;
        dag.addEdge(c.parent, c.child);
    }
    return dag;
}

ExpertCallCounts countExpertCalls(const AveragingTrace& trace) {
    ExpertCallCounts out;
    for (const auto& d : trace.decisions) {
        if (d.existence && d.existence->provenance != Provenance::Cache) ++out.existence;
        if (d.orientation && d.orientation->provenance != Provenance::Cache) ++out.orientation;
    }
    return out;
}

}  // namespace ema
