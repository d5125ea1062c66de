#pragma once

#include "ema/averaging.hpp"
#include "ema/expert.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace ema {

/// Ground-truth oracle answering from ancestral relations: a pair is
/// connected iff either variable is an ancestor of the other, and the
/// ancestor is the parent. With probability `correctness` the right answer is
/// given, otherwise its negation (existence) or reversal (orientation).
/// Unrelated pairs get a uniformly random orientation regardless of
/// correctness. Noise is a hash of (seed, kind, unordered pair), so the
/// answer does not depend on argument or call order.
class SimulatedExpert : public Expert {
public:
    SimulatedExpert(std::shared_ptr<const GroundTruth> truth, double correctness,
                    std::uint64_t seed);

    ExpertAnswer ask(const ExpertQuery& q) override;
    std::string id() const override;

    ExpertAnswer acceptConnection(VarId x, VarId y) const;
    ExpertAnswer determineOrientation(VarId x, VarId y) const;

    const GroundTruth& truth() const { return *truth_; }
    double correctness() const { return correctness_; }

private:
    std::uint64_t draw(QueryKind kind, VarId x, VarId y, std::uint64_t stream) const;

    std::shared_ptr<const GroundTruth> truth_;
    double correctness_;
    std::uint64_t seed_;
};

/// Uniformly random answers, deterministic in (seed, kind, ordered pair).
/// Used for stress and property runs.
class RandomExpert : public Expert {
public:
    explicit RandomExpert(std::uint64_t seed) : seed_(seed) {}
    ExpertAnswer ask(const ExpertQuery& q) override;
    std::string id() const override { return "random:" + std::to_string(seed_); }

private:
    std::uint64_t seed_;
};

/// One recorded question and its answer, by variable name.
struct TranscriptEntry {
    QueryKind kind = QueryKind::Existence;
    std::string x;
    std::string y;
    bool accept = false;
    std::string parent;
    std::string child;

    bool operator==(const TranscriptEntry&) const = default;
};

using Transcript = std::vector<TranscriptEntry>;

/// Expert answers extracted from a trace, in call order.
Transcript transcriptFromTrace(const AveragingTrace& trace, const VariableSet& vars);

/// Replays a transcript in order. Each query must match the next entry's
/// kind and unordered pair; a mismatch or an exhausted transcript throws
/// ExpertError.
class ScriptedExpert : public Expert {
public:
    explicit ScriptedExpert(Transcript script) : script_(std::move(script)) {}
    ExpertAnswer ask(const ExpertQuery& q) override;
    std::string id() const override { return "scripted"; }
    std::size_t consumed() const { return next_; }
    std::size_t remaining() const { return script_.size() - next_; }

private:
    Transcript script_;
    std::size_t next_ = 0;
};

/// Asks the inner expert with both argument orders and trusts the answer
/// only if both agree; otherwise returns the ensemble majority vote. A
/// VerdictParseError counts as disagreement. Transport errors are retried
/// once per order before propagating.
class ConsistentExpert : public Expert {
public:
    explicit ConsistentExpert(std::shared_ptr<Expert> inner,
                              std::optional<EnsembleCounts> counts = std::nullopt);

    ExpertAnswer ask(const ExpertQuery& q) override;
    std::string id() const override { return "consistent(" + inner_->id() + ")"; }

private:
    std::optional<ExpertAnswer> askOnce(const ExpertQuery& q);
    CountContext contextFor(const ExpertQuery& q) const;

    std::shared_ptr<Expert> inner_;
    std::optional<EnsembleCounts> counts_;
};

std::shared_ptr<Expert> consistencyWrap(std::shared_ptr<Expert> inner,
                                        std::optional<EnsembleCounts> counts = std::nullopt);

/// Persistent answer store keyed on (kind, sorted name pair, expert id),
/// backed by an append-only JSON-lines file. Safe for concurrent use.
class AnswerCache {
public:
    struct Record {
        QueryKind kind = QueryKind::Existence;
        std::string a;  ///< sorted pair, a < b
        std::string b;
        std::string expertId;
        bool accept = false;
        std::string parent;
        std::string child;
        Provenance provenance = Provenance::Simulated;
        std::string timestamp;
    };

    /// In-memory only.
    AnswerCache() = default;
    /// Loads existing records; a malformed line throws CacheError naming it.
    explicit AnswerCache(std::filesystem::path file);

    std::optional<Record> lookup(QueryKind kind, const std::string& x, const std::string& y,
                                 const std::string& expertId) const;
    void store(Record r);
    std::size_t size() const;

private:
    using Key = std::tuple<QueryKind, std::string, std::string, std::string>;

    mutable std::mutex mu_;
    std::optional<std::filesystem::path> file_;
    std::map<Key, Record> records_;
};

/// Serves repeated questions from the cache. Orientation answers are stored
/// as (parent, child) names and re-expressed for the queried argument order.
/// Fallback answers are recomputed from the querying run's count context.
class CachedExpert : public Expert {
public:
    CachedExpert(std::shared_ptr<Expert> inner, std::shared_ptr<AnswerCache> cache);
    ExpertAnswer ask(const ExpertQuery& q) override;
    std::string id() const override { return inner_->id(); }
    std::size_t innerCalls() const { return innerCalls_; }

private:
    std::shared_ptr<Expert> inner_;
    std::shared_ptr<AnswerCache> cache_;
    std::size_t innerCalls_ = 0;
};

std::shared_ptr<Expert> cachedExpert(std::shared_ptr<Expert> inner,
                                     std::shared_ptr<AnswerCache> cache);

}  // namespace ema
