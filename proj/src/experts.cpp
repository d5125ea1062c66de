#include "ema/experts.hpp"

#include "ema/hash.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ema {

// ---------------------------------------------------------------------------
// SimulatedExpert

SimulatedExpert::SimulatedExpert(std::shared_ptr<const GroundTruth> truth, double correctness,
                                 std::uint64_t seed)
    : truth_(std::move(truth)), correctness_(correctness), seed_(seed) {
    if (!truth_) throw ArgumentError("simulated expert needs a ground truth");
    if (!(correctness >= 0.0 && correctness <= 1.0))
        throw ArgumentError("expert correctness must lie in [0, 1]");
}

std::string SimulatedExpert::id() const {
    std::ostringstream os;
    os << "simulated:p=" << correctness_ << ":seed=" << seed_;
    return os.str();
}

std::uint64_t SimulatedExpert::draw(QueryKind kind, VarId x, VarId y, std::uint64_t stream) const {
    return hash::combine({seed_, static_cast<std::uint64_t>(kind), std::min(x, y), std::max(x, y),
                          stream});
}

ExpertAnswer SimulatedExpert::acceptConnection(VarId x, VarId y) const {
    const bool correct = truth_->related(x, y);
    const bool honest = hash::bernoulli(draw(QueryKind::Existence, x, y, 0), correctness_);
    return ExpertAnswer::existence(honest ? correct : !correct, Provenance::Simulated);
}

ExpertAnswer SimulatedExpert::determineOrientation(VarId x, VarId y) const {
    VarId parent, child;
    if (truth_->ancestorOf(x, y)) {
        parent = x;
        child = y;
    } else if (truth_->ancestorOf(y, x)) {
        parent = y;
        child = x;
    } else {
        // arbitrary orientation, independent of correctness
        const bool lowFirst = draw(QueryKind::Orientation, x, y, 1) & 1;
        parent = lowFirst ? std::min(x, y) : std::max(x, y);
        child = lowFirst ? std::max(x, y) : std::min(x, y);
        return ExpertAnswer::orientation(parent, child, Provenance::Simulated);
    }
    if (!hash::bernoulli(draw(QueryKind::Orientation, x, y, 0), correctness_))
        std::swap(parent, child);
    return ExpertAnswer::orientation(parent, child, Provenance::Simulated);
}

ExpertAnswer SimulatedExpert::ask(const ExpertQuery& q) {
    return q.kind == QueryKind::Existence ? acceptConnection(q.x, q.y)
                                          : determineOrientation(q.x, q.y);
}

// ---------------------------------------------------------------------------
// RandomExpert

ExpertAnswer RandomExpert::ask(const ExpertQuery& q) {
    const bool bit = hash::combine({seed_, static_cast<std::uint64_t>(q.kind), q.x, q.y}) & 1;
    if (q.kind == QueryKind::Existence) return ExpertAnswer::existence(bit, Provenance::Simulated);
    return bit ? ExpertAnswer::orientation(q.x, q.y, Provenance::Simulated)
               : ExpertAnswer::orientation(q.y, q.x, Provenance::Simulated);
}

// ---------------------------------------------------------------------------
// Transcripts

Transcript transcriptFromTrace(const AveragingTrace& trace, const VariableSet& vars) {
    Transcript out;
    for (const auto& d : trace.decisions) {
        if (d.existence) {
            TranscriptEntry e;
            e.kind = QueryKind::Existence;
            e.x = vars.name(d.x);
            e.y = vars.name(d.y);
            e.accept = d.existence->accept;
            out.push_back(std::move(e));
        }
        if (d.orientation) {
            TranscriptEntry e;
            e.kind = QueryKind::Orientation;
            e.x = vars.name(d.x);
            e.y = vars.name(d.y);
            e.parent = vars.name(d.orientation->parent);
            e.child = vars.name(d.orientation->child);
            out.push_back(std::move(e));
        }
    }
    return out;
}

ExpertAnswer ScriptedExpert::ask(const ExpertQuery& q) {
    if (next_ >= script_.size())
        throw ExpertError("transcript exhausted at " + std::string(toString(q.kind)) +
                          " query ('" + q.xName + "', '" + q.yName + "')");
    const auto& e = script_[next_];
    const bool samePair = (e.x == q.xName && e.y == q.yName) || (e.x == q.yName && e.y == q.xName);
    if (e.kind != q.kind || !samePair)
        throw ExpertError("transcript entry " + std::to_string(next_) + " is " +
                          std::string(toString(e.kind)) + " ('" + e.x + "', '" + e.y +
                          "') but the run asked " + std::string(toString(q.kind)) + " ('" +
                          q.xName + "', '" + q.yName + "')");
    ++next_;
    if (e.kind == QueryKind::Existence) return ExpertAnswer::existence(e.accept, Provenance::Scripted);
    if (e.parent == q.xName && e.child == q.yName)
        return ExpertAnswer::orientation(q.x, q.y, Provenance::Scripted);
    if (e.parent == q.yName && e.child == q.xName)
        return ExpertAnswer::orientation(q.y, q.x, Provenance::Scripted);
    throw ExpertError("transcript entry " + std::to_string(next_ - 1) +
                      " orients a pair outside the query");
}

// ---------------------------------------------------------------------------
// ConsistentExpert

ConsistentExpert::ConsistentExpert(std::shared_ptr<Expert> inner, std::optional<EnsembleCounts> counts)
    : inner_(std::move(inner)), counts_(std::move(counts)) {
    if (!inner_) throw ArgumentError("consistency wrapper needs an inner expert");
}

std::optional<ExpertAnswer> ConsistentExpert::askOnce(const ExpertQuery& q) {
    for (int attempt = 0;; ++attempt) {
        try {
            auto a = inner_->ask(q);
            validateAnswer(q, a);
            return a;
        } catch (const VerdictParseError&) {
            return std::nullopt;
        } catch (const TransportError&) {
            if (attempt >= 1) throw;
        }
    }
}

CountContext ConsistentExpert::contextFor(const ExpertQuery& q) const {
    if (q.context) return *q.context;
    if (!counts_)
        throw ExpertError("no ensemble counts available for the majority-vote fallback on ('" +
                          q.xName + "', '" + q.yName + "')");
    return CountContext{counts_->connection(q.x, q.y), counts_->modelCount(),
                        counts_->oriented(q.x, q.y), counts_->oriented(q.y, q.x)};
}

ExpertAnswer ConsistentExpert::ask(const ExpertQuery& q) {
    auto forward = askOnce(q);
    auto backward = askOnce(q.swapped());
    if (forward && backward && forward->sameVerdict(*backward)) return *forward;
    return majorityFallback(q, contextFor(q));
}

std::shared_ptr<Expert> consistencyWrap(std::shared_ptr<Expert> inner,
                                        std::optional<EnsembleCounts> counts) {
    return std::make_shared<ConsistentExpert>(std::move(inner), std::move(counts));
}

// ---------------------------------------------------------------------------
// AnswerCache

namespace {

std::string utcNow() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

nlohmann::json toJson(const AnswerCache::Record& r) {
    nlohmann::json j;
    j["kind"] = toString(r.kind);
    j["pair"] = {r.a, r.b};
    if (r.kind == QueryKind::Existence)
        j["answer"] = r.accept;
    else
        j["answer"] = {r.parent, r.child};
    j["provenance"] = toString(r.provenance);
    j["timestamp"] = r.timestamp;
    j["expertId"] = r.expertId;
    return j;
}

AnswerCache::Record fromJson(const nlohmann::json& j) {
    AnswerCache::Record r;
    r.kind = queryKindFromString(j.at("kind").get<std::string>());
    const auto& pair = j.at("pair");
    if (!pair.is_array() || pair.size() != 2) throw std::runtime_error("pair must have two names");
    r.a = pair[0].get<std::string>();
    r.b = pair[1].get<std::string>();
    if (!(r.a < r.b)) throw std::runtime_error("pair is not sorted");
    if (r.kind == QueryKind::Existence) {
        r.accept = j.at("answer").get<bool>();
    } else {
        const auto& ans = j.at("answer");
        if (!ans.is_array() || ans.size() != 2) throw std::runtime_error("orientation answer must be [parent, child]");
        r.parent = ans[0].get<std::string>();
        r.child = ans[1].get<std::string>();
        bool ok = (r.parent == r.a && r.child == r.b) || (r.parent == r.b && r.child == r.a);
        if (!ok) throw std::runtime_error("orientation answer is not a permutation of the pair");
    }
    r.provenance = provenanceFromString(j.at("provenance").get<std::string>());
    r.timestamp = j.value("timestamp", "");
    r.expertId = j.at("expertId").get<std::string>();
    return r;
}

}  // namespace

AnswerCache::AnswerCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(*file_);
    if (!in) return;  // a new cache
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto r = fromJson(nlohmann::json::parse(line));
            records_[Key{r.kind, r.a, r.b, r.expertId}] = std::move(r);
        } catch (const std::exception& e) {
            throw CacheError("corrupt cache entry at " + file_->string() + ":" +
                             std::to_string(lineNo) + ": " + e.what());
        }
    }
}

std::optional<AnswerCache::Record> AnswerCache::lookup(QueryKind kind, const std::string& x,
                                                       const std::string& y,
                                                       const std::string& expertId) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(Key{kind, std::min(x, y), std::max(x, y), expertId});
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void AnswerCache::store(Record r) {
    if (r.b < r.a) std::swap(r.a, r.b);
    if (r.timestamp.empty()) r.timestamp = utcNow();
    std::lock_guard lock(mu_);
    Key k{r.kind, r.a, r.b, r.expertId};
    if (file_) {
        std::ofstream out(*file_, std::ios::app);
        if (!out) throw CacheError("cannot append to cache file " + file_->string());
        out << toJson(r).dump() << '\n';
    }
    records_[k] = std::move(r);
}

std::size_t AnswerCache::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

// ---------------------------------------------------------------------------
// CachedExpert

CachedExpert::CachedExpert(std::shared_ptr<Expert> inner, std::shared_ptr<AnswerCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
    if (!inner_ || !cache_) throw ArgumentError("cached expert needs an inner expert and a store");
}

ExpertAnswer CachedExpert::ask(const ExpertQuery& q) {
    const auto expertId = inner_->id();
    if (auto hit = cache_->lookup(q.kind, q.xName, q.yName, expertId)) {
        ExpertAnswer a;
        if (hit->provenance == Provenance::FallbackMajorityVote && q.context) {
            a = majorityFallback(q, *q.context);
        } else if (q.kind == QueryKind::Existence) {
            a = ExpertAnswer::existence(hit->accept, Provenance::Cache);
        } else if (hit->parent == q.xName && hit->child == q.yName) {
            a = ExpertAnswer::orientation(q.x, q.y, Provenance::Cache);
        } else if (hit->parent == q.yName && hit->child == q.xName) {
            a = ExpertAnswer::orientation(q.y, q.x, Provenance::Cache);
        } else {
            throw CacheError("cached orientation for ('" + q.xName + "', '" + q.yName +
                             "') names other variables");
        }
        a.provenance = Provenance::Cache;
        return a;
    }
    auto a = inner_->ask(q);
    ++innerCalls_;
    validateAnswer(q, a);
    AnswerCache::Record r;
    r.kind = q.kind;
    r.a = q.xName;
    r.b = q.yName;
    r.expertId = expertId;
    r.accept = a.accept;
    if (q.kind == QueryKind::Orientation) {
        r.parent = a.parent == q.x ? q.xName : q.yName;
        r.child = a.child == q.x ? q.xName : q.yName;
    }
    r.provenance = a.provenance;
    cache_->store(std::move(r));
    return a;
}

std::shared_ptr<Expert> cachedExpert(std::shared_ptr<Expert> inner,
                                     std::shared_ptr<AnswerCache> cache) {
    return std::make_shared<CachedExpert>(std::move(inner), std::move(cache));
}

}  // namespace ema
