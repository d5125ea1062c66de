#pragma once

#include "ema/graph.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ema {

enum class QueryKind { Existence, Orientation };

enum class Provenance { Simulated, LLM, Human, FallbackMajorityVote, Cache, Scripted };

std::string_view toString(QueryKind k);
std::string_view toString(Provenance p);
QueryKind queryKindFromString(std::string_view s);
Provenance provenanceFromString(std::string_view s);

/// Ensemble statistics for the queried pair at the time of the query.
struct CountContext {
    int connection = 0;     ///< c: models with any edge on {x,y}
    std::size_t models = 0; ///< n
    int orientedXY = 0;
    int orientedYX = 0;

    double share() const { return models ? static_cast<double>(connection) / models : 0.0; }
    bool operator==(const CountContext&) const = default;
};

struct ExpertQuery {
    QueryKind kind = QueryKind::Existence;
    VarId x = 0;
    VarId y = 0;
    std::string xName;
    std::string yName;
    std::optional<CountContext> context;

    /// Same question with the arguments swapped.
    ExpertQuery swapped() const;
};

struct ExpertAnswer {
    QueryKind kind = QueryKind::Existence;
    bool accept = false;  ///< existence answers
    VarId parent = 0;     ///< orientation answers
    VarId child = 0;
    Provenance provenance = Provenance::Simulated;

    static ExpertAnswer existence(bool accept, Provenance p);
    static ExpertAnswer orientation(VarId parent, VarId child, Provenance p);

    /// Equal verdicts, ignoring provenance.
    bool sameVerdict(const ExpertAnswer& o) const;

    bool operator==(const ExpertAnswer&) const = default;
};

class ExpertError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Network or endpoint failure after retries.
class TransportError : public ExpertError {
public:
    using ExpertError::ExpertError;
};

/// A model response with no usable verdict.
class VerdictParseError : public ExpertError {
public:
    using ExpertError::ExpertError;
};

class CacheError : public ExpertError {
public:
    using ExpertError::ExpertError;
};

class ExpertTimeout : public ExpertError {
public:
    using ExpertError::ExpertError;
};

/// Answers existence (acceptConnection) and orientation (determineOrientation)
/// questions about a variable pair.
class Expert {
public:
    virtual ~Expert() = default;

    virtual ExpertAnswer ask(const ExpertQuery& q) = 0;

    /// Stable identity used to key persisted answers.
    virtual std::string id() const = 0;
};

/// Throws ArgumentError unless `a` answers `q`'s kind and, for orientation,
/// names a permutation of the queried pair.
void validateAnswer(const ExpertQuery& q, const ExpertAnswer& a);

/// Majority vote among the ensemble: existence accepts iff c/n > 0.5;
/// orientation picks the direction with the larger oriented count, ties going
/// to the lexicographically smaller (parent name, child name).
ExpertAnswer majorityFallback(const ExpertQuery& q, const CountContext& ctx);

}  // namespace ema
