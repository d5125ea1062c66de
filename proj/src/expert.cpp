#include "ema/expert.hpp"

namespace ema {

std::string_view toString(QueryKind k) {
    return k == QueryKind::Existence ? "existence" : "orientation";
}

std::string_view toString(Provenance p) {
    switch (p) {
        case Provenance::Simulated: return "simulated";
        case Provenance::LLM: return "llm";
        case Provenance::Human: return "human";
        case Provenance::FallbackMajorityVote: return "fallback_majority_vote";
        case Provenance::Cache: return "cache";
        case Provenance::Scripted: return "scripted";
    }
    return "?";
}

QueryKind queryKindFromString(std::string_view s) {
    if (s == "existence") return QueryKind::Existence;
    if (s == "orientation") return QueryKind::Orientation;
    throw ArgumentError("unknown query kind '" + std::string(s) + "'");
}

Provenance provenanceFromString(std::string_view s) {
    for (auto p : {Provenance::Simulated, Provenance::LLM, Provenance::Human,
                   Provenance::FallbackMajorityVote, Provenance::Cache, Provenance::Scripted})
        if (toString(p) == s) return p;
    throw ArgumentError("unknown provenance '" + std::string(s) + "'");
}

ExpertQuery ExpertQuery::swapped() const {
    ExpertQuery q = *this;
    std::swap(q.x, q.y);
    std::swap(q.xName, q.yName);
    if (q.context) std::swap(q.context->orientedXY, q.context->orientedYX);
    return q;
}

ExpertAnswer ExpertAnswer::existence(bool accept, Provenance p) {
    ExpertAnswer a;
    a.kind = QueryKind::Existence;
    a.accept = accept;
    a.provenance = p;
    return a;
}

ExpertAnswer ExpertAnswer::orientation(VarId parent, VarId child, Provenance p) {
    ExpertAnswer a;
    a.kind = QueryKind::Orientation;
    a.parent = parent;
    a.child = child;
    a.provenance = p;
    return a;
}

bool ExpertAnswer::sameVerdict(const ExpertAnswer& o) const {
    if (kind != o.kind) return false;
    if (kind == QueryKind::Existence) return accept == o.accept;
    return parent == o.parent && child == o.child;
}

void validateAnswer(const ExpertQuery& q, const ExpertAnswer& a) {
    if (a.kind != q.kind)
        throw ArgumentError("expected an " + std::string(toString(q.kind)) + " answer for ('" +
                            q.xName + "', '" + q.yName + "')");
    if (q.kind == QueryKind::Orientation) {
        bool ok = (a.parent == q.x && a.child == q.y) || (a.parent == q.y && a.child == q.x);
        if (!ok)
            throw ArgumentError("orientation answer is not a permutation of ('" + q.xName +
                                "', '" + q.yName + "')");
    }
}

ExpertAnswer majorityFallback(const ExpertQuery& q, const CountContext& ctx) {
    if (q.kind == QueryKind::Existence)
        return ExpertAnswer::existence(2 * ctx.connection > static_cast<int>(ctx.models),
                                       Provenance::FallbackMajorityVote);
    bool xFirst;
    if (ctx.orientedXY != ctx.orientedYX)
        xFirst = ctx.orientedXY > ctx.orientedYX;
    else
        xFirst = q.xName < q.yName;
    return xFirst ? ExpertAnswer::orientation(q.x, q.y, Provenance::FallbackMajorityVote)
                  : ExpertAnswer::orientation(q.y, q.x, Provenance::FallbackMajorityVote);
}

}  // namespace ema
