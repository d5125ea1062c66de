#pragma once

#include "ema/graph.hpp"
#include "ema/hash.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

inline std::shared_ptr<const ema::VariableSet> vars(const std::vector<std::string>& names) {
    return std::make_shared<const ema::VariableSet>(names);
}

// "a->b b--c c<->d", whitespace separated
inline ema::MixedGraph graph(const std::shared_ptr<const ema::VariableSet>& vs, const std::string& spec) {
    ema::MixedGraph g(vs);
    std::istringstream in(spec);
    std::string tok;
    while (in >> tok) {
        for (const char* m : {"<->", "->", "--"}) {
            const auto p = tok.find(m);
            if (p == std::string::npos) continue;
            g.addEdge(tok.substr(0, p), tok.substr(p + std::string(m).size()), ema::markFromToken(m));
            break;
        }
    }
    return g;
}

inline std::shared_ptr<const ema::VariableSet> letters(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < n; ++k) names.push_back(std::string(1, static_cast<char>('a' + k)));
    return vars(names);
}

// Each pair independently: no edge, ->, <-, --, <->
inline ema::MixedGraph randomModel(const std::shared_ptr<const ema::VariableSet>& vs, ema::hash::Stream& rng,
                                   double edgeProb = 0.5) {
    ema::MixedGraph g(vs);
    for (ema::VarId a = 0; a < vs->size(); ++a)
        for (ema::VarId b = a + 1; b < vs->size(); ++b) {
            if (rng.nextUnit() >= edgeProb) continue;
            switch (rng.below(4)) {
                case 0: g.addEdge(a, b, ema::EdgeMark::Directed); break;
                case 1: g.addEdge(b, a, ema::EdgeMark::Directed); break;
                case 2: g.addEdge(a, b, ema::EdgeMark::Undirected); break;
                default: g.addEdge(a, b, ema::EdgeMark::Bidirected); break;
            }
        }
    return g;
}

// Random DAG following the variable order
inline ema::MixedGraph randomTruth(const std::shared_ptr<const ema::VariableSet>& vs, ema::hash::Stream& rng,
                                   double edgeProb = 0.4) {
    ema::MixedGraph g(vs);
    std::vector<ema::VarId> order(vs->size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    for (std::size_t s = 0; s < order.size(); ++s)
        for (std::size_t t = s + 1; t < order.size(); ++t)
            if (rng.nextUnit() < edgeProb) g.addEdge(order[s], order[t], ema::EdgeMark::Directed);
    return g;
}

inline std::filesystem::path tempDir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ema_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline void writeFile(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

inline std::string readFile(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace testutil
