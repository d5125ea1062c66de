#include "ema/io.hpp"

#include "ema/hash.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ema::io {

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& msg)
    : std::runtime_error(line ? file + ":" + std::to_string(line) + ": " + msg : file + ": " + msg),
      line_(line) {}

namespace {

std::string readFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> splitCommas(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool isJsonPath(const std::filesystem::path& p) { return p.extension() == ".json"; }

std::shared_ptr<VariableSet> variablesFromJson(const nlohmann::json& doc, const std::string& label) {
    auto vars = std::make_shared<VariableSet>();
    if (!doc.contains("variables") || !doc["variables"].is_array())
        throw ParseError(label, 0, "missing \"variables\" array");
    for (const auto& v : doc["variables"]) {
        try {
            if (v.is_string()) {
                vars->add(v.get<std::string>());
                continue;
            }
            std::optional<std::vector<std::string>> values;
            std::optional<std::string> description;
            if (v.contains("values")) values = v["values"].get<std::vector<std::string>>();
            if (v.contains("description")) description = v["description"].get<std::string>();
            vars->add(v.at("name").get<std::string>(), std::move(values), std::move(description));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(label, 0, std::string("bad variable entry: ") + e.what());
        } catch (const ArgumentError& e) {
            throw ParseError(label, 0, e.what());
        }
    }
    return vars;
}

}  // namespace

std::shared_ptr<const VariableSet> loadVariables(const std::filesystem::path& path) {
    const std::string text = readFile(path);
    if (isJsonPath(path)) {
        try {
            return variablesFromJson(nlohmann::json::parse(text), path.string());
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), 0, e.what());
        }
    }
    auto vars = std::make_shared<VariableSet>();
    std::istringstream is(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        auto name = trim(line);
        if (name.empty() || name[0] == '#') continue;
        try {
            vars->add(name);
        } catch (const ArgumentError& e) {
            throw ParseError(path.string(), lineNo, e.what());
        }
    }
    return vars;
}

MixedGraph parseGraphCsv(std::string_view text, std::shared_ptr<const VariableSet> vars,
                         const std::string& fileLabel) {
    if (!vars) throw ParseError(fileLabel, 0, "CSV edge lists need a variables file");
    MixedGraph g(vars);
    std::istringstream is{std::string(text)};
    std::string line;
    std::size_t lineNo = 0;
    bool sawHeader = false;
    while (std::getline(is, line)) {
        ++lineNo;
        const auto clean = trim(line);
        if (clean.empty() || clean[0] == '#') continue;
        auto fields = splitCommas(clean);
        if (!sawHeader) {
            if (fields != std::vector<std::string>{"source", "target", "mark"})
                throw ParseError(fileLabel, lineNo, "expected header \"source,target,mark\"");
            sawHeader = true;
            continue;
        }
        if (fields.size() != 3)
            throw ParseError(fileLabel, lineNo, "expected 3 fields, found " + std::to_string(fields.size()));
        auto src = vars->find(fields[0]);
        auto dst = vars->find(fields[1]);
        if (!src) throw ParseError(fileLabel, lineNo, "unknown variable '" + fields[0] + "'");
        if (!dst) throw ParseError(fileLabel, lineNo, "unknown variable '" + fields[1] + "'");
        if (*src == *dst) throw ParseError(fileLabel, lineNo, "self-loop on '" + fields[0] + "'");
        EdgeMark mark;
        try {
            mark = markFromToken(fields[2]);
        } catch (const ArgumentError& e) {
            throw ParseError(fileLabel, lineNo, e.what());
        }
        if (g.edgeBetween(*src, *dst))
            throw ParseError(fileLabel, lineNo,
                             "duplicate pair ('" + fields[0] + "', '" + fields[1] + "')");
        g.addEdge(*src, *dst, mark);
    }
    if (!sawHeader) throw ParseError(fileLabel, 0, "missing header \"source,target,mark\"");
    return g;
}

MixedGraph parseGraphJson(const nlohmann::json& doc, const std::string& fileLabel) {
    auto vars = variablesFromJson(doc, fileLabel);
    MixedGraph g(vars);
    const auto edges = doc.value("edges", nlohmann::json::array());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const std::string where = "edge " + std::to_string(k);
        if (!e.is_array() || e.size() != 3)
            throw ParseError(fileLabel, 0, where + ": expected [source, target, mark]");
        const auto s = e[0].get<std::string>(), t = e[1].get<std::string>();
        auto src = vars->find(s), dst = vars->find(t);
        if (!src) throw ParseError(fileLabel, 0, where + ": unknown variable '" + s + "'");
        if (!dst) throw ParseError(fileLabel, 0, where + ": unknown variable '" + t + "'");
        if (*src == *dst) throw ParseError(fileLabel, 0, where + ": self-loop on '" + s + "'");
        if (g.edgeBetween(*src, *dst))
            throw ParseError(fileLabel, 0, where + ": duplicate pair ('" + s + "', '" + t + "')");
        try {
            g.addEdge(*src, *dst, markFromToken(e[2].get<std::string>()));
        } catch (const ArgumentError& err) {
            throw ParseError(fileLabel, 0, where + ": " + err.what());
        }
    }
    return g;
}

MixedGraph parseGraphFile(const std::filesystem::path& path, std::shared_ptr<const VariableSet> vars) {
    const std::string text = readFile(path);
    if (isJsonPath(path)) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), 0, e.what());
        }
        auto g = parseGraphJson(doc, path.string());
        if (vars && !g.variables().sameNames(*vars))
            throw ParseError(path.string(), 0, "variables differ from the shared variable set");
        return g;
    }
    return parseGraphCsv(text, std::move(vars), path.string());
}

std::string serializeGraphCsv(const MixedGraph& g) {
    std::string out = "source,target,mark\n";
    for (const auto& e : g.edges()) {
        out += g.variables().name(e.source);
        out += ',';
        out += g.variables().name(e.target);
        out += ',';
        out += markToken(e.mark);
        out += '\n';
    }
    return out;
}

nlohmann::json graphToJson(const MixedGraph& g) {
    nlohmann::json doc;
    doc["variables"] = nlohmann::json::array();
    for (const auto& v : g.variables().variables()) {
        nlohmann::json jv;
        jv["name"] = v.name;
        if (v.values) jv["values"] = *v.values;
        if (v.description) jv["description"] = *v.description;
        doc["variables"].push_back(std::move(jv));
    }
    doc["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges())
        doc["edges"].push_back({g.variables().name(e.source), g.variables().name(e.target),
                                std::string(markToken(e.mark))});
    return doc;
}

std::string serializeGraphJson(const MixedGraph& g) { return graphToJson(g).dump(2) + "\n"; }

void writeGraphFile(const std::filesystem::path& path, const MixedGraph& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << (isJsonPath(path) ? serializeGraphJson(g) : serializeGraphCsv(g));
}

std::vector<MixedGraph> loadModels(const std::vector<std::filesystem::path>& paths,
                                   std::shared_ptr<const VariableSet> vars) {
    std::vector<std::filesystem::path> files;
    for (const auto& p : paths) {
        if (std::filesystem::is_directory(p)) {
            std::vector<std::filesystem::path> inDir;
            for (const auto& entry : std::filesystem::directory_iterator(p)) {
                const auto ext = entry.path().extension();
                if (entry.is_regular_file() && (ext == ".csv" || ext == ".json"))
                    inDir.push_back(entry.path());
            }
            std::sort(inDir.begin(), inDir.end());
            files.insert(files.end(), inDir.begin(), inDir.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw ArgumentError("no model files given");
    std::vector<MixedGraph> models;
    for (const auto& f : files) {
        models.push_back(parseGraphFile(f, vars));
        if (!vars) vars = models.back().variablesPtr();
    }
    return models;
}

nlohmann::json traceToJson(const AveragingTrace& trace, const VariableSet& vars) {
    nlohmann::json out;
    out["decisions"] = nlohmann::json::array();
    for (const auto& d : trace.decisions) {
        nlohmann::json j;
        j["x"] = vars.name(d.x);
        j["y"] = vars.name(d.y);
        j["c"] = d.counts.connection;
        j["n"] = d.counts.models;
        j["orientedXY"] = d.counts.orientedXY;
        j["orientedYX"] = d.counts.orientedYX;
        j["skippedByTheta1"] = d.skippedByTheta1;
        j["majority"] = d.majority;
        if (d.existence)
            j["existence"] = {{"accept", d.existence->accept},
                              {"provenance", toString(d.existence->provenance)}};
        else
            j["existence"] = nullptr;
        j["admitted"] = d.admitted;
        j["xyValid"] = d.xyValid;
        j["yxValid"] = d.yxValid;
        j["rule"] = toString(d.rule);
        if (d.orientation)
            j["orientation"] = {{"parent", vars.name(d.orientation->parent)},
                                {"child", vars.name(d.orientation->child)},
                                {"provenance", toString(d.orientation->provenance)}};
        else
            j["orientation"] = nullptr;
        if (d.edgeAdded)
            j["edgeAdded"] = {vars.name(d.edgeAdded->first), vars.name(d.edgeAdded->second)};
        else
            j["edgeAdded"] = nullptr;
        out["decisions"].push_back(std::move(j));
    }
    return out;
}

Transcript transcriptFromTraceJson(const nlohmann::json& trace) {
    Transcript t;
    for (const auto& d : trace.at("decisions")) {
        const auto x = d.at("x").get<std::string>(), y = d.at("y").get<std::string>();
        if (!d.at("existence").is_null()) {
            TranscriptEntry e;
            e.kind = QueryKind::Existence;
            e.x = x;
            e.y = y;
            e.accept = d["existence"].at("accept").get<bool>();
            t.push_back(std::move(e));
        }
        if (!d.at("orientation").is_null()) {
            TranscriptEntry e;
            e.kind = QueryKind::Orientation;
            e.x = x;
            e.y = y;
            e.parent = d["orientation"].at("parent").get<std::string>();
            e.child = d["orientation"].at("child").get<std::string>();
            t.push_back(std::move(e));
        }
    }
    return t;
}

nlohmann::json metricsToJson(const MetricsReport& m) {
    auto exact = [](Rational r) { return nlohmann::json{{"value", r.toDouble()}, {"exact", r.str()}}; };
    nlohmann::json j;
    j["bsf"] = exact(m.bsf);
    j["shd"] = exact(m.shd);
    j["f1"] = m.f1 ? exact(*m.f1) : nlohmann::json(nullptr);
    j["precision"] = m.precision ? exact(*m.precision) : nlohmann::json("invalid");
    j["recall"] = exact(m.recall);
    j["confusion"] = {{"tp", m.confusion.tp.str()}, {"fp", m.confusion.fp.str()},
                      {"fn", m.confusion.fn.str()}, {"tn", m.confusion.tn.str()},
                      {"a", m.confusion.a},         {"i", m.confusion.i}};
    if (m.expertCalls)
        j["expertCalls"] = {{"existence", m.expertCalls->existence},
                            {"orientation", m.expertCalls->orientation},
                            {"total", m.expertCalls->total()}};
    return j;
}

Transcript loadTranscript(const std::filesystem::path& path) {
    const std::string text = readFile(path);
    if (auto first = text.find_first_not_of(" \t\r\n"); first != std::string::npos && text[first] == '{') {
        // a whole trace document rather than JSON lines
        try {
            auto doc = nlohmann::json::parse(text);
            if (doc.contains("decisions")) return transcriptFromTraceJson(doc);
        } catch (const nlohmann::json::parse_error&) {
            // fall through: JSON lines
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), 0, e.what());
        }
    }
    std::istringstream is(text);
    Transcript t;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TranscriptEntry e;
            e.kind = queryKindFromString(j.at("kind").get<std::string>());
            e.x = j.at("pair").at(0).get<std::string>();
            e.y = j.at("pair").at(1).get<std::string>();
            if (e.kind == QueryKind::Existence) {
                e.accept = j.at("accept").get<bool>();
            } else {
                e.parent = j.at("orientation").at(0).get<std::string>();
                e.child = j.at("orientation").at(1).get<std::string>();
            }
            t.push_back(std::move(e));
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineNo, e.what());
        }
    }
    return t;
}

void writeTranscript(const std::filesystem::path& path, const Transcript& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& e : t) {
        nlohmann::json j;
        j["kind"] = toString(e.kind);
        j["pair"] = {e.x, e.y};
        if (e.kind == QueryKind::Existence)
            j["accept"] = e.accept;
        else
            j["orientation"] = {e.parent, e.child};
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic ensembles

void PerturbationSpec::validate() const {
    auto inUnit = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!inUnit(deleteRate) || !inUnit(reverseRate) || !inUnit(insertRate))
        throw ArgumentError("perturbation rates must lie in [0, 1]");
    if (modelCount < 1) throw ArgumentError("perturbation needs at least one model");
}

std::vector<MixedGraph> perturb(const MixedGraph& truth, const PerturbationSpec& spec,
                                std::vector<std::string>* warnings) {
    spec.validate();
    const auto edges = truth.edges();
    if (std::none_of(edges.begin(), edges.end(),
                     [](const Edge& e) { return e.mark == EdgeMark::Directed; }))
        throw ArgumentError("perturbation needs a truth with at least one directed edge");

    enum Stream : std::uint64_t { Delete = 1, Reverse = 2, Insert = 3, InsertDir = 4 };
    std::vector<MixedGraph> models;
    models.reserve(spec.modelCount);
    bool allEmpty = true;
    for (std::size_t k = 0; k < spec.modelCount; ++k) {
        const auto modelSeed = hash::combine({spec.seed, k});
        auto draw = [&](Stream s, VarId a, VarId b) {
            return hash::unit(hash::combine({modelSeed, s, a, b}));
        };
        MixedGraph m(truth.variablesPtr());
        for (const auto& e : edges) {
            const VarId lo = std::min(e.source, e.target), hi = std::max(e.source, e.target);
            if (draw(Delete, lo, hi) < spec.deleteRate) continue;
            if (e.mark == EdgeMark::Directed && draw(Reverse, lo, hi) < spec.reverseRate)
                m.addEdge(e.target, e.source, e.mark);
            else
                m.addEdge(e.source, e.target, e.mark);
        }
        for (VarId a = 0; a < truth.size(); ++a) {
            for (VarId b = a + 1; b < truth.size(); ++b) {
                if (truth.edgeBetween(a, b)) continue;
                if (draw(Insert, a, b) < spec.insertRate) {
                    if (draw(InsertDir, a, b) < 0.5)
                        m.addEdge(a, b, EdgeMark::Directed);
                    else
                        m.addEdge(b, a, EdgeMark::Directed);
                }
            }
        }
        if (m.edgeCount() > 0) allEmpty = false;
        models.push_back(std::move(m));
    }
    if (allEmpty && warnings)
        warnings->push_back("perturbation produced only empty models");
    return models;
}

MixedGraph randomDag(std::size_t nodes, std::size_t edges, std::uint64_t seed) {
    const std::size_t maxEdges = nodes * (nodes - 1) / 2;
    if (nodes < 2 || edges > maxEdges)
        throw ArgumentError("cannot place " + std::to_string(edges) + " edges on " +
                            std::to_string(nodes) + " nodes");
    const int width = nodes > 100 ? 3 : 2;
    std::vector<std::string> names;
    for (std::size_t k = 0; k < nodes; ++k) {
        std::string digits = std::to_string(k);
        names.push_back("v" + std::string(width - std::min<std::size_t>(width, digits.size()), '0') + digits);
    }
    auto vars = std::make_shared<VariableSet>(names);

    hash::Stream rng(hash::combine({seed, 0x7a11}));
    std::vector<VarId> order(nodes);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = nodes - 1; k > 0; --k) std::swap(order[k], order[rng.below(k + 1)]);

    // choose `edges` distinct forward pairs (positions i < j in order)
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    slots.reserve(maxEdges);
    for (std::size_t i = 0; i < nodes; ++i)
        for (std::size_t j = i + 1; j < nodes; ++j) slots.emplace_back(i, j);
    for (std::size_t k = 0; k < edges; ++k) std::swap(slots[k], slots[k + rng.below(slots.size() - k)]);

    MixedGraph g(vars);
    for (std::size_t k = 0; k < edges; ++k)
        g.addEdge(order[slots[k].first], order[slots[k].second], EdgeMark::Directed);
    return g;
}

std::string formatNumber(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace ema::io
