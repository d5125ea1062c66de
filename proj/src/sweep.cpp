#include "ema/sweep.hpp"

#include "ema/llm.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ema {

const char* const kResultsHeader =
    "network,n_models,theta1,theta2,correctness,seed,bsf,shd,f1,precision,recall,"
    "precision_valid,existence_calls,orientation_calls,wallclock_ms,error";

std::string_view toString(ExpertKind k) {
    switch (k) {
        case ExpertKind::Simulated: return "simulated";
        case ExpertKind::Llm: return "llm";
        case ExpertKind::Human: return "human";
        case ExpertKind::Scripted: return "scripted";
    }
    return "?";
}

ExpertKind expertKindFromString(std::string_view s) {
    for (auto k : {ExpertKind::Simulated, ExpertKind::Llm, ExpertKind::Human, ExpertKind::Scripted})
        if (toString(k) == s) return k;
    throw ArgumentError("unknown expert '" + std::string(s) + "'");
}

void RunConfig::validate() const {
    averaging.validate();
    auto unitGrid = [](const std::vector<double>& g, const char* key) {
        if (g.empty()) throw ConfigError(std::string(key) + ": grid is empty");
        for (double v : g)
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(key) + ": values must lie in [0, 1]");
    };
    unitGrid(theta1Grid, "theta1");
    unitGrid(theta2Grid, "theta2");
    unitGrid(correctnessGrid, "correctness");
    if (seeds.empty()) throw ConfigError("seeds: list is empty");
    if (jobs < 1) throw ConfigError("jobs: must be >= 1");
    if (perturbation) {
        perturbation->validate();
        if (!truthPath && !truthGenerator)
            throw ConfigError("perturb.*: perturbed ensembles need a truth");
    } else if (modelPaths.empty()) {
        throw ConfigError("models: no model inputs and no perturb.* generator");
    }
    if (expert.kind == ExpertKind::Simulated && !truthPath && !truthGenerator)
        throw ConfigError("expert: the simulated expert needs a truth");
    if (expert.kind == ExpertKind::Llm && (!expert.llmEndpoint || !expert.llmContext))
        throw ConfigError("expert: llm needs llm.endpoint and llm.context");
    if (expert.kind == ExpertKind::Scripted && !expert.transcript)
        throw ConfigError("expert: scripted needs transcript");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> splitList(const std::string& v) {
    std::vector<std::string> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

double toDouble(const std::string& s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

std::uint64_t toU64(const std::string& s) {
    std::size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument("not an unsigned integer");
    return v;
}

bool toBool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("expected true or false");
}

std::vector<std::uint64_t> toSeeds(const std::string& v) {
    std::vector<std::uint64_t> out;
    for (const auto& item : splitList(v)) {
        auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(toU64(item));
            continue;
        }
        auto lo = toU64(trim(item.substr(0, dots))), hi = toU64(trim(item.substr(dots + 2)));
        if (hi < lo) throw std::invalid_argument("empty seed range");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
    return out;
}

std::vector<double> toDoubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& item : splitList(v)) out.push_back(toDouble(item));
    return out;
}

}  // namespace

RunConfig parseRunConfig(const std::string& text, const std::string& label) {
    RunConfig cfg;
    const std::filesystem::path base = std::filesystem::path(label).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base.empty() ? path : base / path;
    };
    std::optional<io::PerturbationSpec> perturb;
    auto perturbSpec = [&]() -> io::PerturbationSpec& {
        if (!perturb) perturb.emplace();
        return *perturb;
    };
    auto generator = [&]() -> TruthGenerator& {
        if (!cfg.truthGenerator) cfg.truthGenerator.emplace();
        return *cfg.truthGenerator;
    };
    bool sawExpert = false;

    std::istringstream is(text);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        auto clean = trim(line.substr(0, line.find('#')));
        if (clean.empty()) continue;
        auto eq = clean.find('=');
        const std::string where = label + ":" + std::to_string(lineNo);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(clean.substr(0, eq));
        const std::string value = trim(clean.substr(eq + 1));
        try {
            if (key == "network") cfg.network = value;
            else if (key == "models") {
                for (const auto& p : splitList(value)) cfg.modelPaths.push_back(resolve(p));
            }
            else if (key == "variables") cfg.variablesPath = resolve(value);
            else if (key == "truth") cfg.truthPath = resolve(value);
            else if (key == "truth.nodes") generator().nodes = toU64(value);
            else if (key == "truth.edges") generator().edges = toU64(value);
            else if (key == "truth.seed") generator().seed = toU64(value);
            else if (key == "perturb.delete") perturbSpec().deleteRate = toDouble(value);
            else if (key == "perturb.reverse") perturbSpec().reverseRate = toDouble(value);
            else if (key == "perturb.insert") perturbSpec().insertRate = toDouble(value);
            else if (key == "perturb.models") perturbSpec().modelCount = toU64(value);
            else if (key == "theta1") cfg.theta1Grid = toDoubles(value);
            else if (key == "theta2") cfg.theta2Grid = toDoubles(value);
            else if (key == "correctness") cfg.correctnessGrid = toDoubles(value);
            else if (key == "seeds") cfg.seeds = toSeeds(value);
            else if (key == "tie_break") {
                if (value == "lexicographic") cfg.averaging.tieBreak = TieBreak::LexicographicPair;
                else if (value == "shuffle") cfg.averaging.tieBreak = TieBreak::SeededShuffle;
                else throw std::invalid_argument("expected lexicographic or shuffle");
            }
            else if (key == "expert") {
                if (sawExpert) throw std::invalid_argument("expert given more than once");
                sawExpert = true;
                cfg.expert.kind = expertKindFromString(value);
            }
            else if (key == "llm.endpoint") cfg.expert.llmEndpoint = resolve(value);
            else if (key == "llm.context") cfg.expert.llmContext = resolve(value);
            else if (key == "cache") cfg.expert.cachePath = resolve(value);
            else if (key == "no_cache") cfg.expert.noCache = toBool(value);
            else if (key == "transcript") cfg.expert.transcript = resolve(value);
            else if (key == "human.address") cfg.expert.humanAddress = value;
            else if (key == "human.timeout") cfg.expert.humanTimeoutSeconds = toDouble(value);
            else if (key == "output") cfg.outputDir = resolve(value);
            else if (key == "jobs") cfg.jobs = static_cast<int>(toU64(value));
            else if (key == "timing") cfg.timing = toBool(value);
            else throw ConfigError(where + ": unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(where + ": key '" + key + "': " + e.what());
        }
    }
    cfg.perturbation = perturb;
    if (!cfg.correctnessGrid.empty()) cfg.expert.correctness = cfg.correctnessGrid.front();
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(label + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(label + ": " + e.what());
    }
    return cfg;
}

RunConfig loadRunConfig(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config");
    std::ostringstream os;
    os << in.rdbuf();
    return parseRunConfig(os.str(), path.string());
}

// ---------------------------------------------------------------------------
// Cells

SweepInputs loadSweepInputs(const RunConfig& cfg) {
    SweepInputs in;
    std::shared_ptr<const VariableSet> vars;
    if (cfg.variablesPath) vars = io::loadVariables(*cfg.variablesPath);
    if (cfg.truthPath) {
        in.truth = io::parseGraphFile(*cfg.truthPath, vars);
        if (!vars) vars = in.truth->variablesPtr();
    } else if (cfg.truthGenerator) {
        in.truth = io::randomDag(cfg.truthGenerator->nodes, cfg.truthGenerator->edges,
                                 cfg.truthGenerator->seed);
    }
    if (!cfg.perturbation && !cfg.modelPaths.empty()) {
        in.fixedModels = io::loadModels(cfg.modelPaths, vars);
        checkModelSet(in.fixedModels);
        if (in.truth && !in.truth->variables().sameNames(in.fixedModels.front().variables()))
            throw ArgumentError("truth and models are defined over different variables");
    }
    return in;
}

std::shared_ptr<Expert> makeExpert(const RunConfig& cfg, const SweepInputs& in,
                                   const EnsembleCounts& counts, double correctness,
                                   std::uint64_t seed, std::shared_ptr<AnswerCache> cache) {
    switch (cfg.expert.kind) {
        case ExpertKind::Simulated: {
            if (!in.truth) throw ArgumentError("the simulated expert needs a truth");
            auto truth = std::make_shared<const GroundTruth>(*in.truth);
            return std::make_shared<SimulatedExpert>(truth, correctness, seed);
        }
        case ExpertKind::Scripted:
            return std::make_shared<ScriptedExpert>(io::loadTranscript(*cfg.expert.transcript));
        case ExpertKind::Llm: {
            std::ifstream ein(*cfg.expert.llmEndpoint);
            if (!ein) throw ArgumentError("cannot open " + cfg.expert.llmEndpoint->string());
            auto endpoint = llm::EndpointConfig::fromJson(nlohmann::json::parse(ein));
            auto ctx = llm::PromptContext::load(*cfg.expert.llmContext);
            ctx.addVariables(counts.variables());
            std::shared_ptr<Expert> e = std::make_shared<llm::LlmExpert>(endpoint, ctx);
            e = consistencyWrap(e, counts);
            if (!cfg.expert.noCache) {
                if (!cache)
                    cache = cfg.expert.cachePath ? std::make_shared<AnswerCache>(*cfg.expert.cachePath)
                                                 : std::make_shared<AnswerCache>();
                e = cachedExpert(e, cache);
            }
            return e;
        }
        case ExpertKind::Human:
            throw ArgumentError("the human expert runs through the session service, not in batch");
    }
    throw ArgumentError("unknown expert kind");
}

SweepRow runCell(const RunConfig& cfg, const SweepInputs& in, const SweepCell& cell,
                 std::shared_ptr<AnswerCache> cache) {
    SweepRow row;
    row.network = cfg.network;
    row.cell = cell;
    const auto start = std::chrono::steady_clock::now();
    try {
        std::vector<MixedGraph> generated;
        if (cfg.perturbation) {
            auto spec = *cfg.perturbation;
            spec.seed = cell.seed;
            generated = io::perturb(*in.truth, spec);
        }
        const auto& models = cfg.perturbation ? generated : in.fixedModels;
        row.nModels = models.size();
        const auto counts = connectionCounts(models);
        auto expert = makeExpert(cfg, in, counts, cell.correctness, cell.seed, cache);
        AveragingConfig avg = cfg.averaging;
        avg.theta1 = cell.theta1;
        avg.theta2 = cell.theta2;
        avg.seed = cell.seed;
        auto result = expertModelAverage(counts, avg, *expert);
        row.calls = countExpertCalls(result.trace);
        if (in.truth) {
            row.metrics = score(*in.truth, result.dag.toMixed());
            row.metrics->expertCalls = row.calls;
        }
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    if (cfg.timing)
        row.wallclockMs = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    return row;
}

// ---------------------------------------------------------------------------
// Results files

namespace {

std::string sanitize(std::string s) {
    for (auto& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string num(double v) { return io::formatNumber(v); }

std::string cellKey(const std::string& network, const std::string& t1, const std::string& t2,
                    const std::string& p, const std::string& seed) {
    return network + "|" + t1 + "|" + t2 + "|" + p + "|" + seed;
}

std::string cellKey(const std::string& network, const SweepCell& c, bool withCorrectness) {
    return cellKey(network, num(c.theta1), num(c.theta2), withCorrectness ? num(c.correctness) : "",
                   std::to_string(c.seed));
}

// an interrupted run can leave a partial last line; cut back to the last newline
void dropTornRow(const std::filesystem::path& csv) {
    if (!std::filesystem::exists(csv)) return;
    std::string text;
    {
        std::ifstream in(csv, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        text = os.str();
    }
    if (text.empty() || text.back() == '\n') return;
    const auto keep = text.rfind('\n');
    std::filesystem::resize_file(csv, keep == std::string::npos ? 0 : keep + 1);
}

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::string formatRow(const SweepRow& row, bool includeCorrectness) {
    std::ostringstream os;
    os << sanitize(row.network) << ',' << row.nModels << ',' << num(row.cell.theta1) << ','
       << num(row.cell.theta2) << ',' << (includeCorrectness ? num(row.cell.correctness) : "")
       << ',' << row.cell.seed << ',';
    if (row.metrics) {
        const auto& m = *row.metrics;
        os << num(m.bsf.toDouble()) << ',' << num(m.shd.toDouble()) << ','
           << (m.f1 ? num(m.f1->toDouble()) : "") << ','
           << (m.precision ? num(m.precision->toDouble()) : "invalid") << ','
           << num(m.recall.toDouble()) << ',' << (m.precision ? 1 : 0) << ',';
    } else {
        os << ",,,,,,";
    }
    os << row.calls.existence << ',' << row.calls.orientation << ',' << row.wallclockMs << ','
       << sanitize(row.error);
    return os.str();
}

std::vector<SweepRow> readResults(const std::filesystem::path& csv) {
    std::vector<SweepRow> rows;
    std::ifstream in(csv);
    if (!in) return rows;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (lineNo == 1) {
            if (line != kResultsHeader)
                throw io::ParseError(csv.string(), 1, "unexpected results header");
            continue;
        }
        if (line.empty()) continue;
        auto f = splitCsv(line);
        if (f.size() != 16) throw io::ParseError(csv.string(), lineNo, "expected 16 columns");
        try {
            SweepRow r;
            r.network = f[0];
            r.nModels = std::stoull(f[1]);
            r.cell.theta1 = std::stod(f[2]);
            r.cell.theta2 = std::stod(f[3]);
            r.cell.correctness = f[4].empty() ? 0.0 : std::stod(f[4]);
            r.cell.seed = std::stoull(f[5]);
            if (!f[6].empty()) {
                // rebuilt at double precision; exact values live in the run itself
                MetricsReport m;
                auto approx = [](const std::string& s) {
                    return Rational(static_cast<std::int64_t>(std::llround(std::stod(s) * 1e9)), 1000000000);
                };
                m.bsf = approx(f[6]);
                m.shd = approx(f[7]);
                if (!f[8].empty()) m.f1 = approx(f[8]);
                if (f[11] == "1") m.precision = approx(f[9]);
                m.recall = approx(f[10]);
                r.metrics = m;
            }
            r.calls.existence = std::stoull(f[12]);
            r.calls.orientation = std::stoull(f[13]);
            r.wallclockMs = std::stoll(f[14]);
            r.error = f[15];
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw io::ParseError(csv.string(), lineNo, e.what());
        }
    }
    return rows;
}

std::vector<GridSummary> summarizeRows(const std::vector<SweepRow>& rows,
                                       const std::vector<SweepCell>& gridOrder) {
    std::vector<GridSummary> out;
    std::set<std::tuple<double, double, double>> seen;
    for (const auto& g : gridOrder) {
        auto key = std::make_tuple(g.theta1, g.theta2, g.correctness);
        if (!seen.insert(key).second) continue;
        GridSummary s;
        s.theta1 = g.theta1;
        s.theta2 = g.theta2;
        s.correctness = g.correctness;
        std::vector<MetricsReport> reports;
        std::vector<double> ex, orient;
        for (const auto& r : rows) {
            if (r.cell.theta1 != g.theta1 || r.cell.theta2 != g.theta2 ||
                r.cell.correctness != g.correctness)
                continue;
            ++s.runs;
            if (!r.error.empty()) {
                ++s.failures;
                continue;
            }
            if (r.metrics) reports.push_back(*r.metrics);
            ex.push_back(static_cast<double>(r.calls.existence));
            orient.push_back(static_cast<double>(r.calls.orientation));
        }
        s.metrics = aggregate(reports);
        s.existenceCalls = summarize(ex);
        s.orientationCalls = summarize(orient);
        out.push_back(s);
    }
    return out;
}

std::optional<GridSummary> bestCell(const std::vector<GridSummary>& grid) {
    std::optional<GridSummary> best;
    for (const auto& g : grid) {
        if (g.metrics.bsf.count == 0) continue;
        if (!best || g.metrics.bsf.mean > best->metrics.bsf.mean ||
            (g.metrics.bsf.mean == best->metrics.bsf.mean && g.metrics.f1.mean > best->metrics.f1.mean))
            best = g;
    }
    return best;
}

nlohmann::json summaryToJson(const std::vector<GridSummary>& grid,
                             const std::optional<GridSummary>& best) {
    auto stat = [](const MetricSummary& m) {
        return nlohmann::json{{"mean", m.mean}, {"std", m.std}, {"n", m.count}};
    };
    auto cell = [&](const GridSummary& g) {
        return nlohmann::json{{"theta1", g.theta1},
                              {"theta2", g.theta2},
                              {"correctness", g.correctness},
                              {"runs", g.runs},
                              {"failures", g.failures},
                              {"bsf", stat(g.metrics.bsf)},
                              {"shd", stat(g.metrics.shd)},
                              {"f1", stat(g.metrics.f1)},
                              {"precision", stat(g.metrics.precision)},
                              {"recall", stat(g.metrics.recall)},
                              {"invalid_precision", g.metrics.invalidPrecision},
                              {"existence_calls", stat(g.existenceCalls)},
                              {"orientation_calls", stat(g.orientationCalls)}};
    };
    nlohmann::json j;
    j["cells"] = nlohmann::json::array();
    for (const auto& g : grid) j["cells"].push_back(cell(g));
    j["best"] = best ? cell(*best) : nlohmann::json(nullptr);
    return j;
}

SweepResult runSweep(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.expert.kind == ExpertKind::Human)
        throw ConfigError("expert: human experts are served by the session service, not sweeps");
    const bool withCorrectness = cfg.expert.kind == ExpertKind::Simulated;
    const auto in = loadSweepInputs(cfg);

    std::vector<SweepCell> grid;
    const std::vector<double> correctness =
        withCorrectness ? cfg.correctnessGrid : std::vector<double>{0.0};
    for (double t1 : cfg.theta1Grid)
        for (double t2 : cfg.theta2Grid)
            for (double p : correctness)
                for (auto s : cfg.seeds) grid.push_back({t1, t2, p, s});

    std::filesystem::create_directories(cfg.outputDir);
    SweepResult result;
    result.resultsCsv = cfg.outputDir / "results.csv";
    result.summaryJson = cfg.outputDir / "summary.json";

    dropTornRow(result.resultsCsv);
    auto rows = readResults(result.resultsCsv);
    std::set<std::string> done;
    for (const auto& r : rows)
        done.insert(cellKey(r.network, r.cell, withCorrectness));

    std::vector<SweepCell> pending;
    for (const auto& c : grid)
        if (!done.count(cellKey(cfg.network, c, withCorrectness))) pending.push_back(c);
    result.cellsSkipped = grid.size() - pending.size();

    std::shared_ptr<AnswerCache> cache;
    if (cfg.expert.kind == ExpertKind::Llm && !cfg.expert.noCache)
        cache = cfg.expert.cachePath ? std::make_shared<AnswerCache>(*cfg.expert.cachePath)
                                     : std::make_shared<AnswerCache>(cfg.outputDir / "llm_cache.jsonl");

    const bool fresh =
        !std::filesystem::exists(result.resultsCsv) || std::filesystem::file_size(result.resultsCsv) == 0;
    std::ofstream out(result.resultsCsv, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + result.resultsCsv.string());
    if (fresh) out << kResultsHeader << '\n';

    // cells run in parallel in chunks; each chunk is appended in grid order
    const std::size_t chunk = static_cast<std::size_t>(cfg.jobs) * 4;
    for (std::size_t begin = 0; begin < pending.size(); begin += chunk) {
        const std::size_t end = std::min(pending.size(), begin + chunk);
        std::vector<SweepRow> batch(end - begin);
        const auto count = static_cast<std::ptrdiff_t>(end - begin);
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
        for (std::ptrdiff_t k = 0; k < count; ++k)
            batch[k] = runCell(cfg, in, pending[begin + k], cache);
        for (auto& r : batch) out << formatRow(r, withCorrectness) << '\n';
        out.flush();
        result.cellsRun += end - begin;
    }

    out.close();

    // summarize from the file so resumed and uninterrupted runs agree
    std::vector<SweepRow> mine;
    for (auto& r : readResults(result.resultsCsv))
        if (r.network == cfg.network) mine.push_back(r);
    result.grid = summarizeRows(mine, grid);
    result.best = bestCell(result.grid);
    std::ofstream js(result.summaryJson);
    js << summaryToJson(result.grid, result.best).dump(2) << '\n';
    return result;
}

}  // namespace ema
