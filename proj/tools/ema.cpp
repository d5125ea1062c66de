// Command-line front end: ensemble, score, sweep, serve, baseline-bayesys.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include "ema/averaging.hpp"
#include "ema/experts.hpp"
#include "ema/io.hpp"
#include "ema/llm.hpp"
#include "ema/metrics.hpp"
#include "ema/session.hpp"
#include "ema/sweep.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::shared_ptr<const ema::VariableSet> maybeVariables(const std::string& path) {
    if (path.empty()) return nullptr;
    return ema::io::loadVariables(path);
}

std::vector<std::filesystem::path> toPaths(const std::vector<std::string>& v) {
    return {v.begin(), v.end()};
}

// ---------------------------------------------------------------------------
// ensemble

struct EnsembleOpts {
    std::vector<std::string> models;
    std::string variables;
    double theta1 = 0.0;
    double theta2 = 0.7;
    std::string expert = "simulated";
    std::string truth;
    double correctness = 0.8;
    std::uint64_t seed = 0;
    std::string tieBreak = "lexicographic";
    std::string out;
    std::string trace;
    std::string transcript;
    std::string llmEndpoint;
    std::string llmContext;
    std::string cache;
    bool noCache = false;
};

int runEnsemble(const EnsembleOpts& o) {
    if (o.expert == "simulated" && o.truth.empty())
        throw UsageError("--expert simulated requires --truth");
    if (o.expert == "scripted" && o.transcript.empty())
        throw UsageError("--expert scripted requires --transcript");
    if (o.expert == "llm" && (o.llmEndpoint.empty() || o.llmContext.empty()))
        throw UsageError("--expert llm requires --llm-endpoint and --llm-context");
    if (o.expert == "human")
        throw UsageError("human experts answer through `ema serve`; use scripted to replay their answers");

    auto vars = maybeVariables(o.variables);
    auto models = ema::io::loadModels(toPaths(o.models), vars);
    ema::checkModelSet(models);
    const auto counts = ema::connectionCounts(models);

    ema::RunConfig rc;
    rc.expert.kind = ema::expertKindFromString(o.expert);
    rc.expert.transcript = o.transcript.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.transcript);
    if (!o.llmEndpoint.empty()) rc.expert.llmEndpoint = o.llmEndpoint;
    if (!o.llmContext.empty()) rc.expert.llmContext = o.llmContext;
    if (!o.cache.empty()) rc.expert.cachePath = o.cache;
    rc.expert.noCache = o.noCache;

    ema::SweepInputs in;
    if (!o.truth.empty()) in.truth = ema::io::parseGraphFile(o.truth, vars ? vars : models.front().variablesPtr());
    std::shared_ptr<ema::AnswerCache> cache;
    if (rc.expert.kind == ema::ExpertKind::Llm && !o.noCache)
        cache = o.cache.empty() ? std::make_shared<ema::AnswerCache>() : std::make_shared<ema::AnswerCache>(o.cache);
    auto expert = ema::makeExpert(rc, in, counts, o.correctness, o.seed, cache);

    ema::AveragingConfig cfg;
    cfg.theta1 = o.theta1;
    cfg.theta2 = o.theta2;
    cfg.seed = o.seed;
    cfg.tieBreak = o.tieBreak == "shuffle" ? ema::TieBreak::SeededShuffle : ema::TieBreak::LexicographicPair;
    auto result = ema::expertModelAverage(counts, cfg, *expert);

    const auto consensus = result.dag.toMixed();
    if (o.out.empty())
        std::cout << ema::io::serializeGraphCsv(consensus);
    else
        ema::io::writeGraphFile(o.out, consensus);
    if (!o.trace.empty()) {
        std::ofstream t(o.trace);
        if (!t) throw std::runtime_error("cannot write " + o.trace);
        t << ema::io::traceToJson(result.trace, counts.variables()).dump(2) << '\n';
    }
    const auto calls = ema::countExpertCalls(result.trace);
    std::cerr << "edges: " << result.dag.edgeCount() << ", existence calls: " << calls.existence
              << ", orientation calls: " << calls.orientation << '\n';
    if (in.truth) {
        const auto m = ema::score(*in.truth, consensus);
        std::cerr << "bsf: " << m.bsf.toDouble() << ", shd: " << m.shd.toDouble() << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOpts {
    std::string truth;
    std::vector<std::string> predicted;
    std::string variables;
    std::string format = "table";
    std::string invalidF1 = "zero";
};

std::string fixed(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

int runScore(const ScoreOpts& o) {
    auto vars = maybeVariables(o.variables);
    auto truth = ema::io::parseGraphFile(o.truth, vars);
    if (!vars) vars = truth.variablesPtr();
    std::vector<ema::MixedGraph> preds;
    std::vector<std::string> labels;
    for (const auto& p : o.predicted) {
        preds.push_back(ema::io::parseGraphFile(p, vars));
        labels.push_back(std::filesystem::path(p).filename().string());
    }
    const auto policy = o.invalidF1 == "exclude" ? ema::InvalidPrecisionF1::Exclude : ema::InvalidPrecisionF1::Zero;
    const auto batch = ema::scoreBatch(truth, preds, labels, policy);

    if (o.format == "json") {
        nlohmann::json j;
        j["reports"] = nlohmann::json::array();
        for (std::size_t k = 0; k < batch.reports.size(); ++k) {
            auto r = ema::io::metricsToJson(batch.reports[k]);
            r["label"] = batch.labels[k];
            j["reports"].push_back(std::move(r));
        }
        auto stat = [](const ema::MetricSummary& s) {
            return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"n", s.count}};
        };
        const auto& a = batch.aggregate;
        j["aggregate"] = {{"bsf", stat(a.bsf)},       {"shd", stat(a.shd)},
                          {"f1", stat(a.f1)},         {"precision", stat(a.precision)},
                          {"recall", stat(a.recall)}, {"invalid_precision", a.invalidPrecision}};
        std::cout << j.dump(2) << '\n';
        return 0;
    }

    const char sep = o.format == "csv" ? ',' : '\t';
    auto opt = [](const std::optional<ema::Rational>& r) { return r ? fixed(r->toDouble()) : std::string("invalid"); };
    std::cout << "label" << sep << "bsf" << sep << "shd" << sep << "f1" << sep << "precision" << sep
              << "recall" << '\n';
    for (std::size_t k = 0; k < batch.reports.size(); ++k) {
        const auto& r = batch.reports[k];
        std::cout << batch.labels[k] << sep << fixed(r.bsf.toDouble()) << sep << fixed(r.shd.toDouble())
                  << sep << (r.f1 ? fixed(r.f1->toDouble()) : std::string("invalid")) << sep
                  << opt(r.precision) << sep << fixed(r.recall.toDouble()) << '\n';
    }
    if (batch.reports.size() > 1) {
        const auto& a = batch.aggregate;
        auto pm = [](const ema::MetricSummary& s) { return fixed(s.mean) + " ± " + fixed(s.std); };
        std::cout << "mean ± std" << sep << pm(a.bsf) << sep << pm(a.shd) << sep << pm(a.f1) << sep
                  << pm(a.precision) << sep << pm(a.recall) << '\n';
        if (a.invalidPrecision)
            std::cout << "# invalid precision excluded from the mean: " << a.invalidPrecision << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

int runSweepCommand(const std::string& config, int jobs, bool noTiming) {
    auto cfg = ema::loadRunConfig(config);
    if (jobs > 0) cfg.jobs = jobs;
    if (noTiming) cfg.timing = false;
    const auto r = ema::runSweep(cfg);
    std::cout << "cells run: " << r.cellsRun << ", skipped (already present): " << r.cellsSkipped << '\n';
    std::cout << "theta1\ttheta2\tcorrectness\truns\tbsf\tf1\tprecision\trecall\tshd\n";
    for (const auto& g : r.grid) {
        const auto& m = g.metrics;
        std::cout << ema::io::formatNumber(g.theta1) << '\t' << ema::io::formatNumber(g.theta2) << '\t'
                  << ema::io::formatNumber(g.correctness) << '\t' << g.runs << '\t' << fixed(m.bsf.mean)
                  << '\t' << fixed(m.f1.mean) << '\t' << fixed(m.precision.mean) << '\t'
                  << fixed(m.recall.mean) << '\t' << fixed(m.shd.mean) << '\n';
    }
    if (r.best)
        std::cout << "best cell by mean BSF then F1: theta1=" << ema::io::formatNumber(r.best->theta1)
                  << " theta2=" << ema::io::formatNumber(r.best->theta2)
                  << " correctness=" << ema::io::formatNumber(r.best->correctness)
                  << " bsf=" << fixed(r.best->metrics.bsf.mean) << " f1=" << fixed(r.best->metrics.f1.mean)
                  << '\n';
    std::cout << "results: " << r.resultsCsv.string() << "\nsummary: " << r.summaryJson.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// serve / baseline

int runServe(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw UsageError("--addr must be host:port");
    const std::string host = addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("--addr must be host:port");
    }
    ema::session::SessionManager manager;
    ema::session::SessionServer server(manager);
    const int bound = server.start(host, port);
    std::cout << "listening on " << host << ":" << bound << std::endl;
    // serve until the process is terminated
    for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
}

int runBaseline(const std::vector<std::string>& modelPaths, const std::string& variables, int minCount,
                const std::string& out) {
    auto models = ema::io::loadModels(toPaths(modelPaths), maybeVariables(variables));
    auto dag = ema::bayesysModelAverage(models, minCount);
    if (out.empty())
        std::cout << ema::io::serializeGraphCsv(dag.toMixed());
    else
        ema::io::writeGraphFile(out, dag.toMixed());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Expert model averaging of candidate causal graphs", "ema"};
    app.require_subcommand(1);

    EnsembleOpts eo;
    auto* ensemble = app.add_subcommand("ensemble", "Average candidate graphs with an expert into one DAG");
    ensemble->add_option("--models", eo.models, "Model graph files or directories")->required();
    ensemble->add_option("--variables", eo.variables, "Variables file (needed for CSV edge lists)");
    ensemble->add_option("--theta1", eo.theta1, "Edge threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    ensemble->add_option("--theta2", eo.theta2, "Orientation threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    ensemble->add_option("--expert", eo.expert, "Expert kind")
        ->check(CLI::IsMember({"simulated", "llm", "scripted", "human"}))
        ->capture_default_str();
    ensemble->add_option("--truth", eo.truth, "Ground-truth graph (simulated expert, scoring)");
    ensemble->add_option("--correctness", eo.correctness, "Simulated expert correctness")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    ensemble->add_option("--seed", eo.seed, "Seed for the expert and tie shuffling")->capture_default_str();
    ensemble->add_option("--tie-break", eo.tieBreak, "Ordering of equal counts")
        ->check(CLI::IsMember({"lexicographic", "shuffle"}))
        ->capture_default_str();
    ensemble->add_option("--out", eo.out, "Consensus graph output (.csv or .json); stdout if absent");
    ensemble->add_option("--trace", eo.trace, "Write the averaging trace as JSON");
    ensemble->add_option("--transcript", eo.transcript, "Answers for --expert scripted (JSON lines or trace)");
    ensemble->add_option("--llm-endpoint", eo.llmEndpoint, "LLM endpoint config JSON");
    ensemble->add_option("--llm-context", eo.llmContext, "Prompt context JSON");
    ensemble->add_option("--cache", eo.cache, "Answer cache file (JSON lines)");
    ensemble->add_flag("--no-cache", eo.noCache, "Do not cache LLM answers");

    ScoreOpts so;
    auto* scoreCmd = app.add_subcommand("score", "Score predicted graphs against a ground truth");
    scoreCmd->add_option("--truth", so.truth, "Ground-truth graph")->required();
    scoreCmd->add_option("--predicted", so.predicted, "Predicted graph files")->required();
    scoreCmd->add_option("--variables", so.variables, "Variables file (needed for CSV edge lists)");
    scoreCmd->add_option("--format", so.format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    scoreCmd->add_option("--invalid-f1", so.invalidF1, "F1 when precision is invalid")
        ->check(CLI::IsMember({"zero", "exclude"}))
        ->capture_default_str();

    std::string config;
    int jobs = 0;
    bool noTiming = false;
    auto* sweep = app.add_subcommand("sweep", "Run a threshold/correctness/seed grid from a config file");
    sweep->add_option("--config", config, "Run configuration (key = value)")->required();
    sweep->add_option("--jobs", jobs, "Parallel cells (overrides the config)")->check(CLI::PositiveNumber);
    sweep->add_flag("--no-timing", noTiming, "Write wallclock_ms as 0 for byte-stable results");

    std::string addr = "127.0.0.1:8080";
    auto* serve = app.add_subcommand("serve", "Serve human-expert sessions over HTTP");
    serve->add_option("--addr", addr, "host:port to listen on")->capture_default_str();

    std::vector<std::string> baseModels;
    std::string baseVariables, baseOut;
    int minCount = 1;
    auto* baseline = app.add_subcommand("baseline-bayesys", "Greedy directed-edge model averaging baseline");
    baseline->add_option("--models", baseModels, "Model graph files or directories")->required();
    baseline->add_option("--variables", baseVariables, "Variables file (needed for CSV edge lists)");
    baseline->add_option("--min-count", minCount, "Minimum directed-edge count")
        ->check(CLI::Range(1, std::numeric_limits<int>::max()))
        ->capture_default_str();
    baseline->add_option("--out", baseOut, "Output graph (.csv or .json); stdout if absent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*ensemble) return runEnsemble(eo);
        if (*scoreCmd) return runScore(so);
        if (*sweep) return runSweepCommand(config, jobs, noTiming);
        if (*serve) return runServe(addr);
        if (*baseline) return runBaseline(baseModels, baseVariables, minCount, baseOut);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ema::ConfigError& e) {
        std::cerr << "ConfigError: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const ema::io::ParseError& e) {
        std::cerr << "ParseError: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const ema::ExpertError& e) {
        std::cerr << "ExpertError: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const ema::ArgumentError& e) {
        std::cerr << "ArgumentError: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}
