#pragma once

#include "ema/averaging.hpp"
#include "ema/io.hpp"
#include "ema/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ema {

/// Bad run configuration; the message names the file and key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExpertKind { Simulated, Llm, Human, Scripted };

std::string_view toString(ExpertKind k);
ExpertKind expertKindFromString(std::string_view s);

struct ExpertSpec {
    ExpertKind kind = ExpertKind::Simulated;
    double correctness = 0.8;
    std::optional<std::filesystem::path> llmEndpoint;  ///< endpoint JSON
    std::optional<std::filesystem::path> llmContext;   ///< prompt context JSON
    std::optional<std::filesystem::path> cachePath;
    bool noCache = false;
    std::optional<std::filesystem::path> transcript;
    std::string humanAddress;
    double humanTimeoutSeconds = 15 * 60;
};

struct TruthGenerator {
    std::size_t nodes = 20;
    std::size_t edges = 30;
    std::uint64_t seed = 1;
};

struct RunConfig {
    std::string network = "network";
    std::vector<std::filesystem::path> modelPaths;
    std::optional<std::filesystem::path> variablesPath;
    std::optional<std::filesystem::path> truthPath;
    std::optional<TruthGenerator> truthGenerator;
    /// When set, each seed's ensemble is perturbed from the truth with that
    /// seed instead of being read from modelPaths.
    std::optional<io::PerturbationSpec> perturbation;
    AveragingConfig averaging;
    ExpertSpec expert;
    std::vector<double> theta1Grid{0.0};
    std::vector<double> theta2Grid{0.7};
    std::vector<double> correctnessGrid{0.8};
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path outputDir = "sweep_out";
    int jobs = 1;
    bool timing = true;  ///< false writes wallclock_ms as 0 for byte-stable output

    void validate() const;
};

/// Parses a `key = value` document. Lists are comma separated; seed lists
/// also accept ranges like `0..19`. Unknown keys are errors.
RunConfig loadRunConfig(const std::filesystem::path& path);
RunConfig parseRunConfig(const std::string& text, const std::string& label);

/// One grid cell: thresholds, correctness and seed.
struct SweepCell {
    double theta1 = 0.0;
    double theta2 = 0.7;
    double correctness = 0.8;
    std::uint64_t seed = 0;
};

struct SweepRow {
    std::string network;
    std::size_t nModels = 0;
    SweepCell cell;
    std::optional<MetricsReport> metrics;
    ExpertCallCounts calls;
    long long wallclockMs = 0;
    std::string error;
};

extern const char* const kResultsHeader;

std::string formatRow(const SweepRow& row, bool includeCorrectness);

/// Loads the truth (file or generator) and fixed models for a config.
struct SweepInputs {
    std::optional<MixedGraph> truth;
    std::vector<MixedGraph> fixedModels;
};
SweepInputs loadSweepInputs(const RunConfig& cfg);

/// Expert for one cell, per the config's expert spec. Human experts are
/// not supported here.
std::shared_ptr<Expert> makeExpert(const RunConfig& cfg, const SweepInputs& in,
                                   const EnsembleCounts& counts, double correctness,
                                   std::uint64_t seed, std::shared_ptr<AnswerCache> cache);

/// Runs averaging for one cell and scores it when a truth is available.
SweepRow runCell(const RunConfig& cfg, const SweepInputs& in, const SweepCell& cell,
                 std::shared_ptr<AnswerCache> cache = nullptr);

struct GridSummary {
    double theta1 = 0, theta2 = 0, correctness = 0;
    std::size_t runs = 0;
    std::size_t failures = 0;
    BatchAggregate metrics;
    MetricSummary existenceCalls, orientationCalls;
};

struct SweepResult {
    std::size_t cellsRun = 0;
    std::size_t cellsSkipped = 0;
    std::vector<GridSummary> grid;
    std::optional<GridSummary> best;  ///< highest mean BSF, then mean F1
    std::filesystem::path resultsCsv;
    std::filesystem::path summaryJson;
};

/// Cartesian product of the grids and seeds. Rows go to
/// <output>/results.csv in grid order; cells already in that file are
/// skipped. A per-grid-point summary is written to <output>/summary.json.
SweepResult runSweep(const RunConfig& cfg);

std::vector<GridSummary> summarizeRows(const std::vector<SweepRow>& rows,
                                       const std::vector<SweepCell>& gridOrder);
std::optional<GridSummary> bestCell(const std::vector<GridSummary>& grid);
nlohmann::json summaryToJson(const std::vector<GridSummary>& grid,
                             const std::optional<GridSummary>& best);

/// Reads rows back from a results file (metrics only as doubles).
std::vector<SweepRow> readResults(const std::filesystem::path& csv);

}  // namespace ema
