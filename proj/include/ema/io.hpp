#pragma once

#include "ema/experts.hpp"
#include "ema/graph.hpp"
#include "ema/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ema::io {

/// Malformed input file; `line` is 1-based, 0 when not line-specific.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& msg);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Variables from a JSON document ({"variables": [{name, values?,
/// description?}]}) or a text file with one name per line.
std::shared_ptr<const VariableSet> loadVariables(const std::filesystem::path& path);

/// CSV edge list ("source,target,mark" header, marks ->, --, <->) resolved
/// against `vars`, or a JSON graph document carrying its own variables.
MixedGraph parseGraphFile(const std::filesystem::path& path,
                          std::shared_ptr<const VariableSet> vars = nullptr);

MixedGraph parseGraphCsv(std::string_view text, std::shared_ptr<const VariableSet> vars,
                         const std::string& fileLabel = "<csv>");
MixedGraph parseGraphJson(const nlohmann::json& doc, const std::string& fileLabel = "<json>");

std::string serializeGraphCsv(const MixedGraph& g);
nlohmann::json graphToJson(const MixedGraph& g);
std::string serializeGraphJson(const MixedGraph& g);

/// Writes CSV or JSON depending on the extension (.json for JSON).
void writeGraphFile(const std::filesystem::path& path, const MixedGraph& g);

/// Expands directories to their *.csv / *.json files (sorted) and loads all
/// graphs against one variable set.
std::vector<MixedGraph> loadModels(const std::vector<std::filesystem::path>& paths,
                                   std::shared_ptr<const VariableSet> vars = nullptr);

/// Averaging trace as a JSON document {"decisions": [...]}, pairs by name.
nlohmann::json traceToJson(const AveragingTrace& trace, const VariableSet& vars);

/// Expert answers recorded in a trace document, in call order.
Transcript transcriptFromTraceJson(const nlohmann::json& trace);

nlohmann::json metricsToJson(const MetricsReport& m);

/// Transcript as JSON lines: {"kind", "pair": [x, y], "accept"} or
/// {"kind", "pair": [x, y], "orientation": [parent, child]}. Also accepts a
/// trace document written by traceToJson.
Transcript loadTranscript(const std::filesystem::path& path);
void writeTranscript(const std::filesystem::path& path, const Transcript& t);

struct PerturbationSpec {
    double deleteRate = 0.0;
    double reverseRate = 0.0;
    double insertRate = 0.0;
    std::size_t modelCount = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Independent noisy copies of `truth`. Each true edge is deleted with
/// deleteRate, otherwise reversed (directed edges only) with reverseRate;
/// each non-adjacent pair receives a randomly oriented directed edge with
/// insertRate. Draws for model k depend only on (seed, k). When every model
/// comes out empty a message is appended to `warnings`.
std::vector<MixedGraph> perturb(const MixedGraph& truth, const PerturbationSpec& spec,
                                std::vector<std::string>* warnings = nullptr);

/// Random DAG over variables v00, v01, ... with exactly `edges` edges
/// consistent with a random topological order.
MixedGraph randomDag(std::size_t nodes, std::size_t edges, std::uint64_t seed);

/// Shortest round-trip decimal form of a double.
std::string formatNumber(double v);

}  // namespace ema::io
