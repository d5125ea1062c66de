#include "ema/averaging.hpp"
#include "ema/experts.hpp"
#include "ema/io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace ema;
using testutil::graph;
using testutil::letters;

TEST(GraphCsv, ParsesMarks) {
    auto vs = letters(3);
    EXPECT_EQ(io::parseGraphCsv("source,target,mark\na,b,->\n", vs), graph(vs, "a->b"));
    auto und = io::parseGraphCsv("source,target,mark\nb,a,--\n", vs);
    auto e = und.edgeBetween(0, 1);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->source, 0u);
    EXPECT_EQ(e->mark, EdgeMark::Undirected);
    EXPECT_EQ(io::parseGraphCsv("# models\n\nsource,target,mark\n a , c , <-> \n", vs), graph(vs, "a<->c"));
}

TEST(GraphCsv, ErrorsNameTheLine) {
    auto vs = letters(3);
    auto lineOf = [&](const std::string& text) -> std::size_t {
        try {
            io::parseGraphCsv(text, vs, "g.csv");
        } catch (const io::ParseError& e) {
            EXPECT_NE(std::string(e.what()).find("g.csv:"), std::string::npos);
            return e.line();
        }
        return 999;
    };
    EXPECT_EQ(lineOf("source,target,mark\na,a,->\n"), 2u);
    EXPECT_EQ(lineOf("source,target,mark\na,b,->\na,z,->\n"), 3u);
    EXPECT_EQ(lineOf("source,target,mark\na,b,=>\n"), 2u);
    EXPECT_EQ(lineOf("source,target,mark\na,b,->\nb,a,--\n"), 3u);
    EXPECT_EQ(lineOf("source,target,mark\na,b\n"), 2u);
    EXPECT_EQ(lineOf("from,to\n"), 1u);
    EXPECT_THROW(io::parseGraphCsv("source,target,mark\n", nullptr), io::ParseError);
}

TEST(GraphFiles, RoundTrip) {
    ema::hash::Stream rng(31);
    auto dir = testutil::tempDir("io_roundtrip");
    for (int rep = 0; rep < 100; ++rep) {
        auto vs = letters(1 + rng.below(10));
        auto g = testutil::randomModel(vs, rng);
        EXPECT_EQ(io::parseGraphCsv(io::serializeGraphCsv(g), vs), g);
        EXPECT_EQ(io::parseGraphJson(io::graphToJson(g)), g);
        io::writeGraphFile(dir / "g.json", g);
        EXPECT_EQ(io::parseGraphFile(dir / "g.json"), g);
        io::writeGraphFile(dir / "g.csv", g);
        EXPECT_EQ(io::parseGraphFile(dir / "g.csv", vs), g);
        EXPECT_EQ(io::serializeGraphCsv(io::parseGraphFile(dir / "g.csv", vs)), testutil::readFile(dir / "g.csv"));
    }
}

TEST(GraphFiles, JsonKeepsMetadata) {
    auto vs = std::make_shared<VariableSet>();
    vs->add("smoke", std::vector<std::string>{"yes", "no"}, "smoker");
    vs->add("lung");
    MixedGraph g(vs);
    g.addEdge(0, 1, EdgeMark::Directed);
    auto back = io::parseGraphJson(io::graphToJson(g));
    EXPECT_EQ(back.variables()[0].description, std::optional<std::string>("smoker"));
    EXPECT_EQ(back.variables()[0].values, (std::optional<std::vector<std::string>>{{"yes", "no"}}));
    EXPECT_FALSE(back.variables()[1].values);
}

TEST(Variables, TextAndJson) {
    auto dir = testutil::tempDir("io_vars");
    testutil::writeFile(dir / "v.txt", "a\n\nb\n c \n");
    auto t = io::loadVariables(dir / "v.txt");
    EXPECT_EQ(t->size(), 3u);
    EXPECT_EQ(t->name(2), "c");
    testutil::writeFile(dir / "v.json", R"({"variables":[{"name":"x","values":["0","1"]},{"name":"y","description":"why"}]})");
    auto j = io::loadVariables(dir / "v.json");
    EXPECT_EQ(j->size(), 2u);
    EXPECT_EQ(j->at("y"), 1u);
    testutil::writeFile(dir / "dup.txt", "a\na\n");
    EXPECT_THROW(io::loadVariables(dir / "dup.txt"), io::ParseError);
    EXPECT_THROW(io::loadVariables(dir / "missing.txt"), io::ParseError);
}

TEST(Models, DirectoryIsSortedAndShared) {
    auto dir = testutil::tempDir("io_models");
    auto vs = letters(3);
    io::writeGraphFile(dir / "m2.csv", graph(vs, "b->c"));
    io::writeGraphFile(dir / "m1.csv", graph(vs, "a->b"));
    testutil::writeFile(dir / "notes.txt", "ignored");
    auto models = io::loadModels({dir}, vs);
    ASSERT_EQ(models.size(), 2u);
    EXPECT_EQ(models[0], graph(vs, "a->b"));
    EXPECT_EQ(models[0].variablesPtr(), models[1].variablesPtr());
    EXPECT_THROW(io::loadModels({}, vs), ArgumentError);
}

TEST(Trace, JsonRoundTripsTranscript) {
    ema::hash::Stream rng(41);
    auto dir = testutil::tempDir("io_trace");
    for (int rep = 0; rep < 50; ++rep) {
        auto vs = letters(2 + rng.below(5));
        std::vector<MixedGraph> models;
        for (int k = 0; k < 4; ++k) models.push_back(testutil::randomModel(vs, rng));
        RandomExpert e(rep);
        auto r = expertModelAverage(models, {}, e);
        auto json = io::traceToJson(r.trace, *vs);
        EXPECT_EQ(io::transcriptFromTraceJson(json), transcriptFromTrace(r.trace, *vs));
        io::writeTranscript(dir / "t.jsonl", transcriptFromTrace(r.trace, *vs));
        EXPECT_EQ(io::loadTranscript(dir / "t.jsonl"), transcriptFromTrace(r.trace, *vs));
        testutil::writeFile(dir / "trace.json", json.dump());
        EXPECT_EQ(io::loadTranscript(dir / "trace.json"), transcriptFromTrace(r.trace, *vs));
    }
}

TEST(Trace, Fields) {
    auto vs = letters(2);
    std::vector<MixedGraph> models{graph(vs, "a->b"), graph(vs, "b->a")};
    RandomExpert e(0);
    auto j = io::traceToJson(expertModelAverage(models, {}, e).trace, *vs);
    auto d = j["decisions"][0];
    EXPECT_EQ(d["x"], "a");
    EXPECT_EQ(d["c"], 2);
    EXPECT_EQ(d["n"], 2);
    EXPECT_EQ(d["existence"], nullptr);
    EXPECT_EQ(d["rule"], "expert");
    EXPECT_EQ(d["orientation"]["provenance"], "simulated");
}

TEST(Metrics, JsonMarksInvalidPrecision) {
    auto vs = letters(2);
    auto j = io::metricsToJson(score(graph(vs, "a->b"), graph(vs, "")));
    EXPECT_EQ(j["precision"], "invalid");
    EXPECT_EQ(j["bsf"]["exact"], "0");
    auto k = io::metricsToJson(score(graph(vs, "a->b"), graph(vs, "b->a")));
    EXPECT_EQ(k["recall"]["exact"], "1/2");
}

TEST(Perturb, DeterministicRates) {
    auto vs = letters(3);
    auto chain = graph(vs, "a->b b->c");
    io::PerturbationSpec copies{0, 0, 0, 4, 7};
    for (const auto& m : io::perturb(chain, copies)) EXPECT_EQ(m, chain);
    io::PerturbationSpec gone{1, 0, 0, 3, 7};
    std::vector<std::string> warnings;
    for (const auto& m : io::perturb(chain, gone, &warnings)) EXPECT_EQ(m.edgeCount(), 0u);
    EXPECT_EQ(warnings.size(), 1u);
    io::PerturbationSpec flip{0, 1, 0, 3, 7};
    for (const auto& m : io::perturb(chain, flip)) EXPECT_EQ(m, graph(vs, "b->a c->b"));
    io::PerturbationSpec bad{1.5, 0, 0, 1, 0};
    EXPECT_THROW(io::perturb(chain, bad), ArgumentError);
    EXPECT_THROW(io::perturb(graph(vs, "a--b"), copies), ArgumentError);
}

TEST(Perturb, SeedDeterminesModels) {
    auto truth = io::randomDag(12, 18, 3);
    io::PerturbationSpec s{0.2, 0.2, 0.02, 6, 11};
    EXPECT_EQ(io::perturb(truth, s), io::perturb(truth, s));
    auto more = s;
    more.modelCount = 8;
    auto a = io::perturb(truth, s), b = io::perturb(truth, more);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(a[k], b[k]);
    s.seed = 12;
    EXPECT_NE(io::perturb(truth, s), a);
}

TEST(RandomDag, ShapeAndAcyclicity) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = io::randomDag(20, 30, seed);
        EXPECT_EQ(g.size(), 20u);
        EXPECT_EQ(g.edgeCount(), 30u);
        Dag d(g.variablesPtr());
        for (const auto& e : g.edges()) d.addEdge(e.source, e.target);  // throws on a cycle
    }
    EXPECT_EQ(io::randomDag(5, 4, 1), io::randomDag(5, 4, 1));
    EXPECT_THROW(io::randomDag(3, 4, 0), ArgumentError);
}

TEST(FormatNumber, Shortest) {
    EXPECT_EQ(io::formatNumber(0.7), "0.7");
    EXPECT_EQ(io::formatNumber(3.0 / 10.0), "0.3");
    EXPECT_EQ(io::formatNumber(1), "1");
}
