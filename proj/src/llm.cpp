#include "ema/llm.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace ema::llm {

const char* const kAlarmOrientationExtra =
    "Additionally, note that:\n"
    "- Variables that represent errors or system failures are root causes of other "
    "measurements and not downstream of anything.\n"
    "- Measurements, indicators, or monitoring outputs depend on underlying physiological "
    "states and cannot cause them.\n";

const char* const kAlarmExistenceExtra =
    "Choose A only if at least one of the following clearly applies:\n"
    "- one variable directly produces the other through a known mechanism\n"
    "- one variable is an upstream structural or pathological cause of the other\n"
    "- one variable is a downstream aggregate or consequence of the other\n";

// ---------------------------------------------------------------------------
// Context

void PromptContext::addVariables(const VariableSet& vars) {
    for (const auto& v : vars.variables())
        if (!variables.count(v.name)) variables[v.name] = VariableInfo{v.name, v.values, v.description};
}

PromptContext PromptContext::fromJson(const nlohmann::json& j) {
    PromptContext ctx;
    ctx.datasetDescription = j.value("dataset", "");
    ctx.expertiseDescription = j.value("expertise", "");
    for (const auto& v : j.value("variables", nlohmann::json::array())) {
        VariableInfo info;
        info.name = v.at("name").get<std::string>();
        if (info.name.empty()) throw ArgumentError("prompt context variable with empty name");
        if (v.contains("values")) info.values = v["values"].get<std::vector<std::string>>();
        if (v.contains("description")) info.description = v["description"].get<std::string>();
        ctx.variables[info.name] = std::move(info);
    }
    if (j.contains("extras")) {
        const auto& e = j["extras"];
        if (e.is_string()) {
            if (e.get<std::string>() != "alarm")
                throw ArgumentError("unknown extras preset '" + e.get<std::string>() + "'");
            ctx.orientationExtra = kAlarmOrientationExtra;
            ctx.existenceExtra = kAlarmExistenceExtra;
        } else {
            if (e.contains("orientation")) ctx.orientationExtra = e["orientation"].get<std::string>();
            if (e.contains("existence")) ctx.existenceExtra = e["existence"].get<std::string>();
        }
    }
    return ctx;
}

PromptContext PromptContext::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open prompt context " + path.string());
    try {
        return fromJson(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError("bad prompt context " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

const VariableInfo& lookup(const PromptContext& ctx, const std::string& name) {
    auto it = ctx.variables.find(name);
    if (it == ctx.variables.end() || name.empty())
        throw ArgumentError("prompt context has no variable '" + name + "'");
    return it->second;
}

std::string valuesText(const VariableInfo& v) {
    if (!v.values || v.values->empty()) return "unknown";
    std::string out = "[";
    for (std::size_t k = 0; k < v.values->size(); ++k) {
        if (k) out += ", ";
        out += (*v.values)[k];
    }
    return out + "]";
}

std::string describe(const VariableInfo& v) {
    const std::string desc = v.description && !v.description->empty() ? *v.description : "unknown";
    return "'" + v.name + "' with possible values " + valuesText(v) + ", described as " + desc + "\n";
}

std::string withNewline(std::string s) {
    if (!s.empty() && s.back() != '\n') s += '\n';
    return s;
}

std::string header(const PromptContext& ctx) {
    return "We are currently constructing a causal graph for a dataset covering " +
           ctx.datasetDescription + ". You are an " + ctx.expertiseDescription + ". ";
}

const char* const kClosing =
    "Provide a brief causal analysis (2-4 sentences), then conclude with:\n"
    "\"The correct choice is: <A/B>\"\n";

}  // namespace

std::string renderOrientationPrompt(const PromptContext& ctx, const std::string& x,
                                    const std::string& y) {
    const auto& vx = lookup(ctx, x);
    const auto& vy = lookup(ctx, y);
    std::string p = header(ctx);
    p += "Assume that there is a plausible causal relationship between the following two "
         "variables (possibly indirect). Your task is to determine the most plausible *causal "
         "ordering* between them. Causation may be direct or indirect (via unobserved or "
         "observed mediators).\n";
    p += "The two variables under consideration are:\n";
    p += describe(vx);
    p += describe(vy);
    p += "Before answering, consider:\n"
         "- Which variable is more plausibly upstream.\n"
         "- Whether intervening on one would reasonably be expected to change the other.\n"
         "- Whether one variable represents a more downstream outcome. Note that aggregated "
         "variables are downstream of (and directly caused by) what they aggregate.\n"
         "- Whether either variable primarily serves as evidence of underlying processes "
         "rather than a driver.\n";
    p += "A: '" + x + "' is a cause (possibly indirect) of '" + y + "' (" + x + " ->* " + y + ").\n";
    p += "B: '" + y + "' is a cause (possibly indirect) of '" + x + "' (" + y + " ->* " + x + ").\n";
    if (ctx.orientationExtra) p += withNewline(*ctx.orientationExtra);
    p += kClosing;
    return p;
}

std::string renderExistencePrompt(const PromptContext& ctx, const std::string& x,
                                  const std::string& y) {
    const auto& vx = lookup(ctx, x);
    const auto& vy = lookup(ctx, y);
    std::string p = header(ctx);
    p += "Your task is to determine whether there is a plausible *causal relationship* between "
         "two variables. The relationship may be direct or indirect, and may involve "
         "unobserved mediators. You are not asked to determine direction at this stage.\n";
    p += "The two variables under consideration are:\n";
    p += describe(vx);
    p += describe(vy);
    p += "Assume that:\n"
         "- The true causal graph may include unobserved variables.\n"
         "- Observed associations alone do not determine causal ordering.\n"
         "\n"
         "Before answering, consider:\n"
         "- Whether the variables are part of the same underlying (domain-relevant) mechanism.\n"
         "- Whether there exists a specific, domain-supported causal mechanism by which "
         "changing one would plausibly alter the other, beyond general shared factors.\n"
         "- Whether any observed association is more likely explained by confounding or "
         "selection effects.\n"
         "- Whether the variables operate at compatible levels (e.g., trait vs symptom, "
         "background vs outcome).\n"
         "- Whether the variables are better understood as parallel consequences of broader "
         "factors rather than causally linked to each other.\n"
         "\n";
    p += "A: There is a plausible causal relationship between '" + x + "' and '" + y + "'.\n";
    p += "B: There is no meaningful causal relationship between '" + x + "' and '" + y +
         "'; any association is likely due to shared causes or noise.\n";
    if (ctx.existenceExtra) p += withNewline(*ctx.existenceExtra);
    p += kClosing;
    return p;
}

// ---------------------------------------------------------------------------
// Verdict parsing

Choice parseVerdict(const std::string& response) {
    static const std::string phrase = "the correct choice is:";
    std::string lower(response.size(), '\0');
    std::transform(response.begin(), response.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto at = lower.rfind(phrase);
    if (at == std::string::npos)
        throw VerdictParseError("response does not contain \"The correct choice is:\"");

    std::size_t k = at + phrase.size();
    auto skippable = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '_' || c == '`' ||
               c == '"' || c == '\'';
    };
    while (k < response.size() && skippable(response[k])) ++k;
    if (k >= response.size()) throw VerdictParseError("no choice letter after the verdict phrase");
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(response[k])));
    if (letter != 'A' && letter != 'B')
        throw VerdictParseError(std::string("unexpected verdict '") + response[k] + "'");
    if (k + 1 < response.size() && std::isalnum(static_cast<unsigned char>(response[k + 1])))
        throw VerdictParseError("verdict letter is part of a longer word");

    // the other letter standing alone on the same line makes it ambiguous
    const char other = letter == 'A' ? 'b' : 'a';
    const auto eol = lower.find('\n', k + 1);
    const std::string rest = lower.substr(k + 1, eol == std::string::npos ? std::string::npos : eol - k - 1);
    for (std::size_t p = 0; p < rest.size(); ++p) {
        if (rest[p] != other) continue;
        const bool leftOk = p == 0 || !std::isalnum(static_cast<unsigned char>(rest[p - 1]));
        const bool rightOk = p + 1 == rest.size() || !std::isalnum(static_cast<unsigned char>(rest[p + 1]));
        if (leftOk && rightOk) throw VerdictParseError("ambiguous verdict naming both A and B");
    }
    return letter == 'A' ? Choice::A : Choice::B;
}

// ---------------------------------------------------------------------------
// Transport

EndpointConfig EndpointConfig::fromJson(const nlohmann::json& j) {
    EndpointConfig c;
    c.baseUrl = j.value("baseUrl", c.baseUrl);
    c.path = j.value("path", c.path);
    c.modelName = j.value("model", c.modelName);
    c.apiKeyEnvVar = j.value("apiKeyEnvVar", c.apiKeyEnvVar);
    c.requestTimeoutSeconds = j.value("timeoutSeconds", c.requestTimeoutSeconds);
    c.maxRetries = j.value("maxRetries", c.maxRetries);
    c.initialBackoff = std::chrono::milliseconds(j.value("initialBackoffMs", 500));
    if (j.contains("params")) c.extraParams = j["params"];
    if (j.contains("auditLog")) c.auditLog = j["auditLog"].get<std::string>();
    if (c.modelName.empty()) throw ArgumentError("LLM endpoint config needs a model name");
    if (c.maxRetries < 0) throw ArgumentError("maxRetries must be >= 0");
    return c;
}

HttpChatClient::HttpChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (!cfg_.apiKeyEnvVar.empty()) {
        const char* key = std::getenv(cfg_.apiKeyEnvVar.c_str());
        if (!key || !*key)
            throw ArgumentError("environment variable " + cfg_.apiKeyEnvVar + " is not set");
        apiKey_ = key;
    }
}

std::string HttpChatClient::complete(const std::string& prompt) {
    nlohmann::json body = cfg_.extraParams.is_object() ? cfg_.extraParams : nlohmann::json::object();
    body["model"] = cfg_.modelName;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    const std::string payload = body.dump();

    httplib::Client client(cfg_.baseUrl);
    const auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::duration<double>(cfg_.requestTimeoutSeconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!apiKey_.empty()) headers.emplace("Authorization", "Bearer " + apiKey_);

    std::string lastError;
    auto backoff = cfg_.initialBackoff;
    for (int attempt = 0; attempt <= cfg_.maxRetries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(cfg_.path, headers, payload, "application/json");
        if (!res) {
            lastError = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            lastError = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            lastError = std::string("malformed completion body: ") + e.what();
        }
    }
    throw TransportError("chat endpoint " + cfg_.baseUrl + cfg_.path + " failed after " +
                         std::to_string(cfg_.maxRetries + 1) + " attempts: " + lastError);
}

// ---------------------------------------------------------------------------
// Expert

LlmExpert::LlmExpert(EndpointConfig cfg, PromptContext ctx, std::shared_ptr<ChatClient> client)
    : cfg_(std::move(cfg)), ctx_(std::move(ctx)), client_(std::move(client)) {
    if (!client_) client_ = std::make_shared<HttpChatClient>(cfg_);
}

void LlmExpert::audit(const ExpertQuery& q, const std::string& prompt, const std::string& raw,
                      std::optional<Choice> parsed, long long latencyMs) {
    if (!cfg_.auditLog) return;
    nlohmann::json j;
    j["query"] = {{"kind", toString(q.kind)}, {"x", q.xName}, {"y", q.yName}};
    j["prompt"] = prompt;
    j["rawResponse"] = raw;
    j["parsed"] = parsed ? nlohmann::json(*parsed == Choice::A ? "A" : "B") : nlohmann::json(nullptr);
    j["latencyMs"] = latencyMs;
    std::lock_guard lock(auditMu_);
    std::ofstream out(*cfg_.auditLog, std::ios::app);
    out << j.dump() << '\n';
}

ExpertAnswer LlmExpert::ask(const ExpertQuery& q) {
    const std::string prompt = q.kind == QueryKind::Existence
                                   ? renderExistencePrompt(ctx_, q.xName, q.yName)
                                   : renderOrientationPrompt(ctx_, q.xName, q.yName);
    const auto start = std::chrono::steady_clock::now();
    const std::string raw = client_->complete(prompt);
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    Choice choice;
    try {
        choice = parseVerdict(raw);
    } catch (const VerdictParseError&) {
        audit(q, prompt, raw, std::nullopt, latency);
        throw;
    }
    audit(q, prompt, raw, choice, latency);
    if (q.kind == QueryKind::Existence)
        return ExpertAnswer::existence(choice == Choice::A, Provenance::LLM);
    return choice == Choice::A ? ExpertAnswer::orientation(q.x, q.y, Provenance::LLM)
                               : ExpertAnswer::orientation(q.y, q.x, Provenance::LLM);
}

}  // namespace ema::llm
