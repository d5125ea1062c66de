#pragma once

#include "ema/expert.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace ema::llm {

/// Extra guidance used for the ALARM network.
extern const char* const kAlarmOrientationExtra;
extern const char* const kAlarmExistenceExtra;

struct VariableInfo {
    std::string name;
    std::optional<std::vector<std::string>> values;
    std::optional<std::string> description;
};

/// Everything substituted into the prompt templates.
struct PromptContext {
    std::string datasetDescription;
    std::string expertiseDescription;
    std::map<std::string, VariableInfo> variables;
    std::optional<std::string> orientationExtra;
    std::optional<std::string> existenceExtra;

    /// Registers every variable in `vars` that is not yet described.
    void addVariables(const VariableSet& vars);

    /// {"dataset": ..., "expertise": ..., "variables": [{name, values?,
    /// description?}], "extras": "alarm" | {"orientation": ..., "existence": ...}}
    static PromptContext fromJson(const nlohmann::json& j);
    static PromptContext load(const std::filesystem::path& path);
};

std::string renderOrientationPrompt(const PromptContext& ctx, const std::string& x,
                                    const std::string& y);
std::string renderExistencePrompt(const PromptContext& ctx, const std::string& x,
                                  const std::string& y);

enum class Choice { A, B };

/// The letter after the last "The correct choice is:" in the text.
/// Throws VerdictParseError when the phrase is missing or the letter is
/// absent or ambiguous.
Choice parseVerdict(const std::string& response);

struct EndpointConfig {
    std::string baseUrl = "https://api.openai.com";  ///< scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string modelName;
    std::string apiKeyEnvVar = "OPENAI_API_KEY";  ///< empty: send no key
    double requestTimeoutSeconds = 120.0;
    int maxRetries = 3;
    std::chrono::milliseconds initialBackoff{500};
    nlohmann::json extraParams = nlohmann::json::object();  ///< merged into the request body
    std::optional<std::filesystem::path> auditLog;

    static EndpointConfig fromJson(const nlohmann::json& j);
};

/// Single-turn chat completion transport.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the assistant message text; throws TransportError.
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Chat-completions style JSON over HTTP(S) with exponential backoff.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(EndpointConfig cfg);
    std::string complete(const std::string& prompt) override;

private:
    EndpointConfig cfg_;
    std::string apiKey_;
};

/// Expert backed by a language model: renders the prompt for the query,
/// sends it, and reads the verdict. Choice A accepts (existence) or orients
/// x -> y; B rejects or orients y -> x.
class LlmExpert : public Expert {
public:
    LlmExpert(EndpointConfig cfg, PromptContext ctx, std::shared_ptr<ChatClient> client = nullptr);

    ExpertAnswer ask(const ExpertQuery& q) override;
    std::string id() const override { return "llm:" + cfg_.modelName; }

private:
    void audit(const ExpertQuery& q, const std::string& prompt, const std::string& raw,
               std::optional<Choice> parsed, long long latencyMs);

    EndpointConfig cfg_;
    PromptContext ctx_;
    std::shared_ptr<ChatClient> client_;
    std::mutex auditMu_;
};

}  // namespace ema::llm
