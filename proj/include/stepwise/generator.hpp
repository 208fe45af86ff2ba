#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace stepwise {

enum class Stage { StageI, StageII };

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    /// Which problem the request belongs to; scripted clients key on it.
    std::string problem_id;
    Stage stage = Stage::StageI;
    std::size_t attempt = 0;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
};

/// Produces assistant text for a chat request. Implementations must be
/// callable concurrently. Throws TransportError when the backend cannot be
/// reached or answers with something other than a completion.
class GeneratorClient {
  public:
    virtual ~GeneratorClient() = default;
    [[nodiscard]] virtual std::string complete(const ChatRequest& request) = 0;
};

struct GeneratorConfig {
    std::string endpoint_url;
    std::string model_name;
    double temperature = 0.7;
    std::size_t max_retries = 3;
    std::size_t parallelism = 4;
    std::chrono::seconds timeout{120};
    /// Read from the environment, never from flags or files.
    std::string credential;

    /// Throws ConfigError.
    void check() const;
};

/// Request body for an OpenAI-style chat-completion endpoint.
[[nodiscard]] nlohmann::json chat_request_body(const std::string& model, const ChatRequest& request);
/// Assistant text of choices[0].message.content. Throws TransportError.
[[nodiscard]] std::string parse_chat_response(const std::string& body);

/// POSTs chat-completion requests over HTTP(S).
class HttpChatClient final : public GeneratorClient {
  public:
    explicit HttpChatClient(GeneratorConfig config);
    [[nodiscard]] std::string complete(const ChatRequest& request) override;

  private:
    GeneratorConfig config_;
    std::string origin_; // scheme://host[:port]
    std::string path_;
};

/// Replays canned responses: each problem id owns an ordered list that is
/// consumed one response per request, across both stages. Exhausting a list
/// raises TransportError.
class ScriptedClient final : public GeneratorClient {
  public:
    explicit ScriptedClient(std::map<std::string, std::vector<std::string>> script);

    /// JSONL of {"problem_id": ..., "responses": [...]}. Throws IoError /
    /// SchemaError.
    [[nodiscard]] static std::map<std::string, std::vector<std::string>> read_script(
        const std::filesystem::path& path);

    [[nodiscard]] std::string complete(const ChatRequest& request) override;
    [[nodiscard]] std::size_t calls() const;

  private:
    std::map<std::string, std::vector<std::string>> script_;
    std::map<std::string, std::size_t> cursor_;
    std::size_t calls_ = 0;
    mutable std::mutex mutex_;
};

} // namespace stepwise
