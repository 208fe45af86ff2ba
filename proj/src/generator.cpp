#include "stepwise/generator.hpp"

#include "stepwise/errors.hpp"
#include "stepwise/trace_codec.hpp"

#ifdef STEPWISE_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace stepwise {

void GeneratorConfig::check() const {
    if (max_retries < 1) throw ConfigError("max_retries must be at least 1");
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
    if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
}

nlohmann::json chat_request_body(const std::string& model, const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return {{"model", model}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
}

std::string parse_chat_response(const std::string& body) {
    auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw TransportError("completion response is not JSON");
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw TransportError("completion content is not a string");
        return content.get<std::string>();
    } catch (const nlohmann::json::exception&) {
        if (doc.contains("error")) throw TransportError("endpoint error: " + doc["error"].dump());
        throw TransportError("completion response lacks choices[0].message.content");
    }
}

HttpChatClient::HttpChatClient(GeneratorConfig config) : config_(std::move(config)) {
    config_.check();
    const std::string& url = config_.endpoint_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url needs a scheme: " + url);
    std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported scheme: " + scheme);
#ifndef STEPWISE_HAVE_OPENSSL
    if (scheme == "https") throw ConfigError("built without TLS support; https endpoints unavailable");
#endif
    auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/v1/chat/completions" : url.substr(path_start);
    if (origin_.size() <= scheme_end + 3) throw ConfigError("endpoint_url has no host: " + url);
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    // One client per call keeps concurrent requests independent.
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.credential.empty()) headers.emplace("Authorization", "Bearer " + config_.credential);

    auto body = chat_request_body(config_.model_name, request).dump();
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) throw TransportError("request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw TransportError("endpoint returned HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200));
    }
    return parse_chat_response(res->body);
}

ScriptedClient::ScriptedClient(std::map<std::string, std::vector<std::string>> script)
    : script_(std::move(script)) {}

std::map<std::string, std::vector<std::string>> ScriptedClient::read_script(const std::filesystem::path& path) {
    std::map<std::string, std::vector<std::string>> script;
    auto rows = read_jsonl(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string where = path.string() + " record " + std::to_string(i + 1);
        const auto& row = rows[i];
        if (!row.contains("problem_id") || !row["problem_id"].is_string()) {
            throw SchemaError(where + ": 'problem_id' must be a string");
        }
        if (!row.contains("responses") || !row["responses"].is_array()) {
            throw SchemaError(where + ": 'responses' must be an array of strings");
        }
        auto& list = script[row["problem_id"].get<std::string>()];
        for (const auto& r : row["responses"]) {
            if (!r.is_string()) throw SchemaError(where + ": responses must be strings");
            list.push_back(r.get<std::string>());
        }
    }
    return script;
}

std::string ScriptedClient::complete(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    ++calls_;
    auto it = script_.find(request.problem_id);
    if (it == script_.end()) throw TransportError("no scripted responses for problem '" + request.problem_id + "'");
    auto& pos = cursor_[request.problem_id];
    if (pos >= it->second.size()) {
        throw TransportError("scripted responses exhausted for problem '" + request.problem_id + "'");
    }
    return it->second[pos++];
}

std::size_t ScriptedClient::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

} // namespace stepwise
