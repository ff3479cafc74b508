#include "cbr/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cbr/errors.hpp"

namespace cbr {

using nlohmann::json;

namespace {

const json* resolve_path(const json& root, const std::string& dotted) {
    const json* cur = &root;
    size_t pos = 0;
    while (pos <= dotted.size()) {
        size_t dot = dotted.find('.', pos);
        const std::string seg =
            dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (cur->is_array()) {
            size_t idx = 0;
            try {
                idx = std::stoul(seg);
            } catch (...) {
                return nullptr;
            }
            if (idx >= cur->size()) return nullptr;
            cur = &(*cur)[idx];
        } else if (cur->is_object()) {
            auto it = cur->find(seg);
            if (it == cur->end()) return nullptr;
            cur = &*it;
        } else {
            return nullptr;
        }
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

// POST with retry and exponential backoff on transport failure.
// attempts = max_retries + 1.
json post_json(const GatewayConfig& cfg, const std::string& path, const json& body) {
    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000LL);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);

    std::string last_err;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            const int delay = cfg.backoff_base_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res) {
            last_err = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_err = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw gateway_error("ServiceError", "endpoint " + path + " returned status " +
                                                    std::to_string(res->status));
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw gateway_error("MalformedResponse",
                                std::string("response is not valid JSON: ") + e.what());
        }
    }
    throw gateway_error("TransportError", "POST " + path + " failed after " +
                                              std::to_string(cfg.max_retries + 1) +
                                              " attempts: " + last_err);
}

class HttpChatClient : public ChatClient {
public:
    HttpChatClient(GatewayConfig cfg, EndpointProfile profile)
        : cfg_(std::move(cfg)), profile_(std::move(profile)) {}

    std::string complete_chat(const ChatRequest& req) override {
        json messages = json::array();
        for (const auto& m : req.messages) {
            messages.push_back({{"role", m.role}, {"content", m.content}});
        }
        const json body{{"model", req.model_id},
                        {"messages", messages},
                        {"temperature", req.temperature},
                        {"max_tokens", req.max_tokens}};
        const json resp = post_json(cfg_, profile_.chat_path, body);
        const json* text = resolve_path(resp, profile_.chat_text_field);
        if (!text || !text->is_string()) {
            throw gateway_error("MalformedResponse",
                                "no text at '" + profile_.chat_text_field + "'");
        }
        return text->get<std::string>();
    }

private:
    GatewayConfig cfg_;
    EndpointProfile profile_;
};

class HttpEmbedClient : public EmbedClient {
public:
    HttpEmbedClient(GatewayConfig cfg, EndpointProfile profile)
        : cfg_(std::move(cfg)), profile_(std::move(profile)) {}

    std::vector<double> embed_text(const EmbeddingRequest& req) override {
        if (req.input.empty()) {
            throw usage_error("EmptyInput", "embedding input must be nonempty");
        }
        const json body{{"model", req.model_id}, {"input", req.input}};
        const json resp = post_json(cfg_, profile_.embed_path, body);
        const json* vec = resolve_path(resp, profile_.embed_vector_field);
        if (!vec || !vec->is_array()) {
            throw gateway_error("MalformedResponse",
                                "no vector at '" + profile_.embed_vector_field + "'");
        }
        auto v = vec->get<std::vector<double>>();
        if (v.empty()) throw gateway_error("EmptyVector", "service returned an empty vector");
        return l2_normalize(std::move(v));
    }

private:
    GatewayConfig cfg_;
    EndpointProfile profile_;
};

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class MockEmbedClient : public EmbedClient {
public:
    MockEmbedClient(size_t dim, uint64_t seed) : dim_(dim), seed_(seed) {}

    std::vector<double> embed_text(const EmbeddingRequest& req) override {
        if (req.input.empty()) {
            throw usage_error("EmptyInput", "embedding input must be nonempty");
        }
        uint64_t h = seed_;
        for (unsigned char c : req.model_id) h = splitmix64(h ^ c);
        h = splitmix64(h ^ 0x1fULL);
        for (unsigned char c : req.input) h = splitmix64(h ^ c);

        std::vector<double> v(dim_);
        uint64_t state = h;
        for (size_t i = 0; i < dim_; ++i) {
            state = splitmix64(state);
            // map to (-1, 1)
            v[i] = static_cast<double>(static_cast<int64_t>(state)) /
                   static_cast<double>(INT64_MAX);
        }
        return l2_normalize(std::move(v));
    }

private:
    size_t dim_;
    uint64_t seed_;
};

class ScriptedChatClient : public ChatClient {
public:
    ScriptedChatClient(std::map<std::string, std::string> script, std::string fallback)
        : script_(std::move(script)), fallback_(std::move(fallback)) {}

    std::string complete_chat(const ChatRequest& req) override {
        std::string user_text;
        for (const auto& m : req.messages) {
            if (m.role == "user") user_text += m.content;
        }
        for (const auto& [key, response] : script_) {
            if (user_text.find(key) != std::string::npos) return response;
        }
        return fallback_;
    }

private:
    std::map<std::string, std::string> script_;
    std::string fallback_;
};

}  // namespace

std::unique_ptr<ChatClient> make_http_chat_client(GatewayConfig cfg, EndpointProfile profile) {
    return std::make_unique<HttpChatClient>(std::move(cfg), std::move(profile));
}

std::unique_ptr<EmbedClient> make_http_embed_client(GatewayConfig cfg, EndpointProfile profile) {
    return std::make_unique<HttpEmbedClient>(std::move(cfg), std::move(profile));
}

std::unique_ptr<EmbedClient> make_mock_embed_client(size_t dim, uint64_t seed) {
    return std::make_unique<MockEmbedClient>(dim, seed);
}

std::unique_ptr<ChatClient> make_scripted_chat_client(std::map<std::string, std::string> script,
                                                      std::string fallback) {
    return std::make_unique<ScriptedChatClient>(std::move(script), std::move(fallback));
}

std::unique_ptr<ChatClient> load_scripted_chat_client(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("IoError", "cannot open chat script: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw data_error("ParseError", std::string("chat script: ") + e.what());
    }
    std::map<std::string, std::string> script;
    if (j.contains("responses")) {
        for (auto& [k, v] : j["responses"].items()) script[k] = v.get<std::string>();
    }
    return make_scripted_chat_client(std::move(script), j.value("fallback", ""));
}

double l2_norm(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

std::vector<double> l2_normalize(std::vector<double> v) {
    const double norm = l2_norm(v);
    if (norm == 0.0) throw data_error("ZeroVector", "cannot normalize a zero vector");
    for (double& x : v) x /= norm;
    return v;
}

namespace {

// First balanced top-level {...} span after removing ``` fence lines.
std::string first_object_span(const std::string& raw) {
    std::string text;
    text.reserve(raw.size());
    size_t pos = 0;
    while (pos < raw.size()) {
        size_t eol = raw.find('\n', pos);
        if (eol == std::string::npos) eol = raw.size();
        std::string_view line(raw.data() + pos, eol - pos);
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos ||
            line.substr(first, 3) != "```") {
            text.append(line);
            text.push_back('\n');
        }
        pos = eol + 1;
    }

    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    size_t start = std::string::npos;
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"' && depth > 0) {
            in_string = true;
        } else if (c == '{') {
            if (depth == 0) start = i;
            ++depth;
        } else if (c == '}') {
            if (depth > 0 && --depth == 0) {
                return text.substr(start, i - start + 1);
            }
        }
    }
    throw data_error("NoObjectFound", "no balanced JSON object in model output");
}

std::string require_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw data_error("MissingField", std::string("missing field: ") + key);
    }
    if (it->is_string()) return it->get<std::string>();
    return it->dump();
}

}  // namespace

Decision extract_decision(const std::string& raw, const std::string& event_id,
                          const RunMeta& meta) {
    const std::string span = first_object_span(raw);
    json obj;
    try {
        obj = json::parse(span);
    } catch (const json::exception& e) {
        throw data_error("NoObjectFound",
                         std::string("candidate object is not valid JSON: ") + e.what());
    }

    Decision d;
    d.event_id = event_id;
    d.road_context = require_string(obj, "road_context");
    d.other_car_position = require_string(obj, "other_car_position");
    d.other_car_action = require_string(obj, "other_car_action");
    d.event_context = require_string(obj, "event_context");
    d.ego_car_evasive_maneuver =
        parse_maneuver(require_string(obj, "ego_car_evasive_maneuver"));
    d.ego_car_maneuver_justification = require_string(obj, "ego_car_maneuver_justification");
    d.raw_response = raw;
    d.meta = meta;
    return d;
}

}  // namespace cbr
