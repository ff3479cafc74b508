#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cbr/taxonomy.hpp"

namespace cbr {

struct GatewayConfig {
    std::string base_url = "http://127.0.0.1:11434";
    int timeout_ms = 60000;
    int max_retries = 2;
    int backoff_base_ms = 250;
};

// Field locations in the remote service's request/response bodies. Defaults
// match the common chat-completions / embeddings shapes; dotted paths may use
// numeric segments for array indices ("choices.0.message.content").
struct EndpointProfile {
    std::string chat_path = "/v1/chat/completions";
    std::string embed_path = "/v1/embeddings";
    std::string chat_text_field = "choices.0.message.content";
    std::string embed_vector_field = "data.0.embedding";
};

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::string content;
};

struct ChatRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 2048;
};

struct EmbeddingRequest {
    std::string model_id;
    std::string input;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete_chat(const ChatRequest& req) = 0;
};

class EmbedClient {
public:
    virtual ~EmbedClient() = default;
    // Returned vectors are L2-normalized to unit length.
    virtual std::vector<double> embed_text(const EmbeddingRequest& req) = 0;
};

std::unique_ptr<ChatClient> make_http_chat_client(GatewayConfig cfg, EndpointProfile profile);
std::unique_ptr<EmbedClient> make_http_embed_client(GatewayConfig cfg, EndpointProfile profile);

// Deterministic embedder: a pure function of (model_id, input) producing a
// unit vector of the configured dimension via seeded hashing.
std::unique_ptr<EmbedClient> make_mock_embed_client(size_t dim, uint64_t seed = 0);

// Chat mock scripted by substring match on the user message. A script maps a
// key (typically an event id embedded in the prompt) to a canned response.
// Requests matching no key get `fallback`.
std::unique_ptr<ChatClient> make_scripted_chat_client(
    std::map<std::string, std::string> script, std::string fallback = "");

// Loads {"responses": {key: text}, "fallback": text} from a JSON file.
std::unique_ptr<ChatClient> load_scripted_chat_client(const std::string& path);

double l2_norm(const std::vector<double>& v);
std::vector<double> l2_normalize(std::vector<double> v);

// Locates the first balanced JSON object in raw model output (tolerating
// surrounding prose and ``` fences) and maps its six required keys onto a
// Decision. Throws Error(Data): NoObjectFound, MissingField, UnknownManeuver.
Decision extract_decision(const std::string& raw, const std::string& event_id,
                          const RunMeta& meta);

}  // namespace cbr
