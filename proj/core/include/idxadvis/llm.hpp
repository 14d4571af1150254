#pragma once

#include "idxadvis/catalog.hpp"
#include "idxadvis/index.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace idxadvis {

struct ChatRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.6;
    std::size_t n_samples = 8;
    /// Context budget in tokens; prompts are trimmed to 3/4 of it.
    std::size_t max_tokens = 16384;

    /// Stable 64-bit digest of the two texts (FNV-1a).
    std::uint64_t digest() const;
};

class LLMBackend {
public:
    virtual ~LLMBackend() = default;
    virtual std::string name() const = 0;
    /// Returns request.n_samples completions. Throws LLMError.
    virtual std::vector<std::string> complete(const ChatRequest& request) = 0;
};

/// Validates the request, calls the backend and checks the answer count.
/// Throws EmptyCompletion when every completion is blank.
std::vector<std::string> chat(LLMBackend& backend, const ChatRequest& request);

/// Offline stand-in for a chat model. Completions are a pure function of
/// (seed, request digest, sample index). Advising prompts get CREATE
/// statements on the highest-scoring filter/join columns with per-sample
/// jitter; workload-generation prompts get template-instantiated queries.
class MockLLM final : public LLMBackend {
public:
    explicit MockLLM(std::uint64_t seed = 0) : seed_(seed) {}
    std::string name() const override { return "mock"; }
    std::vector<std::string> complete(const ChatRequest& request) override;

private:
    std::uint64_t seed_;
};

/// Chat-completions client: POST {model, messages, temperature, n}.
class HttpLLM final : public LLMBackend {
public:
    /// `endpoint` like "https://api.openai.com/v1/chat/completions".
    HttpLLM(std::string endpoint, std::string model, std::string token, int timeout_s = 120);
    std::string name() const override { return "http:" + model_; }
    std::vector<std::string> complete(const ChatRequest& request) override;

    /// Body of the request sent for `request`.
    std::string request_body(const ChatRequest& request, std::size_t n) const;
    /// Message contents of a chat-completions response. Throws LLMError.
    static std::vector<std::string> parse_response(const std::string& body);

private:
    std::string scheme_host_;
    std::string path_;
    std::string model_;
    std::string token_;
    int timeout_s_;
};

/// One DDL statement as written, before catalog resolution.
struct RawDdl {
    ActionKind kind = ActionKind::Create;
    std::string name;  // empty for unnamed CREATE
    std::string table;
    std::vector<std::string> columns;  // empty when a key part is an expression
    bool malformed = false;
};

/// Finds CREATE INDEX / DROP INDEX statements anywhere in free text.
std::vector<RawDdl> extract_ddl(const std::string& text);

struct ParsedActions {
    std::vector<IndexAction> actions;
    std::size_t warnings = 0;
};

/// Case-insensitive extraction of index actions, validated against the
/// catalog. DROP names are matched against `existing` first, then decoded
/// through the canonical "<table>_<cols>_idx" scheme. Invalid statements
/// are skipped and counted; duplicates keep their first occurrence.
ParsedActions parse_actions(const std::string& text, const Catalog& catalog,
                            const IndexSet& existing = {});

/// Decodes a canonical index name; nullopt when no table/column split fits.
std::optional<IndexDef> decode_index_name(const std::string& name, const Catalog& catalog);

}  // namespace idxadvis
