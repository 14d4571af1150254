#include "idxadvis/llm.hpp"

#include "idxadvis/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <regex>

namespace idxadvis {

HttpLLM::HttpLLM(std::string endpoint, std::string model, std::string token, int timeout_s)
    : model_(std::move(model)), token_(std::move(token)), timeout_s_(timeout_s) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(endpoint, m, url_re)) throw ConfigError("bad LLM endpoint URL '" + endpoint + "'");
    scheme_host_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (to_lower(scheme_host_).rfind("https://", 0) == 0)
        throw ConfigError("this build has no HTTPS support; use an http:// endpoint");
#endif
}

std::string HttpLLM::request_body(const ChatRequest& request, std::size_t n) const {
    nlohmann::json body = {
        {"model", model_},
        {"messages",
         {{{"role", "system"}, {"content", request.system_text}}, {{"role", "user"}, {"content", request.user_text}}}},
        {"temperature", request.temperature},
        {"n", n},
    };
    return body.dump();
}

std::vector<std::string> HttpLLM::parse_response(const std::string& body) {
    std::vector<std::string> out;
    try {
        auto doc = nlohmann::json::parse(body);
        if (doc.contains("error")) throw LLMError("LLM endpoint error: " + doc["error"].dump());
        for (const auto& choice : doc.at("choices")) {
            const auto& content = choice.at("message").at("content");
            out.push_back(content.is_string() ? content.get<std::string>() : std::string{});
        }
    } catch (const nlohmann::json::exception& e) {
        throw LLMError(std::string("malformed chat-completions response: ") + e.what());
    }
    return out;
}

std::vector<std::string> HttpLLM::complete(const ChatRequest& request) {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(timeout_s_, 0);
    client.set_read_timeout(timeout_s_, 0);
    client.set_write_timeout(timeout_s_, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    std::vector<std::string> out;
    // some endpoints cap n, so keep asking for the remainder
    for (int attempt = 0; attempt < 4 && out.size() < request.n_samples; ++attempt) {
        std::size_t want = request.n_samples - out.size();
        auto res = client.Post(path_, headers, request_body(request, want), "application/json");
        if (!res) throw LLMError("LLM request failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw LLMError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 300));
        auto got = parse_response(res->body);
        if (got.empty()) break;
        for (auto& g : got)
            if (out.size() < request.n_samples) out.push_back(std::move(g));
    }
    return out;
}

}  // namespace idxadvis
