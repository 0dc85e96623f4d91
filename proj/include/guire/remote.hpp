#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "guire/policy.hpp"

namespace guire {

// Bridge to a real model behind an HTTP endpoint. One POST per generate call:
//   request:  {"instruction": str, "history": [str], "image_b64": str|null,
//              "elements": [{"id": str, "bbox": [4 ints], "label": str}]|null,
//              "n": int, "temperature": float}
//   response: {"outputs": [str]}  -- candidate text format
// Transport failures surface as RemoteError; outputs are never fabricated.

enum class RemoteErrorKind { timeout, bad_status, schema_error, transport };

struct RemoteError : std::runtime_error {
    RemoteErrorKind kind;
    RemoteError(RemoteErrorKind k, const std::string& what)
        : std::runtime_error(what), kind(k) {}
};

struct RemoteConfig {
    std::string endpoint;     // e.g. "http://127.0.0.1:8711"
    std::string path = "/generate";
    int timeout_ms = 5000;
    int max_retries = 2;       // additional attempts after the first
    int backoff_initial_ms = 50;  // doubled per retry
};

// Resolves the endpoint with flag-over-env precedence: a non-empty flag value
// wins, otherwise GUIRE_ENDPOINT, otherwise nullopt.
std::optional<std::string> resolve_endpoint(const std::string& flag_value);

class RemotePolicy : public Policy {
public:
    explicit RemotePolicy(RemoteConfig cfg) : cfg_(std::move(cfg)) {}

    std::vector<std::string> generate(const Observation& obs, int n, double temperature) override;

    const RemoteConfig& config() const { return cfg_; }

private:
    RemoteConfig cfg_;
};

}  // namespace guire
