#include "guire/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace guire {

namespace {

using nlohmann::json;

json request_body(const Observation& obs, int n, double temperature) {
    json body;
    body["instruction"] = obs.instruction;
    body["history"] = obs.history;
    if (const auto* img = std::get_if<ImageScreenView>(&obs.screen)) {
        body["image_b64"] = img->image_ref.empty() ? json(nullptr) : json(img->image_ref);
        body["elements"] = nullptr;
    } else {
        const auto& view = std::get<ElementsScreenView>(obs.screen);
        body["image_b64"] = nullptr;
        json elements = json::array();
        for (const auto& e : view.elements) {
            elements.push_back({{"id", e.id},
                                {"bbox", {e.bbox.x_min, e.bbox.y_min, e.bbox.x_max, e.bbox.y_max}},
                                {"label", e.label}});
        }
        body["elements"] = elements;
    }
    body["n"] = n;
    body["temperature"] = temperature;
    return body;
}

}  // namespace

std::optional<std::string> resolve_endpoint(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("GUIRE_ENDPOINT"); env && *env) return std::string(env);
    return std::nullopt;
}

std::vector<std::string> RemotePolicy::generate(const Observation& obs, int n,
                                                double temperature) {
    const std::string body = request_body(obs, n, temperature).dump();

    httplib::Client client(cfg_.endpoint);
    client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
    client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);

    int backoff = cfg_.backoff_initial_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        auto res = client.Post(cfg_.path, body, "application/json");
        if (!res) {
            const auto err = res.error();
            last_error = httplib::to_string(err);
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write || err == httplib::Error::Connection) {
                continue;  // transient, retry within budget
            }
            throw RemoteError(RemoteErrorKind::transport, "transport failure: " + last_error);
        }
        if (res->status != 200)
            throw RemoteError(RemoteErrorKind::bad_status,
                              "endpoint returned status " + std::to_string(res->status));

        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("outputs") ||
            !parsed["outputs"].is_array())
            throw RemoteError(RemoteErrorKind::schema_error,
                              "response is not {\"outputs\": [..]}");
        std::vector<std::string> outputs;
        for (const auto& item : parsed["outputs"]) {
            if (!item.is_string())
                throw RemoteError(RemoteErrorKind::schema_error, "outputs must be strings");
            outputs.push_back(item.get<std::string>());
        }
        if (static_cast<int>(outputs.size()) != n)
            throw RemoteError(RemoteErrorKind::schema_error,
                              "expected " + std::to_string(n) + " outputs, got " +
                                  std::to_string(outputs.size()));
        return outputs;
    }
    throw RemoteError(RemoteErrorKind::timeout,
                      "retry budget exhausted: " + last_error);
}

}  // namespace guire
