#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "guire/policy.hpp"
#include "guire/remote.hpp"

using namespace guire;

namespace {

Observation image_obs(int64_t w, int64_t h) {
    Observation obs;
    ImageScreenView view;
    view.image_ref = "img";
    view.dims = ScreenDims{w, h};
    obs.screen = view;
    obs.instruction = "find the target";
    return obs;
}

std::optional<Point> point_of(const std::string& text) {
    auto cand = extract_candidate(text);
    if (!ok(cand)) return std::nullopt;
    return location_of(value(cand).action);
}

}  // namespace

TEST_CASE("scripted oracle replays and errors on unknown screens") {
    std::map<ScriptedOracle::ScriptKey, std::string> scripts;
    scripts[{"goal", "home"}] = "Action: tap(x=1, y=2)";
    ScriptedOracle oracle(scripts);

    Observation obs;
    ElementsScreenView view;
    view.screen_id = "home";
    view.dims = ScreenDims{100, 100};
    obs.screen = view;
    obs.instruction = "goal";

    const auto outs = oracle.generate(obs, 3, 0.7);
    REQUIRE(outs.size() == 3);
    CHECK(outs[0] == outs[1]);
    CHECK(outs[1] == outs[2]);
    CHECK(outs[0] == "Action: tap(x=1, y=2)");

    view.screen_id = "unknown";
    obs.screen = view;
    CHECK_THROWS_AS(oracle.generate(obs, 1, 0.7), MissingScriptError);
}

TEST_CASE("uniform random tap frequency matches the area ratio") {
    UniformRandomPolicy policy(99);
    const Observation obs = image_obs(1000, 800);
    const BBox target{100, 100, 299, 259};  // 200 x 160 inclusive lattice
    const double p = (200.0 * 160.0) / (1000.0 * 800.0);

    const int n = 100000;
    int hits = 0;
    for (const auto& text : policy.generate(obs, n, 1.0)) {
        const auto pt = point_of(text);
        REQUIRE(pt.has_value());
        hits += contains(target, *pt) ? 1 : 0;
    }
    const double freq = static_cast<double>(hits) / n;
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(freq - p) <= 3 * sigma);
}

TEST_CASE("uniform random stays in view and is deterministic per seed") {
    const Observation obs = image_obs(640, 480);
    UniformRandomPolicy a(7), b(7), c(8);
    const auto ta = a.generate(obs, 200, 1.0);
    const auto tb = b.generate(obs, 200, 1.0);
    const auto tc = c.generate(obs, 200, 1.0);
    CHECK(ta == tb);
    CHECK(ta != tc);
    for (const auto& text : ta) {
        const auto pt = point_of(text).value();
        CHECK(in_screen(ScreenDims{640, 480}, pt));
    }
}

TEST_CASE("noisy grounder scales noise with the view and clamps into it") {
    NoisyGrounderConfig cfg;
    cfg.gt_center = Point{500, 300};
    cfg.sigma_factor = 0.05;
    cfg.seed = 3;
    NoisyGrounder policy(cfg);

    const Observation full = image_obs(2000, 1200);
    double mean_err_full = 0.0;
    const int n = 3000;
    for (const auto& text : policy.generate(full, n, 1.0)) {
        const auto pt = point_of(text).value();
        CHECK(in_screen(ScreenDims{2000, 1200}, pt));
        mean_err_full += std::abs(static_cast<double>(pt.x - 500));
    }
    mean_err_full /= n;
    // sigma = 100 on the full view; gaussian mean abs deviation ~ 79.8
    CHECK(mean_err_full > 60.0);
    CHECK(mean_err_full < 100.0);

    Observation crop = full;
    auto& img = std::get<ImageScreenView>(crop.screen);
    img.window = CropWindow{Point{400, 200}, ScreenDims{400, 240}};
    img.dims = img.window->dims;
    double mean_err_crop = 0.0;
    for (const auto& text : policy.generate(crop, n, 1.0)) {
        const auto pt = point_of(text).value();
        CHECK(in_screen(ScreenDims{400, 240}, pt));
        mean_err_crop += std::abs(static_cast<double>(pt.x - 100));  // 500 - 400
    }
    mean_err_crop /= n;
    CHECK(mean_err_crop < mean_err_full / 2);  // sigma shrank 100 -> 20
}

TEST_CASE("grid softmax distribution sums to one at any temperature") {
    for (double temp : {0.25, 1.0, 4.0}) {
        GridSoftmaxConfig cfg;
        cfg.grid = 6;
        cfg.screen = ScreenDims{600, 600};
        cfg.temperature = temp;
        cfg.seed = 1;
        GridSoftmaxPolicy policy(cfg);
        std::mt19937_64 rng(17);
        std::vector<double> params(policy.param_count());
        for (double& p : params) p = (static_cast<double>(rng() % 1000) - 500.0) / 100.0;
        policy.set_parameters(params);
        const auto dist = policy.full_distribution();
        double sum = 0.0;
        for (double v : dist) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("grid softmax crop masking keeps samples inside the window") {
    GridSoftmaxConfig cfg;
    cfg.grid = 8;
    cfg.screen = ScreenDims{1024, 1024};
    cfg.seed = 5;
    GridSoftmaxPolicy policy(cfg);

    Observation crop = image_obs(1024, 1024);
    auto& img = std::get<ImageScreenView>(crop.screen);
    img.window = CropWindow{Point{256, 256}, ScreenDims{512, 384}};
    img.dims = img.window->dims;

    for (const auto& text : policy.generate(crop, 64, 1.0)) {
        const auto local = point_of(text).value();
        const Point full = from_crop_coords(*img.window, local);
        CHECK(window_contains(*img.window, full));
        // emitted points are cell centers of the full-screen grid
        bool is_center = false;
        for (int idx = 0; idx < 64; ++idx) is_center |= (policy.cell_center(idx) == full);
        CHECK(is_center);
    }
}

TEST_CASE("zoom-in inference remaps the refined point exactly") {
    NoisyGrounderConfig cfg;
    cfg.gt_center = Point{1200, 700};
    cfg.sigma_factor = 0.0;  // oracle: no noise
    NoisyGrounder oracle(cfg);

    const Observation obs = image_obs(2000, 1200);
    const auto result = zoom_in_infer(oracle, obs, CropConfig{0.25, 200});
    REQUIRE(std::holds_alternative<ZoomInResult>(result));
    const auto& zoom = std::get<ZoomInResult>(result);
    CHECK(zoom.initial == Point{1200, 700});
    CHECK(zoom.refined == Point{1200, 700});
    CHECK(window_contains(zoom.crop, zoom.initial));
}

namespace {

class FixedTextPolicy : public Policy {
public:
    explicit FixedTextPolicy(std::string text) : text_(std::move(text)) {}
    std::vector<std::string> generate(const Observation&, int n, double) override {
        return std::vector<std::string>(static_cast<size_t>(n), text_);
    }

private:
    std::string text_;
};

}  // namespace

TEST_CASE("zoom-in reports non-location answers") {
    FixedTextPolicy wrong("Action: navigate_back()");
    const Observation obs = image_obs(800, 600);
    const auto result = zoom_in_infer(wrong, obs);
    REQUIRE(std::holds_alternative<ZoomError>(result));

    FixedTextPolicy garbage("no call here");
    const auto result2 = zoom_in_infer(garbage, obs);
    REQUIRE(std::holds_alternative<ZoomError>(result2));
}

// ---------------------------------------------------------------------------
// Remote client against a loopback stub

namespace {

struct StubServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};

    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server.Post("/generate", [this, handler](const httplib::Request& req,
                                                 httplib::Response& res) {
            ++requests;
            handler(req, res);
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubServer() {
        server.stop();
        thread.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("remote policy round trip, cardinality and error surfacing") {
    using nlohmann::json;

    StubServer echo([](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        REQUIRE(body.contains("instruction"));
        REQUIRE(body.contains("history"));
        REQUIRE(body.contains("n"));
        REQUIRE(body.contains("temperature"));
        const int n = body["n"].get<int>();
        json outputs = json::array();
        for (int i = 0; i < n; ++i) outputs.push_back("Action: tap(x=1, y=2)");
        res.set_content(json{{"outputs", outputs}}.dump(), "application/json");
    });

    RemoteConfig cfg;
    cfg.endpoint = echo.endpoint();
    RemotePolicy policy(cfg);

    const Observation obs = image_obs(100, 100);
    const auto outs = policy.generate(obs, 4, 0.5);
    REQUIRE(outs.size() == 4);
    auto cand = extract_candidate(outs[0]);
    REQUIRE(ok(cand));
    CHECK(value(cand).action == Action{ActionType::tap, Point{1, 2}});
    CHECK(echo.requests.load() == 1);

    StubServer failing([](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("boom", "text/plain");
    });
    RemoteConfig bad_cfg;
    bad_cfg.endpoint = failing.endpoint();
    RemotePolicy bad(bad_cfg);
    CHECK_THROWS_AS(bad.generate(obs, 1, 1.0), RemoteError);
    CHECK(failing.requests.load() == 1);  // a definite status is not retried

    StubServer short_reply([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"x({"outputs": ["Action: tap(x=1, y=2)"]})x", "application/json");
    });
    RemoteConfig short_cfg;
    short_cfg.endpoint = short_reply.endpoint();
    RemotePolicy shorted(short_cfg);
    CHECK_THROWS_AS(shorted.generate(obs, 3, 1.0), RemoteError);

    StubServer bad_schema([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"wrong": 1})", "application/json");
    });
    RemoteConfig schema_cfg;
    schema_cfg.endpoint = bad_schema.endpoint();
    RemotePolicy schema_policy(schema_cfg);
    CHECK_THROWS_AS(schema_policy.generate(obs, 1, 1.0), RemoteError);
}

TEST_CASE("remote policy surfaces unreachable endpoints within the retry budget") {
    RemoteConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9";  // nothing listens here
    cfg.timeout_ms = 200;
    cfg.max_retries = 2;
    cfg.backoff_initial_ms = 1;
    RemotePolicy policy(cfg);
    const Observation obs = image_obs(10, 10);
    CHECK_THROWS_AS(policy.generate(obs, 1, 1.0), RemoteError);
}

TEST_CASE("endpoint resolution prefers the flag over the env var") {
    setenv("GUIRE_ENDPOINT", "http://from-env:1", 1);
    CHECK(resolve_endpoint("http://from-flag:2") == "http://from-flag:2");
    CHECK(resolve_endpoint("") == "http://from-env:1");
    unsetenv("GUIRE_ENDPOINT");
    CHECK_FALSE(resolve_endpoint("").has_value());
}
