#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "guire/action.hpp"
#include "guire/geometry.hpp"

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const std::string& env_prefix = {}) {
    const std::string cmd = (env_prefix.empty() ? std::string() : "env " + env_prefix + " ") +
                            std::string(GUIRE_BIN) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const fs::path kFixtures = fs::path(GUIRE_FIXTURES_DIR);

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("guire_cli_" + name);
}

}  // namespace

TEST_CASE("help output is golden, enumerating every flag with defaults") {
    const auto help = run_cli("--help-all");
    CHECK(help.exit_code == 0);
    CHECK(help.output == slurp(kFixtures / "help_golden.txt"));
    // spot checks that defaults are visible
    CHECK(help.output.find("--max-steps") != std::string::npos);
    CHECK(help.output.find("15") != std::string::npos);
    CHECK(help.output.find("GUIRE_CONFIG") != std::string::npos);
}

TEST_CASE("exit codes: usage, input error, success") {
    CHECK(run_cli("").exit_code == 64);
    CHECK(run_cli("no-such-command").exit_code == 64);
    CHECK(run_cli("eval-nav --policy martian --runs 1").exit_code == 64);
    CHECK(run_cli("reward-check --candidates /nonexistent.jsonl --gt /nonexistent.jsonl")
              .exit_code == 2);
    CHECK(run_cli("eval-nav --env /nonexistent.json").exit_code == 2);
    CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("schema violations exit 2 with line diagnostics") {
    const auto bad = temp_path("bad_candidates.jsonl");
    {
        std::ofstream out(bad);
        out << R"x({"schema_version": "wrong.v1", "id": "x", "text": "Action: press_enter()"})x"
            << "\n";
    }
    const auto result = run_cli("reward-check --candidates " + bad.string() + " --gt " +
                                (kFixtures / "reward_gt.jsonl").string());
    CHECK(result.exit_code == 2);
    CHECK(result.output.find(":1") != std::string::npos);  // line number reported
    fs::remove(bad);
}

TEST_CASE("reward-check reproduces the golden report byte for byte") {
    const auto out = temp_path("reward_report.txt");
    const auto result = run_cli("reward-check --candidates " +
                                (kFixtures / "reward_candidates.jsonl").string() + " --gt " +
                                (kFixtures / "reward_gt.jsonl").string() +
                                " --mode dense --lambda 0.5 --out " + out.string());
    CHECK(result.exit_code == 0);
    CHECK(slurp(out) == slurp(kFixtures / "reward_report_golden.txt"));
    fs::remove(out);
}

TEST_CASE("reward-check with lambda zero gives dense 1 on any type match") {
    const auto result = run_cli("reward-check --candidates " +
                                (kFixtures / "reward_candidates.jsonl").string() + " --gt " +
                                (kFixtures / "reward_gt.jsonl").string() +
                                " --mode dense --lambda 0");
    CHECK(result.exit_code == 0);
    // c05 sat exactly on the clamp boundary under lambda=0.5; with lambda=0 it is 1
    CHECK(result.output.find("id=c05 f_type=1 f_param=1 total=2") != std::string::npos);
}

TEST_CASE("empty reward-check input reports zero records and exits 0") {
    const auto empty = temp_path("empty.jsonl");
    {
        std::ofstream out(empty);
    }
    const auto result = run_cli("reward-check --candidates " + empty.string() + " --gt " +
                                empty.string());
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("records=0 mean_total=0") != std::string::npos);
    fs::remove(empty);
}

TEST_CASE("train-ground is deterministic per seed and exits 3 on numeric blowup") {
    const auto curve_a = temp_path("curve_a.jsonl");
    const auto curve_b = temp_path("curve_b.jsonl");
    const auto a = run_cli("train-ground --steps 60 --seed 11 --out " + curve_a.string());
    const auto b = run_cli("train-ground --steps 60 --seed 11 --out " + curve_b.string());
    CHECK(a.exit_code == 0);
    // identical summaries up to the output path, identical curve files
    CHECK(a.output.substr(0, a.output.find(" -> ")) ==
          b.output.substr(0, b.output.find(" -> ")));
    CHECK(slurp(curve_a) == slurp(curve_b));

    // curve lines carry the step-stats fields
    std::istringstream lines(slurp(curve_a));
    std::string line;
    size_t count = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("step"));
        CHECK(j.contains("mean_reward"));
        CHECK(j.contains("kept_groups"));
        CHECK(j.contains("dropped_groups"));
        CHECK(j.contains("grad_norm"));
        ++count;
    }
    CHECK(count == 60);
    fs::remove(curve_a);
    fs::remove(curve_b);

    CHECK(run_cli("train-ground --steps 50 --seed 1 --lr 1e308").exit_code == 3);
}

TEST_CASE("train-ground defaults reach high containment from a uniform start") {
    const auto result = run_cli("train-ground --grid 8 --steps 500 --seed 1 --m-full 8 --m-crop 4");
    CHECK(result.exit_code == 0);
    const auto at = result.output.find("final_containment=");
    REQUIRE(at != std::string::npos);
    const double final_containment = std::stod(result.output.substr(at + 18));
    CHECK(final_containment >= 0.9);
}

TEST_CASE("eval-nav oracle and random behave as expected over five runs") {
    const auto oracle = run_cli("eval-nav --policy oracle --max-steps 15 --runs 5 --seed 0");
    CHECK(oracle.exit_code == 0);
    CHECK(oracle.output.find("mean=1") != std::string::npos);

    const auto random = run_cli("eval-nav --policy random --max-steps 15 --runs 5 --seed 0");
    CHECK(random.exit_code == 0);

    const auto again = run_cli("eval-nav --policy random --max-steps 15 --runs 5 --seed 0");
    CHECK(random.output == again.output);
}

TEST_CASE("eval-nav loads an env file and dumps reparseable records") {
    const auto env_path = temp_path("env.json");
    const auto dump = temp_path("nav_dump.jsonl");
    CHECK(run_cli("dump-env --out " + env_path.string()).exit_code == 0);
    const auto result = run_cli("eval-nav --env " + env_path.string() +
                                " --policy oracle --runs 1 --dump-records " + dump.string());
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("mean=1") != std::string::npos);

    std::istringstream lines(slurp(dump));
    std::string line;
    size_t records = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("schema_version") == "nav_record.v1");
        const auto cand = guire::parse_action(j.at("action_text").get<std::string>());
        CHECK(guire::ok(cand));
        ++records;
    }
    CHECK(records >= 20);
    fs::remove(env_path);
    fs::remove(dump);
}

TEST_CASE("rollout emits kept records and a drop log") {
    const auto out = temp_path("rollout.jsonl");
    const auto drops = temp_path("drops.jsonl");
    const auto result = run_cli("rollout --env bundled --retry-budget 1 --perturb --out " +
                                out.string() + " --drop-log " + drops.string());
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("kept=") != std::string::npos);

    std::istringstream lines(slurp(out));
    std::string line;
    size_t records = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("schema_version") == "nav_record.v1");
        ++records;
    }
    CHECK(records >= 20);
    fs::remove(out);
    fs::remove(drops);
}

TEST_CASE("unify output keeps the point == bbox-center invariant") {
    const auto out = temp_path("unified.jsonl");
    const auto result = run_cli("unify --in " + (kFixtures / "source_records.jsonl").string() +
                                " --out " + out.string());
    CHECK(result.exit_code == 0);

    std::istringstream lines(slurp(out));
    std::string line;
    size_t records = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("schema_version") == "unified_grounding.v1");
        if (!j.at("bbox").is_null()) {
            const auto& b = j.at("bbox");
            const guire::Point center = guire::bbox_center(
                guire::BBox{b[0].get<int64_t>(), b[1].get<int64_t>(), b[2].get<int64_t>(),
                            b[3].get<int64_t>()});
            CHECK(j.at("point")[0].get<int64_t>() == center.x);
            CHECK(j.at("point")[1].get<int64_t>() == center.y);
        }
        ++records;
    }
    CHECK(records == 4);
    fs::remove(out);
}

TEST_CASE("compose produces schema-valid composite records") {
    const auto out = temp_path("composites.jsonl");
    const auto result = run_cli("compose --in " + (kFixtures / "source_records.jsonl").string() +
                                " --rows 2 --cols 2 --out " + out.string());
    CHECK(result.exit_code == 0);

    std::istringstream lines(slurp(out));
    std::string line;
    REQUIRE(std::getline(lines, line));
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("schema_version") == "composite.v1");
    CHECK(j.at("cells").size() == 4);
    CHECK(j.at("annotations").size() == 4);
    CHECK(j.at("image").is_null());  // fixture refs are not readable
    fs::remove(out);
}

TEST_CASE("mix interleaves streams per weights and writes a manifest") {
    const auto nav = temp_path("nav_in.jsonl");
    const auto ground = temp_path("ground_in.jsonl");
    {
        std::ofstream n(nav), g(ground);
        for (int i = 0; i < 400; ++i) {
            n << R"({"schema_version": "nav_record.v1", "i": )" << i << "}\n";
            g << R"({"schema_version": "unified_grounding.v1", "i": )" << i << "}\n";
        }
    }
    const auto out = temp_path("mixture.jsonl");
    const auto manifest = temp_path("manifest.jsonl");
    const auto result = run_cli("mix --in nav=" + nav.string() + " --in ground=" +
                                ground.string() + " --weight nav=1 --weight ground=1" +
                                " --seed 5 --n 500 --out " + out.string() + " --manifest " +
                                manifest.string());
    CHECK(result.exit_code == 0);

    const auto mj = nlohmann::json::parse(slurp(manifest));
    CHECK(mj.at("schema_version") == "mixture_manifest.v1");
    CHECK(mj.at("n") == 500);
    const int nav_count = mj.at("counts").at("nav").get<int>();
    const int ground_count = mj.at("counts").at("ground").get<int>();
    CHECK(nav_count + ground_count == 500);
    CHECK(nav_count > 180);
    CHECK(ground_count > 180);
    for (const auto& p : {nav, ground, out, manifest}) fs::remove(p);
}

TEST_CASE("config file fills defaults and flags override it") {
    const auto cfg = temp_path("config.ini");
    {
        std::ofstream out(cfg);
        out << "[eval-nav]\nruns=2\nmax-steps=9\n";
    }
    // config applies when the flag is absent
    const auto from_config =
        run_cli("--config " + cfg.string() + " eval-nav --policy oracle --seed 0");
    CHECK(from_config.exit_code == 0);
    CHECK(from_config.output.find("runs=2") != std::string::npos);

    // a flag wins over the config value
    const auto flag_wins =
        run_cli("--config " + cfg.string() + " eval-nav --policy oracle --runs 3 --seed 0");
    CHECK(flag_wins.exit_code == 0);
    CHECK(flag_wins.output.find("runs=3") != std::string::npos);

    // GUIRE_CONFIG env var names the config file
    const auto via_env =
        run_cli("eval-nav --policy oracle --seed 0", "GUIRE_CONFIG=" + cfg.string());
    CHECK(via_env.exit_code == 0);
    CHECK(via_env.output.find("runs=2") != std::string::npos);

    // an explicit --config flag beats the env var
    const auto cfg2 = temp_path("config2.ini");
    {
        std::ofstream out(cfg2);
        out << "[eval-nav]\nruns=4\n";
    }
    const auto flag_over_env = run_cli("--config " + cfg2.string() +
                                           " eval-nav --policy oracle --seed 0",
                                       "GUIRE_CONFIG=" + cfg.string());
    CHECK(flag_over_env.exit_code == 0);
    CHECK(flag_over_env.output.find("runs=4") != std::string::npos);
    fs::remove(cfg);
    fs::remove(cfg2);
}
