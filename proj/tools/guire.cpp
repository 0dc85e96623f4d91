#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "guire/datapipe.hpp"
#include "guire/envsim.hpp"
#include "guire/grpo.hpp"
#include "guire/policy.hpp"
#include "guire/remote.hpp"
#include "guire/rollout.hpp"
#include "guire/train.hpp"

namespace {

using guire::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// reward-check

guire::GroundTruth ground_truth_from_json(const json& j) {
    auto type = guire::action_type_from_name(j.at("action_type").get<std::string>());
    if (!type) throw guire::DatapipeError("ground truth: unknown action_type");
    guire::GroundTruth gt;
    gt.action_type = *type;
    const json& p = j.at("params");
    const std::string kind = p.at("kind").get<std::string>();
    if (kind == "none") {
        gt.params = std::monostate{};
    } else if (kind == "text") {
        gt.params = guire::TextParam{p.at("value").get<std::string>()};
    } else if (kind == "direction") {
        auto d = guire::direction_from_string(p.at("value").get<std::string>());
        if (!d) throw guire::DatapipeError("ground truth: bad direction");
        gt.params = *d;
    } else if (kind == "hotkeys") {
        guire::HotkeysParam keys;
        std::string cur;
        for (char c : p.at("value").get<std::string>()) {
            if (c == '+') {
                keys.keys.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        keys.keys.push_back(cur);
        gt.params = keys;
    } else if (kind == "app_name") {
        gt.params = guire::AppNameParam{p.at("value").get<std::string>()};
    } else if (kind == "reason") {
        gt.params = guire::ReasonParam{p.at("value").get<std::string>()};
    } else if (kind == "location") {
        const auto& b = p.at("bbox");
        gt.params = guire::LocationTruth{guire::BBox{b[0].get<int64_t>(), b[1].get<int64_t>(),
                                                     b[2].get<int64_t>(), b[3].get<int64_t>()}};
    } else {
        throw guire::DatapipeError("ground truth: unknown params kind " + kind);
    }
    guire::check_ground_truth(gt);
    return gt;
}

int cmd_reward_check(const std::string& candidates_path, const std::string& gt_path,
                     const std::string& mode, double lambda, const std::string& out_path) {
    guire::RewardConfig cfg;
    cfg.lambda = lambda;
    cfg.location_mode =
        mode == "dense" ? guire::LocationRewardMode::dense : guire::LocationRewardMode::sparse;

    const auto candidates = guire::read_jsonl(candidates_path, "candidate.v1");
    const auto truths = guire::read_jsonl(gt_path, "ground_truth.v1");
    if (candidates.records.size() != truths.records.size())
        throw guire::DatapipeError("candidate and ground-truth files differ in length");

    std::ostringstream report;
    double total_sum = 0.0;
    for (size_t i = 0; i < candidates.records.size(); ++i) {
        const json& cj = candidates.records[i];
        const std::string id = cj.value("id", std::to_string(i));
        const auto cand = guire::extract_candidate(cj.at("text").get<std::string>());
        const auto gt = ground_truth_from_json(truths.records[i]);
        const auto breakdown = guire::total_reward(cand, gt, cfg);
        total_sum += breakdown.total;
        report << "id=" << id << " f_type=" << breakdown.f_type
               << " f_param=" << fmt_double(breakdown.f_param)
               << " total=" << fmt_double(breakdown.total)
               << " parse_failed=" << (breakdown.parse_failed ? 1 : 0) << "\n";
    }
    const size_t n = candidates.records.size();
    const std::string mean =
        fmt_double(n == 0 ? 0.0 : total_sum / static_cast<double>(n));
    report << "records=" << n << " mean_total=" << mean << "\n";

    if (out_path.empty() || out_path == "-") {
        std::cout << report.str();
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw guire::DatapipeError("cannot write " + out_path);
        out << report.str();
        std::cout << "reward-check: " << n << " records, mean_total=" << mean << " -> "
                  << out_path << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train-ground

int cmd_train_ground(const guire::TrainGroundConfig& cfg, const std::string& out_path) {
    const auto result = guire::train_ground(cfg);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw guire::DatapipeError("cannot write " + out_path);
        for (const auto& rec : result.curve) {
            json j;
            j["step"] = rec.step;
            j["mean_reward"] = rec.mean_reward;
            j["kept_groups"] = rec.kept_groups;
            j["dropped_groups"] = rec.dropped_groups;
            j["grad_norm"] = rec.grad_norm;
            j["containment"] = rec.containment;
            out << j.dump() << "\n";
        }
    }
    std::cout << "train-ground: steps=" << result.curve.size()
              << " final_containment=" << fmt_double(result.final_containment)
              << (result.reached_step ? " reached_step=" + std::to_string(*result.reached_step)
                                      : std::string())
              << (out_path.empty() ? "" : " -> " + out_path) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval-nav

std::unique_ptr<guire::Environment> load_environment(const std::string& env_path) {
    if (env_path == "bundled")
        return std::make_unique<guire::Environment>(guire::bundled_env());
    return std::make_unique<guire::Environment>(guire::load_env_file(env_path));
}

int cmd_eval_nav(const std::string& env_path, const std::string& policy_kind, int max_steps,
                 int runs, uint64_t seed, const std::string& endpoint_flag,
                 const std::string& dump_path) {
    const auto env = load_environment(env_path);
    const auto& tasks = env->definition().tasks;
    if (tasks.empty()) throw guire::EnvError("environment defines no tasks");

    std::map<guire::ScriptedOracle::ScriptKey, std::string> scripts;
    if (policy_kind == "oracle") scripts = guire::make_oracle_scripts(*env, tasks);

    guire::PolicyFactory factory;
    if (policy_kind == "oracle") {
        factory = [&scripts](uint64_t) -> std::unique_ptr<guire::Policy> {
            return std::make_unique<guire::ScriptedOracle>(scripts);
        };
    } else if (policy_kind == "random") {
        factory = [](uint64_t run_seed) -> std::unique_ptr<guire::Policy> {
            return std::make_unique<guire::UniformRandomPolicy>(run_seed);
        };
    } else if (policy_kind == "remote") {
        const auto endpoint = guire::resolve_endpoint(endpoint_flag);
        if (!endpoint) throw UsageError("remote policy needs --endpoint or GUIRE_ENDPOINT");
        factory = [endpoint](uint64_t) -> std::unique_ptr<guire::Policy> {
            guire::RemoteConfig cfg;
            cfg.endpoint = *endpoint;
            return std::make_unique<guire::RemotePolicy>(cfg);
        };
    } else {
        throw UsageError("unknown policy kind: " + policy_kind);
    }

    guire::EvalConfig cfg;
    cfg.max_steps = max_steps;
    cfg.runs = runs;
    cfg.seed = seed;
    const auto report = guire::success_rate(factory, *env, tasks, cfg);

    if (!dump_path.empty()) {
        std::vector<json> records;
        auto policy = factory(seed);
        for (const auto& task : tasks) {
            const auto episode = guire::run_episode(*policy, *env, task, max_steps);
            for (const auto& rec :
                 guire::assemble_cot(*env, task, episode.trajectory, guire::CoTMode::short_cot))
                records.push_back(guire::to_json(rec));
        }
        guire::write_jsonl(dump_path, records);
    }

    std::ostringstream per_run;
    for (size_t i = 0; i < report.per_run.size(); ++i)
        per_run << (i ? "," : "") << fmt_double(report.per_run[i]);
    std::cout << "eval-nav: policy=" << policy_kind << " tasks=" << tasks.size()
              << " runs=" << runs << " per_run=[" << per_run.str()
              << "] mean=" << fmt_double(report.mean)
              << (dump_path.empty() ? "" : " -> " + dump_path) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// rollout

int cmd_rollout(const std::string& env_path, bool generate, int gen_per_level, uint64_t seed,
                int retry_budget, int max_steps, const std::string& cot_mode, bool perturb,
                double judge_threshold, const std::string& out_path,
                const std::string& drop_log_path) {
    const auto env = load_environment(env_path);
    std::vector<guire::Task> tasks;
    if (generate) {
        guire::CurriculumSpec spec;
        spec.levels = {{1, gen_per_level, 2, 2},
                       {2, gen_per_level, 4, 4},
                       {3, gen_per_level, 6, 8}};
        tasks = guire::generate_tasks(*env, spec, seed);
    } else {
        tasks = env->definition().tasks;
    }
    if (tasks.empty()) throw guire::EnvError("no tasks to roll out");

    guire::BfsPlanner planner;
    guire::LookupGrounder grounder;
    const auto judge = guire::default_judge();

    std::vector<guire::Trajectory> trajectories;
    std::vector<guire::Task> traj_tasks;
    for (const auto& task : tasks) {
        const auto result = guire::multi_agent_rollout(planner, grounder, judge, judge_threshold,
                                                       *env, task, retry_budget, max_steps);
        trajectories.push_back(result.final);
        traj_tasks.push_back(task);
        if (perturb && result.final.success) {
            try {
                trajectories.push_back(
                    guire::perturb_trajectory(*env, task, result.final, seed + 1));
                traj_tasks.push_back(task);
            } catch (const guire::NoRecoveryError&) {
                // unrecoverable perturbations are simply not emitted
            }
        }
    }

    const auto filtered = guire::judge_filter(trajectories, judge, judge_threshold);
    const guire::CoTMode mode =
        cot_mode == "long" ? guire::CoTMode::long_cot : guire::CoTMode::short_cot;

    std::map<std::string, const guire::Task*> task_by_id;
    for (size_t i = 0; i < traj_tasks.size(); ++i)
        task_by_id.emplace(traj_tasks[i].id, &traj_tasks[i]);
    std::vector<json> records;
    for (const auto& traj : filtered.kept)
        for (const auto& rec :
             guire::assemble_cot(*env, *task_by_id.at(traj.task_id), traj, mode))
            records.push_back(guire::to_json(rec));
    guire::write_jsonl(out_path, records);

    if (!drop_log_path.empty()) {
        std::vector<json> drops;
        for (const auto& d : filtered.drops) drops.push_back(guire::to_json(d));
        guire::write_jsonl(drop_log_path, drops);
    }

    std::cout << "rollout: tasks=" << tasks.size() << " trajectories=" << trajectories.size()
              << " kept=" << filtered.kept.size() << " dropped=" << filtered.drops.size()
              << " records=" << records.size() << " -> " << out_path << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// unify / compose / mix

guire::SourceRecord source_record_from_json(const json& j) {
    guire::SourceRecord r;
    r.image = j.at("image").get<std::string>();
    r.dims = guire::ScreenDims{j.at("width").get<int64_t>(), j.at("height").get<int64_t>()};
    r.instruction = j.at("instruction").get<std::string>();
    const json& t = j.at("target");
    const std::string type = t.at("type").get<std::string>();
    const auto& c = t.at("coords");
    if (type == "bbox") {
        r.target = guire::BBox{c[0].get<int64_t>(), c[1].get<int64_t>(), c[2].get<int64_t>(),
                               c[3].get<int64_t>()};
    } else if (type == "point") {
        r.target = guire::Point{c[0].get<int64_t>(), c[1].get<int64_t>()};
    } else {
        throw guire::DatapipeError("source record: unknown target type " + type);
    }
    const json& p = j.at("provenance");
    r.source = guire::SourceProvenance{p.at("dataset").get<std::string>(),
                                       p.at("platform").get<std::string>(),
                                       p.at("kind").get<std::string>()};
    return r;
}

int cmd_unify(const std::string& in_path, const std::string& out_path, bool skip_bad) {
    const auto input = guire::read_jsonl(
        in_path, "source_record.v1", skip_bad ? guire::OnBadLine::skip : guire::OnBadLine::fail);
    std::vector<json> out;
    size_t failed = 0;
    for (size_t i = 0; i < input.records.size(); ++i) {
        try {
            out.push_back(
                guire::to_json(guire::unify(source_record_from_json(input.records[i]))));
        } catch (const std::exception& e) {
            ++failed;
            if (!skip_bad)
                throw guire::DatapipeError(in_path + ": record " + std::to_string(i + 1) + ": " +
                                           e.what());
            std::cerr << "unify: skipping record " << (i + 1) << ": " << e.what() << "\n";
        }
    }
    guire::write_jsonl(out_path, out);
    std::cout << "unify: " << out.size() << " records unified, " << failed << " skipped, "
              << input.errors.size() << " malformed lines -> " << out_path << "\n";
    return kExitOk;
}

int cmd_compose(const std::string& in_path, int rows, int cols, const std::string& out_path,
                const std::string& image_dir) {
    const auto input = guire::read_jsonl(in_path, "source_record.v1");
    std::vector<guire::SourceRecord> records;
    for (const auto& j : input.records) records.push_back(source_record_from_json(j));

    const size_t per = static_cast<size_t>(rows) * static_cast<size_t>(cols);
    if (per == 0 || records.size() < per)
        throw guire::DatapipeError("compose: need at least rows*cols records");

    std::vector<json> out;
    size_t composites = 0;
    for (size_t at = 0; at + per <= records.size(); at += per) {
        guire::CompositeSpec spec;
        spec.rows = rows;
        spec.cols = cols;
        spec.cells.assign(records.begin() + static_cast<long>(at),
                          records.begin() + static_cast<long>(at + per));
        std::string image_out;
        if (!image_dir.empty())
            image_out = image_dir + "/composite_" + std::to_string(composites) + ".ppm";
        const auto result = guire::compose(spec, image_out);
        for (const auto& err : result.cell_errors)
            std::cerr << "compose: composite " << composites << ": " << err << "\n";
        out.push_back(guire::to_json(result));
        ++composites;
    }
    guire::write_jsonl(out_path, out);
    std::cout << "compose: " << composites << " composites (" << rows << "x" << cols << ") from "
              << records.size() << " records -> " << out_path << "\n";
    return kExitOk;
}

int cmd_mix(const std::vector<std::string>& inputs, const std::vector<std::string>& weight_args,
            uint64_t seed, size_t n, const std::string& out_path,
            const std::string& manifest_path) {
    auto split_kv = [](const std::string& arg) -> std::pair<std::string, std::string> {
        const size_t eq = arg.find('=');
        if (eq == std::string::npos) throw UsageError("expected tag=value, got: " + arg);
        return {arg.substr(0, eq), arg.substr(eq + 1)};
    };

    std::map<std::string, std::vector<json>> streams;
    for (const auto& arg : inputs) {
        const auto [tag, path] = split_kv(arg);
        std::ifstream in(path);
        if (!in) throw guire::DatapipeError("cannot open " + path);
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw guire::DatapipeError(path + ":" + std::to_string(line_no) +
                                           ": malformed JSON");
            streams[tag].push_back(std::move(j));
        }
    }

    guire::MixtureWeights weights;
    for (const auto& arg : weight_args) {
        const auto [tag, value] = split_kv(arg);
        weights.by_tag[tag] = std::stod(value);
    }

    const auto mixed = guire::sample_mixture(streams, weights, seed, n);
    std::vector<json> out;
    std::map<std::string, size_t> counts;
    for (const auto& rec : mixed) {
        json j = rec.record;
        j["mixture_tag"] = rec.tag;
        out.push_back(std::move(j));
        counts[rec.tag]++;
    }
    guire::write_jsonl(out_path, out);
    if (!manifest_path.empty())
        guire::write_jsonl(manifest_path, {guire::mixture_manifest(weights, seed, n, counts)});

    std::ostringstream summary;
    for (const auto& [tag, count] : counts) summary << " " << tag << "=" << count;
    std::cout << "mix: n=" << n << summary.str() << " -> " << out_path << "\n";
    return kExitOk;
}

int cmd_dump_env(const std::string& out_path) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw guire::DatapipeError("cannot write " + out_path);
    out << guire::env_to_json(guire::bundled_env());
    std::cout << "dump-env: bundled environment -> " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GUI-agent training and evaluation harness"};
    app.name("guire");
    app.set_help_all_flag("--help-all", "Print help for all subcommands");
    app.set_config("--config", "", "Key-value config file mirroring the flags")
        ->envname("GUIRE_CONFIG");
    app.require_subcommand(1);

    std::function<int()> run;

    auto* reward =
        app.add_subcommand("reward-check", "Score candidate outputs against ground truths");
    {
        auto candidates = std::make_shared<std::string>();
        auto gts = std::make_shared<std::string>();
        auto mode = std::make_shared<std::string>("sparse");
        auto lambda = std::make_shared<double>(0.5);
        auto out = std::make_shared<std::string>();
        reward->add_option("--candidates", *candidates, "candidate.v1 JSONL file")->required();
        reward->add_option("--gt", *gts, "ground_truth.v1 JSONL file")->required();
        reward->add_option("--mode", *mode, "Location reward mode: sparse|dense")
            ->check(CLI::IsMember({"sparse", "dense"}))
            ->capture_default_str();
        reward->add_option("--lambda", *lambda, "Dense reward decay factor")
            ->capture_default_str();
        reward->add_option("--out", *out, "Report file (default: stdout)");
        reward->callback([=, &run] {
            run = [=] { return cmd_reward_check(*candidates, *gts, *mode, *lambda, *out); };
        });
    }

    auto* train = app.add_subcommand("train-ground",
                                     "Toy GRPO grounding training with a grid-softmax policy");
    {
        auto cfg = std::make_shared<guire::TrainGroundConfig>();
        auto reward_mode = std::make_shared<std::string>("sparse");
        auto out = std::make_shared<std::string>();
        train->add_option("--grid", cfg->grid, "Grid cells per side")->capture_default_str();
        train->add_option("--steps", cfg->steps, "Training steps")->capture_default_str();
        train->add_option("--seed", cfg->seed, "Random seed")->capture_default_str();
        train->add_option("--m-full", cfg->m_full, "Full-image samples per group")
            ->capture_default_str();
        train->add_option("--m-crop", cfg->m_crop, "Zoomed-crop samples per group")
            ->capture_default_str();
        train->add_option("--lr", cfg->lr, "Learning rate")->capture_default_str();
        train->add_option("--reward", *reward_mode, "Reward mode: sparse|dense")
            ->check(CLI::IsMember({"sparse", "dense"}))
            ->capture_default_str();
        train->add_option("--lambda", cfg->lambda, "Dense reward decay factor")
            ->capture_default_str();
        train->add_option("--screen", cfg->screen_side, "Synthetic screen side in pixels")
            ->capture_default_str();
        train->add_option("--target-size", cfg->target_side, "Target box side in pixels")
            ->capture_default_str();
        train->add_option("--smooth-radius", cfg->smooth_radius,
                          "Kernel radius in cells (0 = tabular grid)")
            ->capture_default_str();
        train->add_option("--smooth-sigma", cfg->smooth_sigma, "Kernel width in cells")
            ->capture_default_str();
        train->add_option("--out", *out, "Learning-curve JSONL file");
        train->callback([=, &run] {
            run = [=] {
                guire::TrainGroundConfig final_cfg = *cfg;
                final_cfg.reward_mode = *reward_mode == "dense"
                                            ? guire::LocationRewardMode::dense
                                            : guire::LocationRewardMode::sparse;
                return cmd_train_ground(final_cfg, *out);
            };
        });
    }

    auto* eval = app.add_subcommand("eval-nav", "Navigation success-rate evaluation");
    {
        auto env_path = std::make_shared<std::string>("bundled");
        auto policy = std::make_shared<std::string>("oracle");
        auto max_steps = std::make_shared<int>(15);
        auto runs = std::make_shared<int>(5);
        auto seed = std::make_shared<uint64_t>(0);
        auto endpoint = std::make_shared<std::string>();
        auto dump = std::make_shared<std::string>();
        eval->add_option("--env", *env_path, "env.v1 JSON file, or 'bundled'")
            ->capture_default_str();
        eval->add_option("--policy", *policy, "Policy kind: oracle|random|remote")
            ->capture_default_str();
        eval->add_option("--max-steps", *max_steps, "Step budget per episode")
            ->capture_default_str();
        eval->add_option("--runs", *runs, "Independently seeded evaluation runs")
            ->capture_default_str();
        eval->add_option("--seed", *seed, "Base random seed")->capture_default_str();
        eval->add_option("--endpoint", *endpoint,
                         "Remote inference endpoint (overrides GUIRE_ENDPOINT)");
        eval->add_option("--dump-records", *dump, "Dump nav_record.v1 JSONL for one pass");
        eval->callback([=, &run] {
            run = [=] {
                return cmd_eval_nav(*env_path, *policy, *max_steps, *runs, *seed, *endpoint,
                                    *dump);
            };
        });
    }

    auto* rollout =
        app.add_subcommand("rollout", "Multi-agent synthetic rollouts with judge filtering");
    {
        auto env_path = std::make_shared<std::string>("bundled");
        auto generate = std::make_shared<bool>(false);
        auto per_level = std::make_shared<int>(4);
        auto seed = std::make_shared<uint64_t>(0);
        auto retry = std::make_shared<int>(1);
        auto max_steps = std::make_shared<int>(15);
        auto cot = std::make_shared<std::string>("short");
        auto perturb = std::make_shared<bool>(false);
        auto threshold = std::make_shared<double>(0.5);
        auto out = std::make_shared<std::string>("rollout_records.jsonl");
        auto drop_log = std::make_shared<std::string>();
        rollout->add_option("--env", *env_path, "env.v1 JSON file, or 'bundled'")
            ->capture_default_str();
        rollout->add_flag("--generate", *generate,
                          "Generate curriculum tasks instead of the env's task list");
        rollout->add_option("--per-level", *per_level, "Generated tasks per difficulty level")
            ->capture_default_str();
        rollout->add_option("--seed", *seed, "Random seed")->capture_default_str();
        rollout->add_option("--retry-budget", *retry, "Critic-feedback retries per task")
            ->capture_default_str();
        rollout->add_option("--max-steps", *max_steps, "Step budget per attempt")
            ->capture_default_str();
        rollout->add_option("--cot", *cot, "CoT mode: short|long")
            ->check(CLI::IsMember({"short", "long"}))
            ->capture_default_str();
        rollout->add_flag("--perturb", *perturb, "Also emit error-injected recovery variants");
        rollout->add_option("--judge-threshold", *threshold,
                            "Keep trajectories scoring >= this")
            ->capture_default_str();
        rollout->add_option("--out", *out, "nav_record.v1 JSONL shard")->capture_default_str();
        rollout->add_option("--drop-log", *drop_log, "drop_log.v1 JSONL file");
        rollout->callback([=, &run] {
            run = [=] {
                return cmd_rollout(*env_path, *generate, *per_level, *seed, *retry, *max_steps,
                                   *cot, *perturb, *threshold, *out, *drop_log);
            };
        });
    }

    auto* unify = app.add_subcommand("unify", "Normalize source annotations to center points");
    {
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>("unified.jsonl");
        auto skip = std::make_shared<bool>(false);
        unify->add_option("--in", *in, "source_record.v1 JSONL file")->required();
        unify->add_option("--out", *out, "unified_grounding.v1 JSONL shard")
            ->capture_default_str();
        unify->add_flag("--skip-bad", *skip, "Skip bad records instead of failing fast");
        unify->callback([=, &run] { run = [=] { return cmd_unify(*in, *out, *skip); }; });
    }

    auto* compose =
        app.add_subcommand("compose", "Pack source screenshots into composite records");
    {
        auto in = std::make_shared<std::string>();
        auto rows = std::make_shared<int>(2);
        auto cols = std::make_shared<int>(2);
        auto out = std::make_shared<std::string>("composites.jsonl");
        auto image_dir = std::make_shared<std::string>();
        compose->add_option("--in", *in, "source_record.v1 JSONL file")->required();
        compose->add_option("--rows", *rows, "Grid rows")->capture_default_str();
        compose->add_option("--cols", *cols, "Grid columns")->capture_default_str();
        compose->add_option("--out", *out, "composite.v1 JSONL shard")->capture_default_str();
        compose->add_option("--image-dir", *image_dir,
                            "Write composited PPM images into this directory");
        compose->callback([=, &run] {
            run = [=] { return cmd_compose(*in, *rows, *cols, *out, *image_dir); };
        });
    }

    auto* mix = app.add_subcommand("mix", "Weighted interleave of JSONL streams");
    {
        auto inputs = std::make_shared<std::vector<std::string>>();
        auto weights = std::make_shared<std::vector<std::string>>();
        auto seed = std::make_shared<uint64_t>(0);
        auto n = std::make_shared<size_t>(1000);
        auto out = std::make_shared<std::string>("mixture.jsonl");
        auto manifest = std::make_shared<std::string>();
        mix->add_option("--in", *inputs, "Stream as tag=path (repeatable)")->required();
        mix->add_option("--weight", *weights, "Weight as tag=value (repeatable)")->required();
        mix->add_option("--seed", *seed, "Random seed")->capture_default_str();
        mix->add_option("--n", *n, "Records to draw")->capture_default_str();
        mix->add_option("--out", *out, "Interleaved JSONL shard")->capture_default_str();
        mix->add_option("--manifest", *manifest, "mixture_manifest.v1 JSONL file");
        mix->callback([=, &run] {
            run = [=] { return cmd_mix(*inputs, *weights, *seed, *n, *out, *manifest); };
        });
    }

    auto* dump_env = app.add_subcommand("dump-env", "Write the bundled env.v1 definition");
    {
        auto out = std::make_shared<std::string>("bundled_env.json");
        dump_env->add_option("--out", *out, "Output JSON file")->capture_default_str();
        dump_env->callback([=, &run] { run = [=] { return cmd_dump_env(*out); }; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        return run();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const guire::NonFiniteGradientError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
