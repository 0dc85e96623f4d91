#include "guire/rollout.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace guire {

namespace {

std::string prettify(std::string id) {
    std::replace(id.begin(), id.end(), '_', ' ');
    return id;
}

struct GoalCandidate {
    SuccessPredicate predicate;
    std::string description;
    int depth = 0;
};

std::vector<GoalCandidate> enumerate_goals(const Environment& env,
                                           const std::string& initial_screen, int max_depth) {
    std::vector<GoalCandidate> out;
    EnvState init;
    init.screen_id = initial_screen;

    for (const Screen& s : env.definition().screens) {
        SuccessPredicate p;
        p.kind = SuccessPredicate::Kind::screen_is;
        p.screen = s.id;
        if (auto path = solve(env, init, p, max_depth); path && !path->empty())
            out.push_back({p, "Navigate to the " + prettify(s.id) + " screen",
                           static_cast<int>(path->size())});
    }

    std::set<std::string> seen_flags;
    for (const Transition& t : env.definition().transitions) {
        for (const std::string& flag : t.set_flags) {
            if (!seen_flags.insert(flag).second) continue;
            SuccessPredicate p;
            p.kind = SuccessPredicate::Kind::flag_set;
            p.flag = flag;
            if (auto path = solve(env, init, p, max_depth); path && !path->empty())
                out.push_back({p, "Reach the state '" + prettify(flag) + "'",
                               static_cast<int>(path->size())});
        }
    }
    return out;
}

}  // namespace

std::vector<Task> generate_tasks(const Environment& env, const CurriculumSpec& spec,
                                 uint64_t seed) {
    for (size_t i = 1; i < spec.levels.size(); ++i)
        if (spec.levels[i].difficulty < spec.levels[i - 1].difficulty)
            throw std::invalid_argument("generate_tasks: levels must be sorted by difficulty");

    const std::string initial = env.definition().screens.front().id;
    int max_depth = 0;
    for (const auto& level : spec.levels) max_depth = std::max(max_depth, level.max_path);
    const auto goals = enumerate_goals(env, initial, max_depth);

    std::mt19937_64 rng(seed);
    std::vector<Task> tasks;
    for (const auto& level : spec.levels) {
        std::vector<const GoalCandidate*> pool;
        for (const auto& g : goals)
            if (g.depth >= level.min_path && g.depth <= level.max_path) pool.push_back(&g);
        if (level.task_count > 0 && pool.empty())
            throw UnsatisfiableError("generate_tasks: no reachable goal with path length in [" +
                                     std::to_string(level.min_path) + ", " +
                                     std::to_string(level.max_path) + "]");
        std::shuffle(pool.begin(), pool.end(), rng);
        for (int k = 0; k < level.task_count; ++k) {
            const GoalCandidate& g = *pool[static_cast<size_t>(k) % pool.size()];
            Task t;
            t.id = "gen-" + std::to_string(level.difficulty) + "-" + std::to_string(k);
            t.goal = g.description;
            t.initial_screen = initial;
            t.success = g.predicate;
            t.difficulty = level.difficulty;
            tasks.push_back(std::move(t));
        }
    }
    return tasks;
}

Critique make_critique(double score, double threshold, std::string feedback) {
    return Critique{score, score >= threshold, std::move(feedback)};
}

TrajectoryScorer default_judge() {
    return [](const Trajectory& traj) -> std::pair<double, std::string> {
        if (!traj.success) return {0.0, "episode did not reach the goal"};

        bool has_terminate = false;
        std::map<std::pair<std::string, std::string>, int> repeats;
        std::string prev_screen;
        for (size_t i = 0; i < traj.steps.size(); ++i) {
            const auto& step = traj.steps[i];
            if (!step.candidate) continue;
            if (step.candidate->action.type == ActionType::terminate) has_terminate = true;
            const std::string screen_before =
                i == 0 ? std::string() : traj.steps[i - 1].result_screen;
            const int count =
                ++repeats[{screen_before, serialize_action(step.candidate->action)}];
            if (count >= 3)
                return {0.3, "repeated the same action on the same screen three times"};
        }
        if (!has_terminate) return {0.4, "episode never emitted terminate"};
        return {1.0, "clean successful episode"};
    };
}

FilterResult judge_filter(const std::vector<Trajectory>& trajectories,
                          const TrajectoryScorer& judge, double threshold) {
    FilterResult out;
    for (size_t i = 0; i < trajectories.size(); ++i) {
        const auto [score, feedback] = judge(trajectories[i]);
        const std::string id = trajectories[i].task_id + "#" + std::to_string(i);
        if (score >= threshold) {
            out.kept.push_back(trajectories[i]);
            out.critiques.push_back(make_critique(score, threshold, feedback));
        } else {
            out.drops.push_back({id, feedback});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Planner / grounder

namespace {

std::string describe_action(const Screen& screen, const Action& action) {
    if (auto pt = location_of(action)) {
        for (const Element& e : screen.elements)
            if (bbox_center(e.bbox) == *pt)
                return "Tap on '" + e.label + "'";
        return "Tap at (" + std::to_string(pt->x) + ", " + std::to_string(pt->y) + ")";
    }
    switch (action.type) {
        case ActionType::swipe:
            return "Swipe " + std::string(to_string(std::get<Direction>(action.params)));
        case ActionType::open_app:
            return "Open the " + std::get<AppNameParam>(action.params).value + " app";
        case ActionType::navigate_back: return "Go back";
        case ActionType::navigate_home: return "Go home";
        case ActionType::press_enter: return "Press enter";
        default: return "Do: " + serialize_action(action);
    }
}

}  // namespace

std::string BfsPlanner::next_instruction(const Environment& env, const Task& task,
                                         const EnvState& state,
                                         const std::vector<std::string>& /*history*/,
                                         const std::vector<std::string>& /*feedback*/) {
    // replans from scratch each step, so critic feedback is consumed simply by
    // trying again from the current state
    if (env.succeeded(task, state)) return "Finish: the goal is complete";
    auto path = solve(env, state, task.success);
    if (!path || path->empty()) return "Finish: no route to the goal from here";
    return describe_action(env.screen(state.screen_id), path->front());
}

Action LookupGrounder::ground(const Environment& env, const std::string& instruction,
                              const Screen& screen) {
    auto starts_with = [&](std::string_view prefix) {
        return std::string_view(instruction).substr(0, prefix.size()) == prefix;
    };
    if (starts_with("Tap on '")) {
        const size_t open = instruction.find('\'');
        const size_t close = instruction.rfind('\'');
        const std::string label = instruction.substr(open + 1, close - open - 1);
        for (const Element& e : screen.elements)
            if (e.label == label) return Action{ActionType::tap, bbox_center(e.bbox)};
        return Action{ActionType::tap, Point{0, 0}};  // label not on this screen
    }
    if (starts_with("Swipe ")) {
        if (auto d = direction_from_string(instruction.substr(6)))
            return Action{ActionType::swipe, *d};
        return Action{ActionType::swipe, Direction::down};
    }
    if (starts_with("Open the ")) {
        const std::string suffix = " app";
        std::string app = instruction.substr(9);
        if (app.size() > suffix.size() && app.ends_with(suffix))
            app = app.substr(0, app.size() - suffix.size());
        return Action{ActionType::open_app, AppNameParam{app}};
    }
    if (starts_with("Go back")) return Action{ActionType::navigate_back, std::monostate{}};
    if (starts_with("Go home")) return Action{ActionType::navigate_home, std::monostate{}};
    if (starts_with("Press enter")) return Action{ActionType::press_enter, std::monostate{}};
    if (starts_with("Finish:")) {
        std::string reason = instruction.substr(7);
        if (!reason.empty() && reason.front() == ' ') reason.erase(0, 1);
        return Action{ActionType::terminate, ReasonParam{reason}};
    }
    (void)env;
    return Action{ActionType::tap, Point{0, 0}};
}

RolloutResult multi_agent_rollout(StepPlanner& planner, InstructionGrounder& grounder,
                                  const TrajectoryScorer& critic, double critic_threshold,
                                  const Environment& env, const Task& task, int retry_budget,
                                  int max_steps) {
    RolloutResult out;
    std::vector<std::string> feedback;

    for (int attempt = 0; attempt <= retry_budget; ++attempt) {
        EnvState state = env.initial_state(task);
        std::vector<std::string> history;
        Trajectory traj;
        traj.task_id = task.id;

        for (int step = 0; step < max_steps && !state.terminated; ++step) {
            const Screen& screen = env.screen(state.screen_id);
            const std::string instruction =
                planner.next_instruction(env, task, state, history, feedback);
            const Action action = grounder.ground(env, instruction, screen);

            TrajectoryStep rec;
            rec.obs_digest = env.observation_digest(task, state.screen_id);
            rec.raw_output = "Plan: " + instruction + "\nAction: " + serialize_action(action);
            auto cand = extract_candidate(rec.raw_output);
            if (ok(cand)) {
                rec.candidate = value(cand);
                if (!validate_action(rec.candidate->action, env.definition().platform)) {
                    state = env.step(state, rec.candidate->action);
                    history.push_back(serialize_action(rec.candidate->action));
                }
            }
            rec.result_screen = state.screen_id;
            traj.steps.push_back(std::move(rec));
        }
        traj.terminal = true;
        traj.success = env.succeeded(task, state);

        const auto [score, message] = critic(traj);
        const Critique critique = make_critique(score, critic_threshold, message);
        out.attempts.push_back(traj);
        out.critiques.push_back(critique);
        if (critique.pass) break;
        feedback.push_back(critique.feedback);
    }
    out.final = out.attempts.back();
    return out;
}

// ---------------------------------------------------------------------------
// Perturbation with recovery

namespace {

TrajectoryStep make_step(const Environment& env, const Task& task, const EnvState& before,
                         const EnvState& after, const Action& action) {
    TrajectoryStep rec;
    rec.obs_digest = env.observation_digest(task, before.screen_id);
    rec.raw_output = "Action: " + serialize_action(action);
    rec.candidate = value(extract_candidate(rec.raw_output));
    rec.result_screen = after.screen_id;
    return rec;
}

}  // namespace

Trajectory perturb_trajectory(const Environment& env, const Task& task, const Trajectory& clean,
                              uint64_t seed) {
    if (!clean.success)
        throw std::invalid_argument("perturb_trajectory: trajectory must be successful");

    // locate the terminate step; the erroneous swipe replaces it
    size_t term_idx = clean.steps.size();
    for (size_t i = 0; i < clean.steps.size(); ++i) {
        if (clean.steps[i].candidate &&
            clean.steps[i].candidate->action.type == ActionType::terminate) {
            term_idx = i;
            break;
        }
    }
    if (term_idx == clean.steps.size())
        throw std::invalid_argument("perturb_trajectory: trajectory has no terminate step");

    Trajectory out;
    out.task_id = clean.task_id;
    EnvState state = env.initial_state(task);
    for (size_t i = 0; i < term_idx; ++i) {
        out.steps.push_back(clean.steps[i]);
        if (clean.steps[i].candidate) state = env.step(state, clean.steps[i].candidate->action);
    }

    std::mt19937_64 rng(seed);
    const Direction dirs[] = {Direction::up, Direction::down, Direction::left, Direction::right};
    const Action wrong{ActionType::swipe, dirs[rng() % 4]};
    EnvState after_wrong = env.step(state, wrong);
    out.steps.push_back(make_step(env, task, state, after_wrong, wrong));
    state = after_wrong;

    auto recovery = solve(env, state, task.success);
    if (!recovery)
        throw NoRecoveryError("perturb_trajectory: goal unreachable after the injected error");
    for (const Action& action : *recovery) {
        EnvState next = env.step(state, action);
        out.steps.push_back(make_step(env, task, state, next, action));
        state = next;
    }

    const Action terminate{ActionType::terminate, ReasonParam{"goal complete after recovery"}};
    EnvState final_state = env.step(state, terminate);
    out.steps.push_back(make_step(env, task, state, final_state, terminate));
    out.terminal = true;
    out.success = env.succeeded(task, final_state);
    return out;
}

// ---------------------------------------------------------------------------
// QA rewriting and CoT assembly

QaRecord rewrite_goal_to_qa(const Environment& env, const Task& task, const Trajectory& traj,
                            const QaRewriter& rewriter) {
    if (!traj.success)
        throw std::invalid_argument("rewrite_goal_to_qa: trajectory must be successful");
    const std::string terminal =
        traj.steps.empty() ? task.initial_screen : traj.steps.back().result_screen;
    const Screen& screen = env.screen(terminal);

    if (rewriter) {
        try {
            if (auto rewritten = rewriter(task, traj, screen)) return *rewritten;
        } catch (const std::exception&) {
            // fall through to the template, flagged below
        }
    }

    QaRecord out;
    out.question = "Was \"" + task.goal + "\" achieved, and what is shown?";
    out.terminal_screen = terminal;
    out.used_fallback = static_cast<bool>(rewriter);
    std::string labels;
    for (const Element& e : screen.elements) {
        if (e.label.empty()) continue;
        if (!labels.empty()) labels += ", ";
        labels += e.label;
    }
    out.answer = labels.empty() ? "Yes; state reached; no readable fields"
                                : "Yes; the screen shows: " + labels;
    return out;
}

CotGenerator default_cot_generator() {
    return [](const Environment& env, const Task& task, const Trajectory& traj,
              size_t step_idx) -> CotSections {
        const TrajectoryStep& step = traj.steps[step_idx];
        const std::string screen_before =
            step_idx == 0 ? task.initial_screen : traj.steps[step_idx - 1].result_screen;
        const Screen& screen = env.screen(screen_before);

        CotSections out;
        out.plan = describe_action(screen, step.candidate->action);
        std::string labels;
        for (const Element& e : screen.elements) {
            if (e.label.empty()) continue;
            if (!labels.empty()) labels += ", ";
            labels += e.label;
        }
        out.think = "The goal is \"" + task.goal + "\". Screen " + screen_before + " shows " +
                    (labels.empty() ? "no labeled elements" : labels) + "; " + *out.plan +
                    " moves toward it.";
        out.reflect = "Step " + std::to_string(step_idx + 1) + " of " +
                      std::to_string(traj.steps.size()) + "; no earlier action needs undoing.";
        return out;
    };
}

std::string candidate_text_of(const TrainingRecord& record, CoTMode mode) {
    const bool long_mode = mode == CoTMode::long_cot;
    std::string out;
    if (record.sections.plan) out += "Plan: " + *record.sections.plan + "\n";
    if (long_mode && record.sections.think) out += "Think: " + *record.sections.think + "\n";
    if (long_mode && record.sections.reflect) out += "Reflect: " + *record.sections.reflect + "\n";
    out += "Action: " + record.action_text;
    return out;
}

std::vector<TrainingRecord> assemble_cot(const Environment& env, const Task& task,
                                         const Trajectory& traj, CoTMode mode,
                                         const CotGenerator& generator,
                                         const std::string& split_tag) {
    std::vector<TrainingRecord> out;
    char digest[17];
    for (size_t i = 0; i < traj.steps.size(); ++i) {
        const TrajectoryStep& step = traj.steps[i];
        if (!step.candidate) continue;
        CotSections sections = generator(env, task, traj, i);
        if (mode == CoTMode::short_cot) {
            sections.think.reset();
            sections.reflect.reset();
        }
        TrainingRecord rec;
        rec.task_id = traj.task_id;
        rec.step_idx = static_cast<int>(i);
        rec.sections = std::move(sections);
        rec.action_text = serialize_action(step.candidate->action);
        std::snprintf(digest, sizeof digest, "%016llx",
                      static_cast<unsigned long long>(step.obs_digest));
        rec.screen_digest = digest;
        rec.split_tag = split_tag;
        out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracle scripts

std::map<std::pair<std::string, std::string>, std::string> make_oracle_scripts(
    const Environment& env, const std::vector<Task>& tasks) {
    std::map<std::pair<std::string, std::string>, std::string> scripts;
    for (const Task& task : tasks) {
        EnvState state = env.initial_state(task);
        auto path = solve(env, state, task.success);
        if (!path) throw NoRecoveryError("make_oracle_scripts: task " + task.id + " unsolvable");
        for (const Action& action : *path) {
            const auto key = std::make_pair(task.goal, state.screen_id);
            const std::string text = "Action: " + serialize_action(action);
            auto [it, inserted] = scripts.emplace(key, text);
            if (!inserted && it->second != text)
                throw NoRecoveryError("make_oracle_scripts: conflicting script for screen " +
                                      state.screen_id);
            state = env.step(state, action);
        }
        const std::string term_text =
            "Action: " +
            serialize_action(Action{ActionType::terminate, ReasonParam{"goal complete"}});
        auto [term_it, term_inserted] =
            scripts.emplace(std::make_pair(task.goal, state.screen_id), term_text);
        if (!term_inserted && term_it->second != term_text)
            throw NoRecoveryError("make_oracle_scripts: task " + task.id +
                                  " revisits screen " + state.screen_id +
                                  "; (goal, screen) scripts would be ambiguous");
    }
    return scripts;
}

}  // namespace guire
