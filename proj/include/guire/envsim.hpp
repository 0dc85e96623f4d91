#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "guire/action.hpp"
#include "guire/geometry.hpp"
#include "guire/policy.hpp"

namespace guire {

// Deterministic toy GUI environment: screens are element trees, behavior is a
// declarative transition table. Not an emulator; just enough structure for
// navigation training and evaluation at desk scale.

struct Element {
    std::string id;
    BBox bbox;
    std::string role;
    std::string label;
    int z_order = 0;
};

struct Screen {
    std::string id;
    std::vector<Element> elements;
    std::optional<std::string> focus;  // element receiving textentry
};

// A transition fires on (screen, element, action) for location actions or on
// (screen, action [, param]) for the rest. `param` matches swipe directions,
// app names or hotkey strings.
struct Transition {
    std::string screen;
    std::optional<std::string> element;
    ActionType on_action = ActionType::tap;
    std::optional<std::string> param;
    std::string to_screen;
    std::vector<std::string> set_flags;
};

// Declarative success predicate, decidable from environment state alone.
struct SuccessPredicate {
    enum class Kind { screen_is, flag_set, buffer_equals, all_of };
    Kind kind = Kind::screen_is;
    std::string screen;   // screen_is / buffer_equals
    std::string flag;     // flag_set
    std::string element;  // buffer_equals
    std::string value;    // buffer_equals
    std::vector<SuccessPredicate> children;  // all_of
};

struct Task {
    std::string id;
    std::string goal;
    std::string initial_screen;
    SuccessPredicate success;
    int difficulty = 1;
};

struct EnvDefinition {
    std::string name;
    Platform platform = Platform::mobile;
    ScreenDims dims{1080, 1920};
    std::vector<Screen> screens;
    std::vector<Transition> transitions;
    std::vector<Task> tasks;
};

struct EnvState {
    std::string screen_id;
    std::set<std::string> flags;
    std::map<std::string, std::string> buffers;  // "<screen>/<element>" -> text
    bool terminated = false;
    std::string terminate_reason;
};

struct EnvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Environment {
public:
    explicit Environment(EnvDefinition def);  // validates; throws EnvError

    const EnvDefinition& definition() const { return def_; }
    const Screen& screen(const std::string& id) const;
    std::optional<Task> task(const std::string& id) const;

    EnvState initial_state(const Task& task) const;
    bool succeeded(const Task& task, const EnvState& state) const;
    bool evaluate(const SuccessPredicate& pred, const EnvState& state) const;

    // Among elements whose bbox contains p, the one with the highest z_order
    // wins; ties break to the latest list position. Throws EnvError if p is
    // outside the screen.
    std::optional<std::string> hit_test(const Screen& screen, const Point& p) const;

    // One environment step. Location actions route through hit_test and the
    // transition table; swipe / navigation / open_app follow their entries;
    // textentry appends to the focused element's buffer; anything unmatched
    // is a no-op. terminate freezes the state. Throws EnvError on a platform
    // mismatch or when called on a terminated state.
    EnvState step(const EnvState& state, const Action& action) const;

    Observation observe(const Task& task, const EnvState& state,
                        const std::vector<std::string>& history) const;

    // Stable content digest of (task, screen) for trajectory records.
    uint64_t observation_digest(const Task& task, const std::string& screen_id) const;

private:
    const Transition* find_transition(const std::string& screen,
                                      const std::optional<std::string>& element, ActionType type,
                                      const std::optional<std::string>& param) const;

    EnvDefinition def_;
    std::map<std::string, size_t> screen_index_;
};

struct TrajectoryStep {
    uint64_t obs_digest = 0;
    std::string raw_output;                   // what the policy emitted
    std::optional<CandidateOutput> candidate;  // empty when the output did not parse
    std::string result_screen;
};

struct Trajectory {
    std::string task_id;
    std::vector<TrajectoryStep> steps;
    bool terminal = false;
    bool success = false;
};

struct EvalConfig {
    int max_steps = 15;
    int runs = 5;
    uint64_t seed = 0;
};

struct EpisodeResult {
    Trajectory trajectory;
    EnvState final_state;
};

// Runs observe -> generate(n=1) -> extract -> step until terminate or the
// step budget is exhausted. Malformed or platform-invalid outputs consume a
// step without changing state. Policy transport errors propagate.
EpisodeResult run_episode(Policy& policy, const Environment& env, const Task& task,
                          int max_steps);

using PolicyFactory = std::function<std::unique_ptr<Policy>(uint64_t run_seed)>;

struct SuccessReport {
    std::vector<double> per_run;
    double mean = 0.0;
};

// Fraction of successful episodes over all tasks, averaged over cfg.runs
// independently seeded runs (run r uses seed cfg.seed + r).
SuccessReport success_rate(const PolicyFactory& make_policy, const Environment& env,
                           const std::vector<Task>& tasks, const EvalConfig& cfg);

// Re-executes a trajectory's recorded actions from the task's initial state;
// true iff the task predicate holds afterwards.
bool replay_succeeds(const Environment& env, const Task& task, const Trajectory& traj);

// Breadth-first search over (screen, flags) states using transition-table
// actions only (textentry is excluded: free text makes the space infinite).
// Returns the shortest action sequence reaching the predicate, if any.
std::optional<std::vector<Action>> solve(const Environment& env, const EnvState& from,
                                         const SuccessPredicate& goal, int max_depth = 32);

// env.v1 JSON round trip; load rejects unknown fields and checks invariants.
EnvDefinition load_env_json(const std::string& text);
EnvDefinition load_env_file(const std::string& path);
std::string env_to_json(const EnvDefinition& def);

// Hand-authored 20-task suite across 3 difficulty levels (shortest paths of
// 2, 4 and 7 actions).
EnvDefinition bundled_env();

uint64_t fnv1a64(std::string_view data);

}  // namespace guire
