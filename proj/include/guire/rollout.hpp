#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "guire/envsim.hpp"
#include "guire/policy.hpp"

namespace guire {

// Synthetic-data generators: curriculum tasks, planner/grounder/critic
// rollouts with retry-on-feedback, rule-based judging, error-injection with
// recovery, QA rewriting, and CoT assembly.

struct CurriculumLevel {
    int difficulty = 1;
    int task_count = 0;
    int min_path = 1;  // shortest-path action count, inclusive
    int max_path = 1;
};

struct CurriculumSpec {
    std::vector<CurriculumLevel> levels;  // sorted ascending by difficulty
};

struct UnsatisfiableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic per (env, spec, seed). Every generated task's shortest-path
// length (BFS over the screen graph) falls inside its level's range.
std::vector<Task> generate_tasks(const Environment& env, const CurriculumSpec& spec,
                                 uint64_t seed);

// The textual reward fed back to the planner.
struct Critique {
    double score = 0.0;  // in [0, 1]
    bool pass = false;   // score >= the judging threshold
    std::string feedback;
};

Critique make_critique(double score, double threshold, std::string feedback);

// Scores a finished trajectory; the consumer applies its threshold.
using TrajectoryScorer = std::function<std::pair<double, std::string>(const Trajectory&)>;

// Rule-based default: unsuccessful episodes score 0; successful ones lose
// credit for a missing terminate (0.4) or for repeating an identical
// (screen, action) pair three or more times (0.3); otherwise 1.0.
TrajectoryScorer default_judge();

struct DropLogEntry {
    std::string trajectory_id;
    std::string reason;
};

struct FilterResult {
    std::vector<Trajectory> kept;
    std::vector<Critique> critiques;  // aligned with kept
    std::vector<DropLogEntry> drops;
};

FilterResult judge_filter(const std::vector<Trajectory>& trajectories,
                          const TrajectoryScorer& judge, double threshold);

// Planning agent: decomposes the goal into one step-level instruction given
// the current state, the action history and any critic feedback so far.
class StepPlanner {
public:
    virtual ~StepPlanner() = default;
    virtual std::string next_instruction(const Environment& env, const Task& task,
                                         const EnvState& state,
                                         const std::vector<std::string>& history,
                                         const std::vector<std::string>& feedback) = 0;
};

// Grounding agent: turns a step instruction into a concrete action on the
// current screen.
class InstructionGrounder {
public:
    virtual ~InstructionGrounder() = default;
    virtual Action ground(const Environment& env, const std::string& instruction,
                          const Screen& screen) = 0;
};

// Planner backed by the env graph: replans from the current state each step
// and emits fixed-template instructions ("Tap 'New contact'", "Swipe left",
// "Finish: ..."). Stands in for a large planning model.
class BfsPlanner : public StepPlanner {
public:
    std::string next_instruction(const Environment& env, const Task& task, const EnvState& state,
                                 const std::vector<std::string>& history,
                                 const std::vector<std::string>& feedback) override;
};

// Resolves the planner's instruction templates against the screen's labels.
class LookupGrounder : public InstructionGrounder {
public:
    Action ground(const Environment& env, const std::string& instruction,
                  const Screen& screen) override;
};

struct RolloutResult {
    Trajectory final;                  // last attempt
    std::vector<Trajectory> attempts;  // every attempt, in order
    std::vector<Critique> critiques;   // one per attempt
};

// Runs planner->grounder episodes; after a failed attempt the critic's
// feedback is appended to the planner's context and the rollout retries, up
// to retry_budget extra attempts. All attempts are recorded.
RolloutResult multi_agent_rollout(StepPlanner& planner, InstructionGrounder& grounder,
                                  const TrajectoryScorer& critic, double critic_threshold,
                                  const Environment& env, const Task& task, int retry_budget,
                                  int max_steps = 15);

struct NoRecoveryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Replaces the trajectory's terminate step with an erroneous swipe and
// appends the corrective sequence (recomputed through the env graph) that
// re-reaches the goal, ending in the original terminate. Pre: clean succeeded.
// Throws NoRecoveryError when the error state cannot reach the goal.
Trajectory perturb_trajectory(const Environment& env, const Task& task, const Trajectory& clean,
                              uint64_t seed);

struct QaRecord {
    std::string question;
    std::string answer;
    std::string terminal_screen;
    bool used_fallback = false;  // template answered because the rewriter failed
};

using QaRewriter =
    std::function<std::optional<QaRecord>(const Task&, const Trajectory&, const Screen&)>;

// Rewrites the episode goal into a question answered from the terminal
// screen's labels. A plugged rewriter that fails falls back to the template.
QaRecord rewrite_goal_to_qa(const Environment& env, const Task& task, const Trajectory& traj,
                            const QaRewriter& rewriter = nullptr);

enum class CoTMode { short_cot, long_cot };

struct CotSections {
    std::optional<std::string> plan;
    std::optional<std::string> think;
    std::optional<std::string> reflect;
};

using CotGenerator = std::function<CotSections(const Environment&, const Task&,
                                               const Trajectory&, size_t step_idx)>;

struct TrainingRecord {
    std::string task_id;
    int step_idx = 0;
    CotSections sections;
    std::string action_text;
    std::string screen_digest;
    std::string split_tag;
};

CotGenerator default_cot_generator();

// One record per step in the candidate text format. Short mode emits the
// plan only; long mode emits plan, think and reflect. Every record re-parses
// via extract_candidate with the original action.
std::vector<TrainingRecord> assemble_cot(const Environment& env, const Task& task,
                                         const Trajectory& traj, CoTMode mode,
                                         const CotGenerator& generator = default_cot_generator(),
                                         const std::string& split_tag = "train");

std::string candidate_text_of(const TrainingRecord& record, CoTMode mode);

// Optimal scripts for ScriptedOracle: per (goal, screen) the next action on
// the BFS-shortest path, plus a final terminate. Throws NoRecoveryError for
// unsolvable tasks.
std::map<std::pair<std::string, std::string>, std::string> make_oracle_scripts(
    const Environment& env, const std::vector<Task>& tasks);

}  // namespace guire
