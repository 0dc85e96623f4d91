#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "guire/action.hpp"
#include "guire/policy.hpp"
#include "guire/reward.hpp"

namespace guire {

enum class SampleSource { full_image, zoomed_crop };

// M rewarded candidates for one prompt. Candidates are stored as emitted
// (crop samples carry view-relative coordinates plus their window); rewards
// are computed in full-image coordinates. Parse failures stay in the group
// and score zero.
struct Group {
    std::string prompt_id;
    Observation prompt;  // the full-image observation the group was sampled for
    std::vector<Parsed<CandidateOutput>> candidates;
    std::vector<double> rewards;
    std::vector<SampleSource> sources;
    std::vector<std::optional<CropWindow>> windows;

    size_t size() const { return rewards.size(); }
};

struct GroupConfig {
    int m_nav = 32;
    int m_ground_full = 8;
    int m_ground_crop = 4;
    double epsilon = 1e-8;  // std guard in advantage normalization
};

struct AdvantageVector {
    std::vector<double> values;
};

struct TooFewSamplesError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonFiniteGradientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double mean_of(const std::vector<double>& v);
double population_std(const std::vector<double>& v);

// A_i = (r_i - mean) / max(population_std, epsilon); a group whose rewards
// have population std below epsilon gets all-zero advantages. Throws
// TooFewSamplesError for fewer than two rewards.
AdvantageVector normalize_advantages(const std::vector<double>& rewards, double epsilon = 1e-8);

// Keeps exactly the groups whose reward multiset has at least two distinct
// values (identical rewards carry no learning signal); order preserved.
std::pair<std::vector<Group>, size_t> filter_degenerate_groups(std::vector<Group> groups);

struct StepStats {
    double mean_reward = 0.0;
    double grad_norm = 0.0;
};

// Plain group-baseline policy gradient: parameters += lr * sum_i A_i *
// grad log pi(z_i | prompt). Throws NonFiniteGradientError (leaving the
// parameters untouched) if the accumulated update is not finite.
StepStats policy_gradient_update(TrainablePolicy& policy, const Group& group,
                                 const AdvantageVector& advantages, double lr);

// Samples m_ground_full candidates on the full image, crops around the best
// full-image prediction, samples m_ground_crop more on the crop, and scores
// every candidate against gt_box in full coordinates. All candidates share
// one group. The crop pass is skipped when no full-image sample carries a
// location or m_ground_crop is zero.
Group assemble_grounding_group(Policy& policy, const Observation& prompt, const BBox& gt_box,
                               const GroupConfig& cfg = {}, const CropConfig& crop_cfg = {},
                               const RewardConfig& reward_cfg = {}, double temperature = 1.0,
                               std::string prompt_id = {});

// Samples cfg.m_nav candidates for a navigation prompt and scores them with
// total_reward against the ground truth.
Group assemble_nav_group(Policy& policy, const Observation& prompt, const GroundTruth& gt,
                         const GroupConfig& cfg = {}, const RewardConfig& reward_cfg = {},
                         double temperature = 1.0, std::string prompt_id = {});

}  // namespace guire
