#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "guire/grpo.hpp"
#include "guire/policy.hpp"
#include "guire/reward.hpp"

namespace guire {

// Toy GRPO grounding loop: a GridSoftmax policy learns to hit one synthetic
// target box (centered on a seeded grid cell) from grouped full-image and
// zoomed-crop samples with normalized advantages and online filtering.

struct TrainGroundConfig {
    int grid = 8;
    int64_t screen_side = 1024;
    int64_t target_side = 40;  // box side, centered on a seeded interior cell center
    int steps = 500;
    uint64_t seed = 1;
    int m_full = 8;
    int m_crop = 4;
    double lr = 0.3;
    LocationRewardMode reward_mode = LocationRewardMode::sparse;
    double lambda = 0.5;
    int smooth_radius = 0;      // >0 enables the spatial-generalization kernel
    double smooth_sigma = 1.2;  // kernel width in cells
    CropConfig crop{0.25, 200};
    // stop early once the policy's exact containment probability reaches this
    std::optional<double> stop_at_containment;
};

struct TrainStepRecord {
    int step = 0;
    double mean_reward = 0.0;   // sampled group mean
    double containment = 0.0;   // exact full-frame containment probability
    int kept_groups = 0;
    int dropped_groups = 0;
    double grad_norm = 0.0;
};

struct TrainGroundResult {
    std::vector<TrainStepRecord> curve;
    BBox target;
    double initial_containment = 0.0;
    double final_containment = 0.0;
    // first step index at which containment reached stop_at_containment
    std::optional<int> reached_step;
};

BBox make_train_target(const TrainGroundConfig& cfg);

TrainGroundResult train_ground(const TrainGroundConfig& cfg);

// Exact probability mass the policy puts inside the box on the full frame.
double containment_probability(const GridSoftmaxPolicy& policy, const BBox& box);

}  // namespace guire
