#include "guire/train.hpp"

#include <random>

namespace guire {

BBox make_train_target(const TrainGroundConfig& cfg) {
    // target centered on a seeded interior cell center, aligned so the box is
    // hittable by the grid at all
    const int G = cfg.grid;
    const int margin = std::max(1, G / 16);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> pick(margin, G - 1 - margin);
    const int ci = pick(rng);
    const int cj = pick(rng);

    const int64_t cx = (2 * static_cast<int64_t>(ci) + 1) * cfg.screen_side / (2 * G);
    const int64_t cy = (2 * static_cast<int64_t>(cj) + 1) * cfg.screen_side / (2 * G);
    const int64_t half = cfg.target_side / 2;
    return BBox{cx - half, cy - half, cx - half + cfg.target_side, cy - half + cfg.target_side};
}

double containment_probability(const GridSoftmaxPolicy& policy, const BBox& box) {
    const auto probs = policy.full_distribution();
    double mass = 0.0;
    for (size_t i = 0; i < probs.size(); ++i)
        if (contains(box, policy.cell_center(static_cast<int>(i)))) mass += probs[i];
    return mass;
}

TrainGroundResult train_ground(const TrainGroundConfig& cfg) {
    if (cfg.steps < 0) throw std::invalid_argument("train_ground: steps must be >= 0");

    GridSoftmaxConfig pcfg;
    pcfg.grid = cfg.grid;
    pcfg.screen = ScreenDims{cfg.screen_side, cfg.screen_side};
    pcfg.smooth_radius = cfg.smooth_radius;
    pcfg.smooth_sigma = cfg.smooth_sigma;
    pcfg.seed = cfg.seed * 1000003u + 17u;
    GridSoftmaxPolicy policy(pcfg);

    TrainGroundResult result;
    result.target = make_train_target(cfg);
    result.initial_containment = containment_probability(policy, result.target);

    Observation prompt;
    ImageScreenView view;
    view.image_ref = "synthetic";
    view.dims = pcfg.screen;
    prompt.screen = view;
    prompt.instruction = "Locate the target element";

    GroupConfig gcfg;
    gcfg.m_ground_full = cfg.m_full;
    gcfg.m_ground_crop = cfg.m_crop;
    RewardConfig rcfg;
    rcfg.location_mode = cfg.reward_mode;
    rcfg.lambda = cfg.lambda;

    for (int step = 0; step < cfg.steps; ++step) {
        const double containment = containment_probability(policy, result.target);
        if (cfg.stop_at_containment && containment >= *cfg.stop_at_containment) {
            result.reached_step = step;
            break;
        }

        Group group = assemble_grounding_group(policy, prompt, result.target, gcfg, cfg.crop,
                                               rcfg, 1.0, "step-" + std::to_string(step));
        TrainStepRecord rec;
        rec.step = step;
        rec.containment = containment;
        rec.mean_reward = mean_of(group.rewards);

        auto [kept, dropped] = filter_degenerate_groups({std::move(group)});
        rec.kept_groups = static_cast<int>(kept.size());
        rec.dropped_groups = static_cast<int>(dropped);
        if (!kept.empty()) {
            const Group& g = kept.front();
            const auto advantages = normalize_advantages(g.rewards, gcfg.epsilon);
            const StepStats stats = policy_gradient_update(policy, g, advantages, cfg.lr);
            rec.grad_norm = stats.grad_norm;
        }
        result.curve.push_back(rec);
    }

    result.final_containment = containment_probability(policy, result.target);
    return result;
}

}  // namespace guire
