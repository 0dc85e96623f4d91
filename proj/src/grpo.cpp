#include "guire/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace guire {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

AdvantageVector normalize_advantages(const std::vector<double>& rewards, double epsilon) {
    if (rewards.size() < 2)
        throw TooFewSamplesError("normalize_advantages: need at least 2 rewards");
    const double m = mean_of(rewards);
    const double sd = population_std(rewards);
    AdvantageVector out;
    out.values.resize(rewards.size());
    if (sd < epsilon) {
        std::fill(out.values.begin(), out.values.end(), 0.0);
        return out;
    }
    for (size_t i = 0; i < rewards.size(); ++i) out.values[i] = (rewards[i] - m) / sd;
    return out;
}

std::pair<std::vector<Group>, size_t> filter_degenerate_groups(std::vector<Group> groups) {
    std::vector<Group> kept;
    kept.reserve(groups.size());
    size_t dropped = 0;
    for (auto& g : groups) {
        std::set<double> distinct(g.rewards.begin(), g.rewards.end());
        if (distinct.size() >= 2) {
            kept.push_back(std::move(g));
        } else {
            ++dropped;
        }
    }
    return {std::move(kept), dropped};
}

namespace {

Observation observation_for(const Group& group, size_t i) {
    if (!group.windows[i]) return group.prompt;
    Observation obs = group.prompt;
    const CropWindow& w = *group.windows[i];
    if (auto* img = std::get_if<ImageScreenView>(&obs.screen)) {
        img->dims = w.dims;
        img->window = w;
    } else {
        ImageScreenView view;
        view.dims = w.dims;
        view.window = w;
        obs.screen = view;
    }
    return obs;
}

}  // namespace

StepStats policy_gradient_update(TrainablePolicy& policy, const Group& group,
                                 const AdvantageVector& advantages, double lr) {
    if (advantages.values.size() != group.size())
        throw std::invalid_argument("policy_gradient_update: advantage/reward size mismatch");

    std::vector<double> delta(policy.param_count(), 0.0);
    for (size_t i = 0; i < group.size(); ++i) {
        if (advantages.values[i] == 0.0) continue;
        if (!ok(group.candidates[i]))
            throw std::invalid_argument(
                "policy_gradient_update: group contains an unparseable candidate");
        const Observation obs = observation_for(group, i);
        const auto grad = policy.grad_log_prob(obs, value(group.candidates[i]).raw);
        for (size_t j = 0; j < delta.size(); ++j) delta[j] += advantages.values[i] * grad[j];
    }

    double norm_sq = 0.0;
    for (double& d : delta) {
        d *= lr;
        norm_sq += d * d;
    }
    if (!std::isfinite(norm_sq))
        throw NonFiniteGradientError("policy_gradient_update: non-finite gradient");

    if (lr != 0.0) policy.add_to_parameters(delta);
    return StepStats{mean_of(group.rewards), std::sqrt(norm_sq)};
}

namespace {

double location_reward_of(const Parsed<CandidateOutput>& cand, const BBox& gt_box,
                          const std::optional<CropWindow>& window, const RewardConfig& cfg) {
    if (!ok(cand)) return 0.0;
    auto pt = location_of(value(cand).action);
    if (!pt) return 0.0;
    const Point full = window ? from_crop_coords(*window, *pt) : *pt;
    if (cfg.location_mode == LocationRewardMode::sparse)
        return sparse_location_reward(full, gt_box);
    return dense_location_reward(full, gt_box, cfg.lambda);
}

}  // namespace

Group assemble_grounding_group(Policy& policy, const Observation& prompt, const BBox& gt_box,
                               const GroupConfig& cfg, const CropConfig& crop_cfg,
                               const RewardConfig& reward_cfg, double temperature,
                               std::string prompt_id) {
    if (!valid(gt_box)) throw std::invalid_argument("assemble_grounding_group: invalid gt box");
    Group group;
    group.prompt_id = std::move(prompt_id);
    group.prompt = prompt;

    const auto full_texts = policy.generate(prompt, cfg.m_ground_full, temperature);
    for (const auto& text : full_texts) {
        group.candidates.push_back(extract_candidate(text));
        group.sources.push_back(SampleSource::full_image);
        group.windows.emplace_back(std::nullopt);
        group.rewards.push_back(
            location_reward_of(group.candidates.back(), gt_box, std::nullopt, reward_cfg));
    }

    // Crop around the highest-reward full-image prediction (ties to the first).
    std::optional<Point> crop_center;
    double best = -1.0;
    for (size_t i = 0; i < group.size(); ++i) {
        if (!ok(group.candidates[i])) continue;
        auto pt = location_of(value(group.candidates[i]).action);
        if (!pt) continue;
        if (group.rewards[i] > best) {
            best = group.rewards[i];
            crop_center = pt;
        }
    }

    if (cfg.m_ground_crop > 0 && crop_center) {
        const ScreenDims dims = view_dims(prompt);
        Point center{std::clamp<int64_t>(crop_center->x, 0, dims.width - 1),
                     std::clamp<int64_t>(crop_center->y, 0, dims.height - 1)};
        const CropWindow crop = make_crop(center, dims, crop_cfg);

        Observation crop_obs = prompt;
        if (auto* img = std::get_if<ImageScreenView>(&crop_obs.screen)) {
            img->dims = crop.dims;
            img->window = crop;
        } else {
            ImageScreenView view;
            view.dims = crop.dims;
            view.window = crop;
            crop_obs.screen = view;
        }

        const auto crop_texts = policy.generate(crop_obs, cfg.m_ground_crop, temperature);
        for (const auto& text : crop_texts) {
            group.candidates.push_back(extract_candidate(text));
            group.sources.push_back(SampleSource::zoomed_crop);
            group.windows.emplace_back(crop);
            group.rewards.push_back(
                location_reward_of(group.candidates.back(), gt_box, crop, reward_cfg));
        }
    }
    return group;
}

Group assemble_nav_group(Policy& policy, const Observation& prompt, const GroundTruth& gt,
                         const GroupConfig& cfg, const RewardConfig& reward_cfg,
                         double temperature, std::string prompt_id) {
    Group group;
    group.prompt_id = std::move(prompt_id);
    group.prompt = prompt;
    const auto texts = policy.generate(prompt, cfg.m_nav, temperature);
    for (const auto& text : texts) {
        group.candidates.push_back(extract_candidate(text));
        group.sources.push_back(SampleSource::full_image);
        group.windows.emplace_back(std::nullopt);
        group.rewards.push_back(total_reward(group.candidates.back(), gt, reward_cfg).total);
    }
    return group;
}

}  // namespace guire
