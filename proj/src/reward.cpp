#include "guire/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace guire {

namespace {

ParamSignature gt_signature(const GroundTruthParams& p) {
    struct Visitor {
        ParamSignature operator()(const std::monostate&) const { return ParamSignature::none; }
        ParamSignature operator()(const TextParam&) const { return ParamSignature::text; }
        ParamSignature operator()(const Direction&) const { return ParamSignature::direction; }
        ParamSignature operator()(const HotkeysParam&) const { return ParamSignature::hotkeys; }
        ParamSignature operator()(const AppNameParam&) const { return ParamSignature::app_name; }
        ParamSignature operator()(const ReasonParam&) const { return ParamSignature::reason; }
        ParamSignature operator()(const LocationTruth&) const { return ParamSignature::point; }
    };
    return std::visit(Visitor{}, p);
}

}  // namespace

bool gt_params_empty(const GroundTruth& gt) {
    return std::holds_alternative<std::monostate>(gt.params);
}

void check_ground_truth(const GroundTruth& gt) {
    const ActionSpec& spec = spec_of(gt.action_type);
    if (gt_signature(gt.params) != spec.signature)
        throw std::invalid_argument("ground truth params incompatible with " +
                                    std::string(spec.name));
    if (const auto* loc = std::get_if<LocationTruth>(&gt.params); loc && !valid(loc->bbox))
        throw std::invalid_argument("ground truth location box is invalid");
}

std::string normalize_text(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

int type_reward(ActionType tau, const GroundTruth& gt) {
    if (tau != gt.action_type) return 0;
    return gt_params_empty(gt) ? 2 : 1;
}

namespace {

std::string joined_keys(const HotkeysParam& h) {
    std::string joined;
    for (size_t i = 0; i < h.keys.size(); ++i) {
        if (i) joined.push_back('+');
        joined += h.keys[i];
    }
    return joined;
}

template <typename Variant>
std::optional<std::string> string_view_of(const Variant& params) {
    if (const auto* t = std::get_if<TextParam>(&params)) return t->value;
    if (const auto* d = std::get_if<Direction>(&params)) return std::string(to_string(*d));
    if (const auto* h = std::get_if<HotkeysParam>(&params)) return joined_keys(*h);
    if (const auto* a = std::get_if<AppNameParam>(&params)) return a->value;
    if (const auto* r = std::get_if<ReasonParam>(&params)) return r->value;
    return std::nullopt;
}

}  // namespace

int string_param_reward(const ActionParams& pred, const GroundTruth& gt) {
    auto gt_str = string_view_of(gt.params);
    if (!gt_str)
        throw std::invalid_argument("string_param_reward: ground truth is not string-like");
    auto pred_str = string_view_of(pred);
    if (!pred_str) return 0;
    return normalize_text(*pred_str) == normalize_text(*gt_str) ? 1 : 0;
}

int sparse_location_reward(const Point& pred, const BBox& gt_box) {
    return contains(gt_box, pred) ? 1 : 0;
}

double dense_location_reward(const Point& pred, const BBox& gt_box, double lambda) {
    if (!valid(gt_box)) throw std::invalid_argument("dense_location_reward: degenerate box");
    if (lambda < 0.0) throw std::invalid_argument("dense_location_reward: lambda must be >= 0");
    const Point c = bbox_center(gt_box);
    const double w = static_cast<double>(gt_box.width());
    const double h = static_cast<double>(gt_box.height());
    const double dx = std::abs(static_cast<double>(pred.x - c.x));
    const double dy = std::abs(static_cast<double>(pred.y - c.y));
    return std::max(1.0 - lambda * (dx / w + dy / h), 0.0);
}

RewardBreakdown total_reward(const Parsed<CandidateOutput>& cand, const GroundTruth& gt,
                             const RewardConfig& cfg) {
    if (!ok(cand)) {
        RewardBreakdown zero;
        zero.parse_failed = true;
        return zero;
    }
    return total_reward(value(cand), gt, cfg);
}

RewardBreakdown total_reward(const CandidateOutput& cand, const GroundTruth& gt,
                             const RewardConfig& cfg) {
    check_ground_truth(gt);
    RewardBreakdown out;
    out.f_type = type_reward(cand.action.type, gt);

    if (gt_params_empty(gt)) {
        out.extraneous_params = !std::holds_alternative<std::monostate>(cand.action.params);
        out.f_param = 0.0;
    } else if (cand.action.type != gt.action_type) {
        out.f_param = 0.0;
    } else if (const auto* loc = std::get_if<LocationTruth>(&gt.params)) {
        const Point* p = std::get_if<Point>(&cand.action.params);
        if (!p) {
            out.f_param = 0.0;
        } else if (cfg.location_mode == LocationRewardMode::sparse) {
            out.f_param = sparse_location_reward(*p, loc->bbox);
        } else {
            out.f_param = dense_location_reward(*p, loc->bbox, cfg.lambda);
        }
    } else {
        out.f_param = string_param_reward(cand.action.params, gt);
    }

    out.total = static_cast<double>(out.f_type) + out.f_param;
    return out;
}

}  // namespace guire
