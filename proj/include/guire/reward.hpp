#pragma once

#include <optional>
#include <string>
#include <variant>

#include "guire/action.hpp"
#include "guire/geometry.hpp"

namespace guire {

// Verifiable rewards. Total reward for a candidate is
//   r = f_type + f_param
// where f_type is 2 for a type match with no expected parameters, 1 for a
// type match with parameters, 0 otherwise; f_param is an exact string match
// in {0,1} for string-like parameters, and either a containment indicator
// (sparse) or a distance-graded score (dense) for location parameters.

// Location ground truth carries the full element box so both containment and
// the width/height-normalized distance are computable.
struct LocationTruth {
    BBox bbox;
    friend bool operator==(const LocationTruth&, const LocationTruth&) = default;
};

using GroundTruthParams = std::variant<std::monostate, TextParam, Direction, HotkeysParam,
                                       AppNameParam, ReasonParam, LocationTruth>;

struct GroundTruth {
    ActionType action_type = ActionType::tap;
    GroundTruthParams params;
};

// True iff the ground truth expects no parameters.
bool gt_params_empty(const GroundTruth& gt);

// Throws std::invalid_argument if the params variant is incompatible with the
// action type's signature (location truth pairs with point-signature types).
void check_ground_truth(const GroundTruth& gt);

enum class LocationRewardMode { sparse, dense };

struct RewardConfig {
    double lambda = 0.5;  // dense decay factor; 0 is allowed and makes dense
                          // degenerate to 1 on a type match
    LocationRewardMode location_mode = LocationRewardMode::sparse;
};

struct RewardBreakdown {
    int f_type = 0;        // {0, 1, 2}
    double f_param = 0.0;  // [0, 1]
    double total = 0.0;    // f_type + f_param, in [0, 2]
    bool parse_failed = false;
    // extra predicted params on a nullary ground truth do not cancel the
    // type credit; they are only recorded here
    bool extraneous_params = false;
};

int type_reward(ActionType tau, const GroundTruth& gt);

// String-parameter exact match after normalization (leading/trailing
// whitespace trimmed, case preserved). Pre: gt params are string-like.
int string_param_reward(const ActionParams& pred, const GroundTruth& gt);

// 1 iff the predicted point lies inside the ground-truth box (boundary
// inclusive). Also the grounding-RL containment reward.
int sparse_location_reward(const Point& pred, const BBox& gt_box);

// max(1 - lambda * (|dx|/w + |dy|/h), 0) against the box center.
// Throws std::invalid_argument on a degenerate box.
double dense_location_reward(const Point& pred, const BBox& gt_box, double lambda);

// Total reward for a candidate (or a parse failure, which scores zero).
RewardBreakdown total_reward(const Parsed<CandidateOutput>& cand, const GroundTruth& gt,
                             const RewardConfig& cfg = {});
RewardBreakdown total_reward(const CandidateOutput& cand, const GroundTruth& gt,
                             const RewardConfig& cfg = {});

// Trim-only normalization applied before exact match.
std::string normalize_text(std::string_view s);

}  // namespace guire
