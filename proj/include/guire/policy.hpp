#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "guire/action.hpp"
#include "guire/geometry.hpp"

namespace guire {

struct ElementView {
    std::string id;
    BBox bbox;
    std::string role;
    std::string label;
    int z_order = 0;

    friend bool operator==(const ElementView&, const ElementView&) = default;
};

// Structured screen view: element list plus screen identity.
struct ElementsScreenView {
    std::string screen_id;
    ScreenDims dims;
    std::vector<ElementView> elements;
};

// Opaque image view. `dims` is the size of what the policy sees; when
// `window` is set the view is a crop of a larger image and coordinates in
// policy outputs are view-relative.
struct ImageScreenView {
    std::string image_ref;
    ScreenDims dims;
    std::optional<CropWindow> window;
};

struct Observation {
    std::variant<ElementsScreenView, ImageScreenView> screen;
    std::string instruction;
    std::vector<std::string> history;  // prior serialized actions, chronological
};

ScreenDims view_dims(const Observation& obs);
std::optional<CropWindow> view_window(const Observation& obs);

// Policies speak only the raw-text candidate format ("Plan:"/"Action:" lines);
// all structure flows through extract_candidate so real-model and mock paths
// stay identical.
class Policy {
public:
    virtual ~Policy() = default;

    // Returns exactly n raw candidate texts.
    virtual std::vector<std::string> generate(const Observation& obs, int n,
                                              double temperature) = 0;
};

// A policy with differentiable log-probabilities over its own outputs.
class TrainablePolicy : public Policy {
public:
    virtual size_t param_count() const = 0;
    virtual std::vector<double> parameters() const = 0;
    virtual void set_parameters(const std::vector<double>& params) = 0;
    virtual void add_to_parameters(const std::vector<double>& delta) = 0;

    virtual double log_prob(const Observation& obs, const std::string& output) const = 0;
    virtual std::vector<double> grad_log_prob(const Observation& obs,
                                              const std::string& output) const = 0;
};

struct MissingScriptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministically replays a stored optimal action per (goal, screen) pair.
class ScriptedOracle : public Policy {
public:
    using ScriptKey = std::pair<std::string, std::string>;  // (goal, screen_id)

    explicit ScriptedOracle(std::map<ScriptKey, std::string> scripts)
        : scripts_(std::move(scripts)) {}

    std::vector<std::string> generate(const Observation& obs, int n, double temperature) override;

private:
    std::map<ScriptKey, std::string> scripts_;
};

// Taps a uniformly random pixel of the current view.
class UniformRandomPolicy : public Policy {
public:
    explicit UniformRandomPolicy(uint64_t seed) : rng_(seed) {}

    std::vector<std::string> generate(const Observation& obs, int n, double temperature) override;

private:
    std::mutex mu_;
    std::mt19937_64 rng_;
};

// Predicts Gaussian noise around the ground-truth center with a standard
// deviation proportional to the longest side of the current view, so zooming
// in shrinks the error. The gt center is given in full-image coordinates and
// mapped (and clamped) into crop views.
struct NoisyGrounderConfig {
    Point gt_center;
    double sigma_factor = 0.05;  // sigma = factor * max(view side)
    uint64_t seed = 0;
};

class NoisyGrounder : public Policy {
public:
    explicit NoisyGrounder(NoisyGrounderConfig cfg) : cfg_(cfg), rng_(cfg.seed) {}

    std::vector<std::string> generate(const Observation& obs, int n, double temperature) override;

private:
    NoisyGrounderConfig cfg_;
    std::mutex mu_;
    std::mt19937_64 rng_;
};

// Toy differentiable grounder: a G x G grid of trainable weights over the
// cell centers of a fixed screen. Logits are the weights passed through an
// optional fixed local smoothing kernel (radius 0 keeps the grid tabular);
// the kernel is the desk-scale stand-in for spatial generalization. A crop
// observation restricts the softmax to cells whose centers lie inside the
// window. Emitted coordinates are view-relative.
struct GridSoftmaxConfig {
    int grid = 8;
    ScreenDims screen{1024, 1024};
    double temperature = 1.0;
    int smooth_radius = 0;
    double smooth_sigma = 1.2;  // in cells, used when smooth_radius > 0
    uint64_t seed = 0;
};

class GridSoftmaxPolicy : public TrainablePolicy {
public:
    explicit GridSoftmaxPolicy(GridSoftmaxConfig cfg);

    std::vector<std::string> generate(const Observation& obs, int n, double temperature) override;

    size_t param_count() const override { return theta_.size(); }
    std::vector<double> parameters() const override { return theta_; }
    void set_parameters(const std::vector<double>& params) override;
    void add_to_parameters(const std::vector<double>& delta) override;

    double log_prob(const Observation& obs, const std::string& output) const override;
    std::vector<double> grad_log_prob(const Observation& obs,
                                      const std::string& output) const override;

    int grid() const { return cfg_.grid; }
    const ScreenDims& screen() const { return cfg_.screen; }
    Point cell_center(int index) const;
    // Full-frame cell probabilities at the policy's configured temperature.
    std::vector<double> full_distribution() const;

private:
    std::vector<double> logits() const;
    std::vector<int> mask_for(const Observation& obs) const;
    int cell_index_of(const Point& full_point) const;

    GridSoftmaxConfig cfg_;
    mutable std::mutex rng_mu_;
    std::vector<double> theta_;
    std::vector<std::pair<double, int>> kernel_;  // (weight, di*G+dj flattened offsets)
    std::vector<std::pair<int, int>> kernel_offsets_;
    std::vector<double> kernel_weights_;
    mutable std::mt19937_64 rng_;
};

struct ZoomError {
    std::string message;
};

struct ZoomInResult {
    Point initial;
    Point refined;
    CropWindow crop;
};

// Predict on the full image, crop around the prediction, re-predict on the
// crop and map the refined point back to full coordinates. Both points are
// returned. Yields ZoomError if either pass produces no location action.
std::variant<ZoomInResult, ZoomError> zoom_in_infer(Policy& policy, const Observation& obs,
                                                    const CropConfig& crop_cfg = {},
                                                    double temperature = 1.0);

// Point carried by a location-parameter action, if any.
std::optional<Point> location_of(const Action& a);

}  // namespace guire
