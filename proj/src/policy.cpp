#include "guire/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace guire {

ScreenDims view_dims(const Observation& obs) {
    if (const auto* e = std::get_if<ElementsScreenView>(&obs.screen)) return e->dims;
    return std::get<ImageScreenView>(obs.screen).dims;
}

std::optional<CropWindow> view_window(const Observation& obs) {
    if (const auto* img = std::get_if<ImageScreenView>(&obs.screen)) return img->window;
    return std::nullopt;
}

std::optional<Point> location_of(const Action& a) {
    if (const Point* p = std::get_if<Point>(&a.params)) return *p;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// ScriptedOracle

std::vector<std::string> ScriptedOracle::generate(const Observation& obs, int n,
                                                  double /*temperature*/) {
    const auto* view = std::get_if<ElementsScreenView>(&obs.screen);
    if (!view) throw MissingScriptError("scripted oracle needs an element-list view");
    auto it = scripts_.find({obs.instruction, view->screen_id});
    if (it == scripts_.end())
        throw MissingScriptError("no script for goal \"" + obs.instruction + "\" on screen " +
                                 view->screen_id);
    return std::vector<std::string>(static_cast<size_t>(n), it->second);
}

// ---------------------------------------------------------------------------
// UniformRandomPolicy

std::vector<std::string> UniformRandomPolicy::generate(const Observation& obs, int n,
                                                       double /*temperature*/) {
    const std::lock_guard<std::mutex> lock(mu_);
    const ScreenDims dims = view_dims(obs);
    std::uniform_int_distribution<int64_t> dx(0, dims.width - 1);
    std::uniform_int_distribution<int64_t> dy(0, dims.height - 1);
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Action a{ActionType::tap, Point{dx(rng_), dy(rng_)}};
        out.push_back("Action: " + serialize_action(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// NoisyGrounder

std::vector<std::string> NoisyGrounder::generate(const Observation& obs, int n,
                                                 double /*temperature*/) {
    const std::lock_guard<std::mutex> lock(mu_);
    const ScreenDims dims = view_dims(obs);
    Point target = cfg_.gt_center;
    if (auto window = view_window(obs)) {
        target = Point{target.x - window->origin.x, target.y - window->origin.y};
    }
    target.x = std::clamp<int64_t>(target.x, 0, dims.width - 1);
    target.y = std::clamp<int64_t>(target.y, 0, dims.height - 1);

    const double sigma = cfg_.sigma_factor * static_cast<double>(std::max(dims.width, dims.height));
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int64_t x = std::llround(static_cast<double>(target.x) + noise(rng_));
        int64_t y = std::llround(static_cast<double>(target.y) + noise(rng_));
        x = std::clamp<int64_t>(x, 0, dims.width - 1);
        y = std::clamp<int64_t>(y, 0, dims.height - 1);
        Action a{ActionType::locate, Point{x, y}};
        out.push_back("Action: " + serialize_action(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// GridSoftmaxPolicy

GridSoftmaxPolicy::GridSoftmaxPolicy(GridSoftmaxConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
    if (cfg_.grid < 2) throw std::invalid_argument("GridSoftmaxPolicy: grid must be >= 2");
    if (!valid(cfg_.screen)) throw std::invalid_argument("GridSoftmaxPolicy: invalid screen dims");
    if (cfg_.temperature <= 0.0)
        throw std::invalid_argument("GridSoftmaxPolicy: temperature must be positive");
    theta_.assign(static_cast<size_t>(cfg_.grid) * cfg_.grid, 0.0);

    const int r = std::max(cfg_.smooth_radius, 0);
    double sum = 0.0;
    for (int di = -r; di <= r; ++di) {
        for (int dj = -r; dj <= r; ++dj) {
            const double w =
                r == 0 ? 1.0
                       : std::exp(-(di * di + dj * dj) /
                                  (2.0 * cfg_.smooth_sigma * cfg_.smooth_sigma));
            kernel_offsets_.emplace_back(di, dj);
            kernel_weights_.push_back(w);
            sum += w;
        }
    }
    for (double& w : kernel_weights_) w /= sum;
}

Point GridSoftmaxPolicy::cell_center(int index) const {
    const int G = cfg_.grid;
    const int i = index / G;
    const int j = index % G;
    const int64_t cx = (2 * static_cast<int64_t>(i) + 1) * cfg_.screen.width / (2 * G);
    const int64_t cy = (2 * static_cast<int64_t>(j) + 1) * cfg_.screen.height / (2 * G);
    return Point{cx, cy};
}

std::vector<double> GridSoftmaxPolicy::logits() const {
    const int G = cfg_.grid;
    std::vector<double> lg(theta_.size(), 0.0);
    for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
            const double v = theta_[static_cast<size_t>(i) * G + j];
            if (v == 0.0) continue;
            for (size_t k = 0; k < kernel_offsets_.size(); ++k) {
                const int ii = i + kernel_offsets_[k].first;
                const int jj = j + kernel_offsets_[k].second;
                if (ii < 0 || ii >= G || jj < 0 || jj >= G) continue;
                lg[static_cast<size_t>(ii) * G + jj] += kernel_weights_[k] * v;
            }
        }
    }
    return lg;
}

std::vector<int> GridSoftmaxPolicy::mask_for(const Observation& obs) const {
    const ScreenDims dims = view_dims(obs);
    const auto window = view_window(obs);
    if (!window) {
        if (dims != cfg_.screen)
            throw std::invalid_argument("GridSoftmaxPolicy: observation dims do not match screen");
        std::vector<int> all(theta_.size());
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    std::vector<int> mask;
    for (int idx = 0; idx < static_cast<int>(theta_.size()); ++idx)
        if (window_contains(*window, cell_center(idx))) mask.push_back(idx);
    if (mask.empty())
        throw std::invalid_argument("GridSoftmaxPolicy: crop window contains no cell center");
    return mask;
}

namespace {

std::vector<double> masked_softmax(const std::vector<double>& logits, const std::vector<int>& mask,
                                   double temperature) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i : mask) mx = std::max(mx, logits[static_cast<size_t>(i)] / temperature);
    std::vector<double> p(mask.size());
    double sum = 0.0;
    for (size_t k = 0; k < mask.size(); ++k) {
        p[k] = std::exp(logits[static_cast<size_t>(mask[k])] / temperature - mx);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace

std::vector<std::string> GridSoftmaxPolicy::generate(const Observation& obs, int n,
                                                     double temperature) {
    if (temperature <= 0.0) temperature = cfg_.temperature;
    const auto mask = mask_for(obs);
    const auto lg = logits();
    const auto probs = masked_softmax(lg, mask, temperature);
    const auto window = view_window(obs);

    std::discrete_distribution<size_t> pick(probs.begin(), probs.end());
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(n));
    const std::lock_guard<std::mutex> lock(rng_mu_);
    for (int s = 0; s < n; ++s) {
        const int idx = mask[pick(rng_)];
        Point pt = cell_center(idx);
        if (window) pt = to_crop_coords(*window, pt);
        Action a{ActionType::locate, pt};
        out.push_back("Action: " + serialize_action(a));
    }
    return out;
}

void GridSoftmaxPolicy::set_parameters(const std::vector<double>& params) {
    if (params.size() != theta_.size())
        throw std::invalid_argument("GridSoftmaxPolicy: wrong parameter count");
    theta_ = params;
}

void GridSoftmaxPolicy::add_to_parameters(const std::vector<double>& delta) {
    if (delta.size() != theta_.size())
        throw std::invalid_argument("GridSoftmaxPolicy: wrong delta size");
    for (size_t i = 0; i < theta_.size(); ++i) theta_[i] += delta[i];
}

int GridSoftmaxPolicy::cell_index_of(const Point& full_point) const {
    for (int idx = 0; idx < static_cast<int>(theta_.size()); ++idx)
        if (cell_center(idx) == full_point) return idx;
    return -1;
}

double GridSoftmaxPolicy::log_prob(const Observation& obs, const std::string& output) const {
    const auto cand = extract_candidate(output);
    if (!ok(cand)) throw std::invalid_argument("GridSoftmaxPolicy::log_prob: unparseable output");
    auto pt = location_of(value(cand).action);
    if (!pt) throw std::invalid_argument("GridSoftmaxPolicy::log_prob: output has no location");
    const auto window = view_window(obs);
    Point full = window ? from_crop_coords(*window, *pt) : *pt;
    const int idx = cell_index_of(full);
    if (idx < 0)
        throw std::invalid_argument("GridSoftmaxPolicy::log_prob: point is not a cell center");

    const auto mask = mask_for(obs);
    const auto lg = logits();
    const double t = cfg_.temperature;
    double mx = -std::numeric_limits<double>::infinity();
    for (int i : mask) mx = std::max(mx, lg[static_cast<size_t>(i)] / t);
    double lse = 0.0;
    bool in_mask = false;
    for (int i : mask) {
        lse += std::exp(lg[static_cast<size_t>(i)] / t - mx);
        in_mask |= (i == idx);
    }
    if (!in_mask)
        throw std::invalid_argument("GridSoftmaxPolicy::log_prob: point outside the view mask");
    return lg[static_cast<size_t>(idx)] / t - (mx + std::log(lse));
}

std::vector<double> GridSoftmaxPolicy::grad_log_prob(const Observation& obs,
                                                     const std::string& output) const {
    const auto cand = extract_candidate(output);
    if (!ok(cand))
        throw std::invalid_argument("GridSoftmaxPolicy::grad_log_prob: unparseable output");
    auto pt = location_of(value(cand).action);
    if (!pt) throw std::invalid_argument("GridSoftmaxPolicy::grad_log_prob: output has no location");
    const auto window = view_window(obs);
    Point full = window ? from_crop_coords(*window, *pt) : *pt;
    const int idx = cell_index_of(full);
    if (idx < 0)
        throw std::invalid_argument("GridSoftmaxPolicy::grad_log_prob: point is not a cell center");

    const auto mask = mask_for(obs);
    const auto lg = logits();
    const auto probs = masked_softmax(lg, mask, cfg_.temperature);

    // d log pi / d logit, then pulled back through the smoothing kernel
    std::vector<double> glog(theta_.size(), 0.0);
    glog[static_cast<size_t>(idx)] += 1.0 / cfg_.temperature;
    for (size_t k = 0; k < mask.size(); ++k)
        glog[static_cast<size_t>(mask[k])] -= probs[k] / cfg_.temperature;

    const int G = cfg_.grid;
    std::vector<double> grad(theta_.size(), 0.0);
    for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < kernel_offsets_.size(); ++k) {
                const int ii = i + kernel_offsets_[k].first;
                const int jj = j + kernel_offsets_[k].second;
                if (ii < 0 || ii >= G || jj < 0 || jj >= G) continue;
                acc += kernel_weights_[k] * glog[static_cast<size_t>(ii) * G + jj];
            }
            grad[static_cast<size_t>(i) * G + j] = acc;
        }
    }
    return grad;
}

std::vector<double> GridSoftmaxPolicy::full_distribution() const {
    std::vector<int> all(theta_.size());
    std::iota(all.begin(), all.end(), 0);
    return masked_softmax(logits(), all, cfg_.temperature);
}

// ---------------------------------------------------------------------------
// zoom_in_infer

std::variant<ZoomInResult, ZoomError> zoom_in_infer(Policy& policy, const Observation& obs,
                                                    const CropConfig& crop_cfg,
                                                    double temperature) {
    const ScreenDims dims = view_dims(obs);
    if (!valid(dims)) return ZoomError{"observation has no valid image dims"};

    auto first = policy.generate(obs, 1, temperature);
    auto cand = extract_candidate(first.at(0));
    if (!ok(cand)) return ZoomError{"initial pass: " + error(cand).message};
    auto initial = location_of(value(cand).action);
    if (!initial) return ZoomError{"initial pass yielded a non-location action"};

    Point center{std::clamp<int64_t>(initial->x, 0, dims.width - 1),
                 std::clamp<int64_t>(initial->y, 0, dims.height - 1)};
    const CropWindow crop = make_crop(center, dims, crop_cfg);

    Observation crop_obs = obs;
    if (auto* img = std::get_if<ImageScreenView>(&crop_obs.screen)) {
        img->dims = crop.dims;
        img->window = crop;
    } else {
        ImageScreenView view;
        view.dims = crop.dims;
        view.window = crop;
        crop_obs.screen = view;
    }

    auto second = policy.generate(crop_obs, 1, temperature);
    auto cand2 = extract_candidate(second.at(0));
    if (!ok(cand2)) return ZoomError{"crop pass: " + error(cand2).message};
    auto local = location_of(value(cand2).action);
    if (!local) return ZoomError{"crop pass yielded a non-location action"};

    return ZoomInResult{*initial, from_crop_coords(crop, *local), crop};
}

}  // namespace guire
