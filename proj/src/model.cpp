#include "nff/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

namespace nff {

namespace {
// Rescale the stored weights before the global scale underflows.
constexpr double kMinScale = 1e-6;
}  // namespace

SpanClassifier::SpanClassifier(std::vector<std::string> entity_labels, std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error("feature dimension must be positive");
    labels_.reserve(entity_labels.size() + 1);
    labels_.emplace_back(kNonEntity);
    for (auto& label : entity_labels) {
        if (label == kNonEntity) throw Error("entity label set contains the non-entity label");
        if (std::find(labels_.begin(), labels_.end(), label) != labels_.end()) {
            throw Error(fmt::format("duplicate label '{}'", label));
        }
        labels_.push_back(std::move(label));
    }
    if (labels_.size() < 2) throw Error("classifier needs at least one entity label");
    raw_.assign(labels_.size() * dim_, 0.0);
    bias_.assign(labels_.size(), 0.0);
}

std::size_t SpanClassifier::label_index(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw Error(fmt::format("label '{}' is not in the model's label set", label));
    return static_cast<std::size_t>(it - labels_.begin());
}

void SpanClassifier::set_weight(std::size_t label, std::size_t feature, double value) {
    raw_[feature * labels_.size() + label] = value / scale_;
    recompute_norm();
}

void SpanClassifier::recompute_norm() {
    raw_norm_sq_ = 0.0;
    for (double w : raw_) raw_norm_sq_ += w * w;
}

std::vector<double> SpanClassifier::scores(const SpanFeatures& x) const {
    std::vector<double> out(labels_.size());
    scores(x, out);
    return out;
}

void SpanClassifier::scores(const SpanFeatures& x, std::span<double> out) const {
    const std::size_t c = labels_.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < x.indices.size(); ++k) {
        const double* w = &raw_[static_cast<std::size_t>(x.indices[k]) * c];
        const double v = x.values[k];
        for (std::size_t y = 0; y < c; ++y) out[y] += w[y] * v;
    }
    for (std::size_t y = 0; y < c; ++y) out[y] = out[y] * scale_ + bias_[y];
}

double SpanClassifier::weight_norm_sq() const { return raw_norm_sq_ * scale_ * scale_; }

void SpanClassifier::scale_weights(double factor) {
    if (factor == 0.0) {
        std::fill(raw_.begin(), raw_.end(), 0.0);
        raw_norm_sq_ = 0.0;
        scale_ = 1.0;
        return;
    }
    scale_ *= factor;
    if (std::abs(scale_) < kMinScale) normalize();
}

void SpanClassifier::add_to_weights(std::size_t feature, std::span<const double> delta) {
    double* w = &raw_[feature * labels_.size()];
    for (std::size_t y = 0; y < labels_.size(); ++y) {
        const double updated = w[y] + delta[y] / scale_;
        raw_norm_sq_ += updated * updated - w[y] * w[y];
        w[y] = updated;
    }
}

void SpanClassifier::normalize() {
    if (scale_ == 1.0) return;
    for (double& w : raw_) w *= scale_;
    scale_ = 1.0;
    recompute_norm();
}

bool SpanClassifier::all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::isfinite(scale_) && std::all_of(raw_.begin(), raw_.end(), finite) &&
           std::all_of(bias_.begin(), bias_.end(), finite);
}

bool operator==(const SpanClassifier& a, const SpanClassifier& b) {
    if (a.labels_ != b.labels_ || a.dim_ != b.dim_ || a.bias_ != b.bias_) return false;
    for (std::size_t i = 0; i < a.raw_.size(); ++i) {
        if (a.raw_[i] * a.scale_ != b.raw_[i] * b.scale_) return false;
    }
    return true;
}

void softmax_inplace(std::span<double> scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) {
        s = std::exp(s - top);
        total += s;
    }
    for (double& s : scores) s /= total;
}

std::vector<double> predict_probs(const SpanClassifier& model, const SpanFeatures& features) {
    auto p = model.scores(features);
    softmax_inplace(p);
    return p;
}

double LossGrad::weight_partial(const SpanClassifier& model, std::size_t label, std::size_t feature) const {
    double g = l2 * model.weight(label, feature);
    auto it = std::lower_bound(features.begin(), features.end(), static_cast<std::uint32_t>(feature));
    if (it != features.end() && *it == feature) {
        g += weights[static_cast<std::size_t>(it - features.begin()) * model.num_labels() + label];
    }
    return g;
}

LossGrad loss_and_grad(const SpanClassifier& model, std::span<const Example> batch, double l2) {
    if (batch.empty()) throw Error("loss_and_grad needs a non-empty batch");
    const std::size_t c = model.num_labels();
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    LossGrad g;
    g.l2 = l2;
    g.bias.assign(c, 0.0);

    // Slot per touched feature, assigned in sorted order so the result does
    // not depend on batch order.
    for (const auto& ex : batch) {
        const auto& idx = ex.features.get().indices;
        g.features.insert(g.features.end(), idx.begin(), idx.end());
    }
    std::sort(g.features.begin(), g.features.end());
    g.features.erase(std::unique(g.features.begin(), g.features.end()), g.features.end());
    std::unordered_map<std::uint32_t, std::size_t> slot;
    slot.reserve(g.features.size());
    for (std::size_t k = 0; k < g.features.size(); ++k) slot.emplace(g.features[k], k);
    g.weights.assign(g.features.size() * c, 0.0);

    std::vector<double> p(c);
    double ce = 0.0;
    for (const auto& ex : batch) {
        const SpanFeatures& x = ex.features.get();
        if (ex.target >= c) throw Error(fmt::format("target label index {} out of range", ex.target));
        model.scores(x, p);
        const double top = *std::max_element(p.begin(), p.end());
        double total = 0.0;
        for (double s : p) total += std::exp(s - top);
        const double log_z = top + std::log(total);
        ce += log_z - p[ex.target];

        for (std::size_t y = 0; y < c; ++y) p[y] = std::exp(p[y] - log_z);
        p[ex.target] -= 1.0;  // d ce / d score
        for (std::size_t y = 0; y < c; ++y) g.bias[y] += p[y] * inv_n;
        for (std::size_t k = 0; k < x.indices.size(); ++k) {
            double* row = &g.weights[slot.at(x.indices[k]) * c];
            const double v = x.values[k] * inv_n;
            for (std::size_t y = 0; y < c; ++y) row[y] += p[y] * v;
        }
    }
    g.cross_entropy = ce * inv_n;
    g.loss = g.cross_entropy + (l2 > 0.0 ? 0.5 * l2 * model.weight_norm_sq() : 0.0);
    return g;
}

void apply_gradient(SpanClassifier& model, const LossGrad& grad, double learning_rate) {
    const std::size_t c = model.num_labels();
    if (grad.l2 > 0.0) model.scale_weights(1.0 - learning_rate * grad.l2);
    std::vector<double> delta(c);
    for (std::size_t k = 0; k < grad.features.size(); ++k) {
        for (std::size_t y = 0; y < c; ++y) delta[y] = -learning_rate * grad.weights[k * c + y];
        model.add_to_weights(grad.features[k], delta);
    }
    for (std::size_t y = 0; y < c; ++y) model.set_bias(y, model.bias(y) - learning_rate * grad.bias[y]);
}

}  // namespace nff
