#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nff/features.hpp"

namespace nff {

/// Linear softmax classifier over hashed span features: p = softmax(W x + b).
/// Label 0 is always the non-entity label.
///
/// Weights are stored feature-major (all labels of one feature adjacent) and
/// behind a global scale, so that L2 decay costs O(1) per step instead of
/// touching every parameter.
class SpanClassifier {
public:
    SpanClassifier() = default;
    /// entity_labels must not contain the non-entity label.
    SpanClassifier(std::vector<std::string> entity_labels, std::size_t dim);

    std::size_t num_labels() const { return labels_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t label_index(const std::string& label) const;

    double weight(std::size_t label, std::size_t feature) const { return scale_ * raw_[feature * labels_.size() + label]; }
    void set_weight(std::size_t label, std::size_t feature, double value);
    double bias(std::size_t label) const { return bias_[label]; }
    void set_bias(std::size_t label, double value) { bias_[label] = value; }

    /// W x + b.
    std::vector<double> scores(const SpanFeatures& x) const;
    void scores(const SpanFeatures& x, std::span<double> out) const;

    /// Squared Frobenius norm of W (bias excluded).
    double weight_norm_sq() const;

    /// W <- W * factor in O(1).
    void scale_weights(double factor);
    /// W[:, feature] += delta[:] for one feature.
    void add_to_weights(std::size_t feature, std::span<const double> delta);

    /// Folds the pending scale into the stored weights.
    void normalize();

    bool all_finite() const;

    /// Compares effective parameters exactly.
    friend bool operator==(const SpanClassifier& a, const SpanClassifier& b);

private:
    void recompute_norm();

    std::vector<std::string> labels_;
    std::size_t dim_ = 0;
    std::vector<double> raw_;
    std::vector<double> bias_;
    double scale_ = 1.0;
    double raw_norm_sq_ = 0.0;  // sum of raw_ squared, tracked incrementally
};

/// softmax(W x + b), computed stably.
std::vector<double> predict_probs(const SpanClassifier& model, const SpanFeatures& features);

void softmax_inplace(std::span<double> scores);

struct Example {
    std::reference_wrapper<const SpanFeatures> features;
    std::size_t target;
};

/// Gradient of the batch loss. The data term is sparse over the features the
/// batch touched; the L2 term l2 * W is dense and left implicit.
struct LossGrad {
    double loss = 0.0;           // mean cross-entropy + l2/2 * |W|^2
    double cross_entropy = 0.0;  // mean cross-entropy alone
    double l2 = 0.0;
    std::vector<double> bias;                // num_labels
    std::vector<std::uint32_t> features;     // touched features, increasing
    std::vector<double> weights;             // features.size() x num_labels

    /// d loss / d W[label, feature], including the L2 term.
    double weight_partial(const SpanClassifier& model, std::size_t label, std::size_t feature) const;
};

/// Mean cross-entropy over a non-empty batch plus (l2 / 2) * |W|^2.
LossGrad loss_and_grad(const SpanClassifier& model, std::span<const Example> batch, double l2);

/// Plain gradient step: W <- W - lr * (data_grad + l2 * W), b <- b - lr * bias_grad.
void apply_gradient(SpanClassifier& model, const LossGrad& grad, double learning_rate);

}  // namespace nff
