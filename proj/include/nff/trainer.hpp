#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nff/model.hpp"
#include "nff/rng.hpp"
#include "nff/span.hpp"

namespace nff {

/// Negative sampling rate applied to within-entity spans by default.
inline constexpr double kDefaultGamma = 0.01;

struct TrainConfig {
    double gamma = kDefaultGamma;  // 1: full negative, 0: full ignoring
    std::size_t epochs = 20;
    std::size_t batch_size = 256;
    double learning_rate = 0.5;
    double l2 = 1e-6;
    std::uint64_t seed = 0;
    std::optional<std::size_t> max_span_len;
    std::size_t feature_dim = kDefaultFeatureDim;
    // Train on nested gold: every span labeled, gamma unused.
    bool gold_supervision = false;

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainingSample {
    std::size_t sentence = 0;  // index into the training split
    Span span;
    std::string label;         // entity label or kNonEntity
};

/// Samples for one sentence: every out-of-entity span once (entity spans with
/// their gold label, the rest as non-entity), plus each within-entity span as
/// a non-entity sample with probability gamma. Randomness is consumed only by
/// within-entity spans. Spans follow partition.all order.
std::vector<TrainingSample> select_training_spans(const SpanPartition& partition, const std::vector<Entity>& gold,
                                                  double gamma, Rng& rng, std::size_t sentence_index = 0);

/// Every span labeled from gold, nested entities included.
std::vector<TrainingSample> gold_training_spans(const AnnotatedSentence& sentence,
                                                std::optional<std::size_t> max_len, std::size_t sentence_index = 0);

/// Thrown when nested-from-flat training meets a sentence with nesting.
class NotFlatError : public Error {
public:
    using Error::Error;
};

struct EpochStats {
    std::size_t epoch = 0;
    std::size_t samples = 0;
    double train_loss = 0.0;  // mean cross-entropy over the epoch's samples
    double dev_f1 = 0.0;      // dev F1 used for model selection
};

struct TrainResult {
    SpanClassifier model;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
};

/// Mini-batch gradient descent, constant learning rate, L2 on W. Within-entity
/// samples are redrawn each epoch. Returns the parameters of the epoch with
/// the best dev F1 (earliest on ties): out-of-entity F1 when training
/// nested-from-flat, overall F1 under gold supervision.
TrainResult train(const std::vector<AnnotatedSentence>& train_split, const std::vector<AnnotatedSentence>& dev_split,
                  const TrainConfig& config);

/// Argmax label for every span; non-entity spans dropped. Nested and
/// overlapping predictions are allowed.
std::vector<Entity> decode(const SpanClassifier& model, const std::vector<std::string>& tokens,
                           std::optional<std::size_t> max_len = std::nullopt);
std::vector<Entity> decode_features(const SpanClassifier& model, std::size_t length,
                                    const std::vector<SpanFeatures>& features, std::optional<std::size_t> max_len);

/// Predictions for each sentence, tokens and ids copied.
std::vector<AnnotatedSentence> predict(const SpanClassifier& model, const std::vector<AnnotatedSentence>& sentences,
                                       std::optional<std::size_t> max_len);

// ---- checkpoints ------------------------------------------------------------

struct Checkpoint {
    SpanClassifier model;
    TrainConfig config;
};

/// Binary container: magic "NFFM", u32 version, u64 header length, JSON header
/// (labels, dim, config), then bias and weights as little-endian f64 in
/// label-major order.
std::string serialize_checkpoint(const SpanClassifier& model, const TrainConfig& config);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const SpanClassifier& model, const TrainConfig& config);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nff
