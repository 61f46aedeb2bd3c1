#include "nff/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "json.hpp"
#include "nff/corpus.hpp"
#include "nff/eval.hpp"

namespace nff {

void TrainConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(fmt::format("gamma {} is outside [0, 1]", gamma));
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(fmt::format("learning rate must be positive, got {}", learning_rate));
    }
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(fmt::format("L2 penalty must be non-negative, got {}", l2));
    if (epochs < 1) throw Error("epochs must be at least 1");
    if (batch_size < 1) throw Error("batch size must be at least 1");
    if (max_span_len && *max_span_len < 1) throw Error("span-length cap must be at least 1");
    if (feature_dim < 1 || feature_dim > (std::size_t{1} << 32)) throw Error("feature dimension out of range");
}

namespace {

// Position of s in enumerate_spans order.
std::size_t span_index(std::size_t length, const Span& s) {
    return span_count(length, s.length() - 1) + s.start;
}

const std::string& label_of(const std::vector<Entity>& sorted_gold, const Span& s) {
    static const std::string kNone = kNonEntity;
    auto it = std::lower_bound(sorted_gold.begin(), sorted_gold.end(), s,
                               [](const Entity& e, const Span& key) { return e.span < key; });
    return it != sorted_gold.end() && it->span == s ? it->label : kNone;
}

}  // namespace

std::vector<TrainingSample> select_training_spans(const SpanPartition& partition, const std::vector<Entity>& gold,
                                                  double gamma, Rng& rng, std::size_t sentence_index) {
    std::vector<Entity> sorted = gold;
    std::sort(sorted.begin(), sorted.end());
    std::vector<TrainingSample> samples;
    samples.reserve(partition.out.size());
    for (const Span& s : partition.all) {
        if (partition.is_within(s)) {
            if (rng.bernoulli(gamma)) samples.push_back({sentence_index, s, kNonEntity});
        } else {
            samples.push_back({sentence_index, s, label_of(sorted, s)});
        }
    }
    return samples;
}

std::vector<TrainingSample> gold_training_spans(const AnnotatedSentence& sentence, std::optional<std::size_t> max_len,
                                                std::size_t sentence_index) {
    std::vector<TrainingSample> samples;
    for (const Span& s : enumerate_spans(sentence.size(), max_len)) {
        samples.push_back({sentence_index, s, label_of(sentence.entities, s)});
    }
    return samples;
}

std::vector<Entity> decode_features(const SpanClassifier& model, std::size_t length,
                                    const std::vector<SpanFeatures>& features, std::optional<std::size_t> max_len) {
    const auto spans = enumerate_spans(length, max_len);
    if (spans.size() != features.size()) throw Error("feature count does not match span count");
    std::vector<Entity> out;
    std::vector<double> scores(model.num_labels());
    for (std::size_t k = 0; k < spans.size(); ++k) {
        model.scores(features[k], scores);
        const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
        if (best != 0) out.push_back({spans[k], model.labels()[best]});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Entity> decode(const SpanClassifier& model, const std::vector<std::string>& tokens,
                           std::optional<std::size_t> max_len) {
    return decode_features(model, tokens.size(), featurize_sentence(tokens, max_len, model.dim()), max_len);
}

std::vector<AnnotatedSentence> predict(const SpanClassifier& model, const std::vector<AnnotatedSentence>& sentences,
                                       std::optional<std::size_t> max_len) {
    std::vector<AnnotatedSentence> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
        AnnotatedSentence p = s;
        p.entities = decode(model, s.tokens, max_len);
        out.push_back(std::move(p));
    }
    return out;
}

TrainResult train(const std::vector<AnnotatedSentence>& train_split, const std::vector<AnnotatedSentence>& dev_split,
                  const TrainConfig& config) {
    config.validate();
    if (!config.gold_supervision) {
        for (const auto& s : train_split) {
            if (!is_flat(s)) {
                throw NotFlatError(fmt::format(
                    "training sentence '{}' contains nested entities; run flatten on the training data first "
                    "(or enable gold supervision to train on nested annotations)",
                    s.id));
            }
        }
    }
    auto labels = collect_labels(train_split);
    if (labels.empty()) throw Error("training split has no entities");

    const auto cap = config.max_span_len;
    std::vector<std::vector<SpanFeatures>> train_features;
    std::vector<SpanPartition> partitions;
    train_features.reserve(train_split.size());
    for (const auto& s : train_split) {
        train_features.push_back(featurize_sentence(s.tokens, cap, config.feature_dim));
        if (!config.gold_supervision) partitions.push_back(partition_spans(s, cap));
    }
    std::vector<std::vector<SpanFeatures>> dev_features;
    dev_features.reserve(dev_split.size());
    for (const auto& s : dev_split) dev_features.push_back(featurize_sentence(s.tokens, cap, config.feature_dim));

    TrainResult result{SpanClassifier(labels, config.feature_dim), {}, 0};
    SpanClassifier model = result.model;
    Rng rng(config.seed);
    double best_f1 = -1.0;

    std::vector<Example> examples;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        examples.clear();
        for (std::size_t i = 0; i < train_split.size(); ++i) {
            const auto& sentence = train_split[i];
            const auto samples = config.gold_supervision
                                     ? gold_training_spans(sentence, cap, i)
                                     : select_training_spans(partitions[i], sentence.entities, config.gamma, rng, i);
            for (const auto& sample : samples) {
                examples.push_back({std::cref(train_features[i][span_index(sentence.size(), sample.span)]),
                                    model.label_index(sample.label)});
            }
        }
        rng.shuffle(examples.begin(), examples.end());

        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < examples.size(); begin += config.batch_size) {
            const std::size_t end = std::min(examples.size(), begin + config.batch_size);
            const std::span<const Example> batch(examples.data() + begin, end - begin);
            const LossGrad grad = loss_and_grad(model, batch, config.l2);
            loss_sum += grad.cross_entropy * static_cast<double>(batch.size());
            apply_gradient(model, grad, config.learning_rate);
        }
        if (!model.all_finite()) throw Error(fmt::format("training diverged in epoch {}", epoch));

        std::vector<AnnotatedSentence> dev_pred = dev_split;
        for (std::size_t i = 0; i < dev_split.size(); ++i) {
            dev_pred[i].entities = decode_features(model, dev_split[i].size(), dev_features[i], cap);
        }
        // A flat dev split has no gold inside entities, so only its
        // out-of-entity spans can judge a nested-from-flat model.
        double dev_f1 = 0.0;
        if (!dev_split.empty()) {
            const EvalReport report = partitioned_eval(dev_split, dev_pred);
            dev_f1 = config.gold_supervision ? report.overall.f1() : report.out.f1();
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.samples = examples.size();
        stats.train_loss = examples.empty() ? 0.0 : loss_sum / static_cast<double>(examples.size());
        stats.dev_f1 = dev_f1;
        result.history.push_back(stats);

        if (dev_f1 > best_f1) {
            best_f1 = dev_f1;
            result.best_epoch = epoch;
            model.normalize();
            result.model = model;
        }
    }
    result.model.normalize();
    return result;
}

// ---- checkpoints ------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'N', 'F', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T value) {
    if constexpr (std::endian::native == std::endian::big) {
        char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        std::reverse(bytes, bytes + sizeof(T));
        out.append(bytes, sizeof(T));
    } else {
        out.append(reinterpret_cast<const char*>(&value), sizeof(T));
    }
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos) {
    if (pos + sizeof(T) > bytes.size()) throw Error("checkpoint is truncated");
    char buffer[sizeof(T)];
    std::memcpy(buffer, bytes.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buffer, buffer + sizeof(T));
    pos += sizeof(T);
    T value;
    std::memcpy(&value, buffer, sizeof(T));
    return value;
}

nlohmann::ordered_json config_to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["gamma"] = c.gamma;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["l2"] = c.l2;
    j["seed"] = c.seed;
    j["max_span_len"] = c.max_span_len ? nlohmann::ordered_json(*c.max_span_len) : nlohmann::ordered_json(nullptr);
    j["feature_dim"] = c.feature_dim;
    j["gold_supervision"] = c.gold_supervision;
    return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.l2 = j.at("l2").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("max_span_len").is_null()) c.max_span_len = j.at("max_span_len").get<std::size_t>();
    c.feature_dim = j.at("feature_dim").get<std::size_t>();
    c.gold_supervision = j.at("gold_supervision").get<bool>();
    return c;
}

}  // namespace

std::string serialize_checkpoint(const SpanClassifier& model, const TrainConfig& config) {
    nlohmann::ordered_json header;
    header["format"] = "nff-span-classifier";
    header["labels"] = model.labels();
    header["dim"] = model.dim();
    header["config"] = config_to_json(config);
    const std::string text = header.dump();

    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, text.size());
    out += text;
    out.reserve(out.size() + 8 * model.num_labels() * (model.dim() + 1));
    for (std::size_t y = 0; y < model.num_labels(); ++y) put<double>(out, model.bias(y));
    for (std::size_t y = 0; y < model.num_labels(); ++y) {
        for (std::size_t f = 0; f < model.dim(); ++f) put<double>(out, model.weight(y, f));
    }
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw Error("not a model checkpoint (bad magic)");
    }
    std::size_t pos = sizeof(kMagic);
    const auto version = get<std::uint32_t>(bytes, pos);
    if (version != kVersion) throw Error(fmt::format("unsupported checkpoint version {}", version));
    const auto header_len = get<std::uint64_t>(bytes, pos);
    if (pos + header_len > bytes.size()) throw Error("checkpoint is truncated");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(pos, header_len));
    } catch (const nlohmann::json::exception& err) {
        throw Error(fmt::format("checkpoint header is not valid JSON: {}", err.what()));
    }
    pos += header_len;

    Checkpoint ckpt;
    std::vector<std::string> labels;
    std::size_t dim = 0;
    try {
        labels = header.at("labels").get<std::vector<std::string>>();
        dim = header.at("dim").get<std::size_t>();
        ckpt.config = config_from_json(header.at("config"));
    } catch (const nlohmann::json::exception& err) {
        throw Error(fmt::format("checkpoint header is malformed: {}", err.what()));
    }
    if (labels.size() < 2 || labels.front() != kNonEntity) {
        throw Error("checkpoint label set must start with the non-entity label and have an entity label");
    }
    if (dim != ckpt.config.feature_dim) {
        throw Error(fmt::format("checkpoint dimension {} disagrees with its config ({})", dim, ckpt.config.feature_dim));
    }
    const std::size_t c = labels.size();
    const std::size_t expected = pos + 8 * c * (dim + 1);
    if (bytes.size() != expected) {
        throw Error(fmt::format("checkpoint payload is {} bytes, expected {} for {} labels x {} features",
                                bytes.size() - pos, expected - pos, c, dim));
    }

    labels.erase(labels.begin());
    ckpt.model = SpanClassifier(std::move(labels), dim);
    for (std::size_t y = 0; y < c; ++y) ckpt.model.set_bias(y, get<double>(bytes, pos));
    std::vector<double> column(c);
    std::vector<double> weights(c * dim);
    for (std::size_t y = 0; y < c; ++y) {
        for (std::size_t f = 0; f < dim; ++f) weights[f * c + y] = get<double>(bytes, pos);
    }
    for (std::size_t f = 0; f < dim; ++f) {
        std::copy_n(&weights[f * c], c, column.begin());
        ckpt.model.add_to_weights(f, column);
    }
    if (!ckpt.model.all_finite()) throw Error("checkpoint contains non-finite parameters");
    return ckpt;
}

void save_checkpoint(const std::string& path, const SpanClassifier& model, const TrainConfig& config) {
    write_text_file(path, serialize_checkpoint(model, config));
}

Checkpoint load_checkpoint(const std::string& path) {
    try {
        return deserialize_checkpoint(read_text_file(path));
    } catch (const Error& err) {
        throw Error(fmt::format("{}: {}", path, err.what()));
    }
}

}  // namespace nff
