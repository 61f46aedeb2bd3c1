#pragma once

// Shared fixtures and brute-force oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <atomic>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "nff/eval.hpp"
#include "nff/model.hpp"
#include "nff/rng.hpp"
#include "nff/span.hpp"

namespace nff::testing {

// "Mr. John Smith graduated from New York University last year" with
// PER(1,2) and ORG(5,7); the nested LOC(5,6) is optional.
inline AnnotatedSentence worked_example(bool with_nested_loc = false) {
    AnnotatedSentence s;
    s.id = "ex";
    s.tokens = {"Mr.", "John", "Smith", "graduated", "from", "New", "York", "University", "last", "year"};
    s.entities = {{{1, 2}, "PER"}, {{5, 7}, "ORG"}};
    if (with_nested_loc) s.entities.push_back({{5, 6}, "LOC"});
    canonicalize(s);
    return s;
}

// Spelled-out containment test, kept independent of is_strictly_within.
inline bool oracle_within(std::size_t s, std::size_t e, std::size_t os, std::size_t oe) {
    const bool first = os <= s && s <= e && e < oe;
    const bool second = os < s && s <= e && e <= oe;
    return first || second;
}

struct OracleSets {
    std::set<std::pair<std::size_t, std::size_t>> all, within, out;
};

inline OracleSets oracle_partition(std::size_t length, const std::vector<Span>& entities) {
    OracleSets sets;
    for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t j = i; j < length; ++j) {
            sets.all.insert({i, j});
            bool inside = false;
            for (const auto& e : entities) inside = inside || oracle_within(i, j, e.start, e.end);
            (inside ? sets.within : sets.out).insert({i, j});
        }
    }
    return sets;
}

inline std::set<std::pair<std::size_t, std::size_t>> as_set(const std::vector<Span>& spans) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& s : spans) out.insert({s.start, s.end});
    return out;
}

inline Span random_span(Rng& rng, std::size_t length) {
    const std::size_t a = rng.below(length);
    const std::size_t b = rng.below(length);
    return {std::min(a, b), std::max(a, b)};
}

inline const std::vector<std::string>& test_labels() {
    static const std::vector<std::string> labels{"LOC", "MISC", "ORG", "PER"};
    return labels;
}

// Random sentence with up to max_entities random (possibly nested or
// overlapping) entities. Tokens include non-ASCII and punctuation.
inline AnnotatedSentence random_sentence(Rng& rng, std::size_t max_len = 12, std::size_t max_entities = 4,
                                         const std::string& id = "r") {
    static const std::vector<std::string> vocab{"the", "New", "York", "University", "Zürich", "\"quoted\"",
                                                "a\\b", "O", "42", "São", "-", "Tan", "Kong", "Yam", "東京"};
    AnnotatedSentence s;
    s.id = id;
    const std::size_t length = 1 + rng.below(max_len);
    for (std::size_t i = 0; i < length; ++i) s.tokens.push_back(vocab[rng.below(vocab.size())]);
    const std::size_t n = rng.below(max_entities + 1);
    std::set<Entity> entities;
    for (std::size_t k = 0; k < n; ++k) {
        entities.insert({random_span(rng, length), test_labels()[rng.below(test_labels().size())]});
    }
    s.entities.assign(entities.begin(), entities.end());
    return s;
}

// Random entity set over a sentence of the given length, labels drawn from
// {PER, ORG, LOC}.
inline std::vector<Entity> random_entities(Rng& rng, std::size_t length, std::size_t max_entities) {
    static const std::vector<std::string> labels{"PER", "ORG", "LOC"};
    std::set<Entity> entities;
    const std::size_t n = rng.below(max_entities + 1);
    for (std::size_t k = 0; k < n; ++k) entities.insert({random_span(rng, length), labels[rng.below(labels.size())]});
    return {entities.begin(), entities.end()};
}

inline SpanClassifier random_model(Rng& rng, std::size_t dim) {
    SpanClassifier model({"LOC", "ORG", "PER"}, dim);
    for (std::size_t f = 0; f < dim; ++f)
        for (std::size_t l = 0; l < model.num_labels(); ++l) model.set_weight(l, f, rng.uniform() * 2 - 1);
    for (std::size_t l = 0; l < model.num_labels(); ++l) model.set_bias(l, rng.uniform() * 2 - 1);
    return model;
}

inline SpanFeatures random_features(Rng& rng, std::size_t dim) {
    std::set<std::uint32_t> idx;
    const std::size_t n = 1 + rng.below(8);
    while (idx.size() < n) idx.insert(static_cast<std::uint32_t>(rng.below(dim)));
    SpanFeatures x;
    for (auto i : idx) {
        x.indices.push_back(i);
        x.values.push_back(rng.uniform() * 2 - 1);
    }
    return x;
}

// Reference loss computed directly from the definition.
inline double reference_loss(const SpanClassifier& m, const std::vector<SpanFeatures>& xs,
                      const std::vector<std::size_t>& ys, double l2) {
    double ce = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
        std::vector<double> z(m.num_labels());
        for (std::size_t l = 0; l < z.size(); ++l) {
            z[l] = m.bias(l);
            for (std::size_t k = 0; k < xs[n].size(); ++k) z[l] += m.weight(l, xs[n].indices[k]) * xs[n].values[k];
        }
        double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - mx);
        ce += -(z[ys[n]] - mx - std::log(sum));
    }
    double norm = 0.0;
    for (std::size_t f = 0; f < m.dim(); ++f)
        for (std::size_t l = 0; l < m.num_labels(); ++l) norm += m.weight(l, f) * m.weight(l, f);
    return ce / static_cast<double>(xs.size()) + 0.5 * l2 * norm;
}

// Largest relative error between loss_and_grad and central differences of
// reference_loss, over `coords` random coordinates (weights and biases) of
// each of `pairs` random (model, batch) pairs.
inline double worst_gradient_error(Rng& rng, int pairs, int coords, double h) {
    double worst = 0.0;
    for (int pair = 0; pair < pairs; ++pair) {
        const std::size_t dim = 24;
        SpanClassifier m = random_model(rng, dim);
        std::vector<SpanFeatures> xs;
        std::vector<std::size_t> ys;
        const std::size_t n = 1 + rng.below(12);
        for (std::size_t k = 0; k < n; ++k) {
            xs.push_back(random_features(rng, dim));
            ys.push_back(rng.below(m.num_labels()));
        }
        std::vector<Example> batch;
        for (std::size_t k = 0; k < n; ++k) batch.push_back({std::cref(xs[k]), ys[k]});
        const double l2 = 0.01 * static_cast<double>(pair);
        const LossGrad g = loss_and_grad(m, batch, l2);

        for (int c = 0; c < coords; ++c) {
            const bool bias = rng.below(5) == 0;
            const std::size_t label = rng.below(m.num_labels());
            const std::size_t feature = rng.below(dim);
            double analytic, numeric;
            if (bias) {
                const double orig = m.bias(label);
                m.set_bias(label, orig + h);
                const double up = reference_loss(m, xs, ys, l2);
                m.set_bias(label, orig - h);
                const double down = reference_loss(m, xs, ys, l2);
                m.set_bias(label, orig);
                numeric = (up - down) / (2 * h);
                analytic = g.bias[label];
            } else {
                const double orig = m.weight(label, feature);
                m.set_weight(label, feature, orig + h);
                const double up = reference_loss(m, xs, ys, l2);
                m.set_weight(label, feature, orig - h);
                const double down = reference_loss(m, xs, ys, l2);
                m.set_weight(label, feature, orig);
                numeric = (up - down) / (2 * h);
                analytic = g.weight_partial(m, label, feature);
            }
            const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

inline AnnotatedSentence with_entities(const std::string& id, std::size_t length, std::vector<Entity> entities) {
    AnnotatedSentence s;
    s.id = id;
    for (std::size_t k = 0; k < length; ++k) s.tokens.push_back(fmt::format("t{}", k));
    s.entities = std::move(entities);
    canonicalize(s);
    return s;
}

struct OracleReport {
    PRF within, out, overall;
};

// Counting straight from the definitions with nested loops.
inline OracleReport oracle_eval(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& pred,
                         bool full_scope) {
    OracleReport r;
    for (std::size_t k = 0; k < gold.size(); ++k) {
        const auto& g = gold[k].entities;
        const auto& p = pred[k].entities;
        std::vector<Span> scope;
        for (const auto& a : g) {
            bool nested = false;
            for (const auto& b : g) nested = nested || oracle_within(a.span.start, a.span.end, b.span.start, b.span.end);
            if (full_scope || !nested) scope.push_back(a.span);
        }
        auto inside = [&](const Span& s) {
            for (const auto& o : scope)
                if (oracle_within(s.start, s.end, o.start, o.end)) return true;
            return false;
        };
        auto has = [](const std::vector<Entity>& v, const Entity& e) { return std::count(v.begin(), v.end(), e) > 0; };
        for (const auto& e : g) {
            PRF& bucket = inside(e.span) ? r.within : r.out;
            (has(p, e) ? bucket.tp : bucket.fn) += 1;
            (has(p, e) ? r.overall.tp : r.overall.fn) += 1;
        }
        for (const auto& e : p) {
            if (has(g, e)) continue;
            (inside(e.span) ? r.within : r.out).fp += 1;
            r.overall.fp += 1;
        }
    }
    return r;
}

inline std::pair<std::vector<AnnotatedSentence>, std::vector<AnnotatedSentence>> random_pair(Rng& rng, std::size_t n) {
    std::vector<AnnotatedSentence> gold, pred;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t length = 1 + rng.below(12);
        const std::string id = fmt::format("s{}", k);
        auto g = with_entities(id, length, random_entities(rng, length, 5));
        // predictions: keep some gold, add some noise
        std::vector<Entity> p;
        for (const auto& e : g.entities)
            if (rng.bernoulli(0.6)) p.push_back(e);
        for (const auto& e : random_entities(rng, length, 3))
            if (std::find(p.begin(), p.end(), e) == p.end()) p.push_back(e);
        gold.push_back(std::move(g));
        pred.push_back(with_entities(id, length, std::move(p)));
    }
    // predictions arrive in a different order
    rng.shuffle(pred.begin(), pred.end());
    return {gold, pred};
}

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("nff-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string operator/(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace nff::testing
