#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "nff/features.hpp"
#include "nff/model.hpp"
#include "support.hpp"

using namespace nff;
using namespace nff::testing;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("feature strings") {
    const auto s = worked_example();
    const auto f = span_feature_strings(s.tokens, {5, 7});
    CHECK(contains(f, "bias"));
    CHECK(contains(f, "first=New"));
    CHECK(contains(f, "last=University"));
    CHECK(contains(f, "first_lc=new"));
    CHECK(contains(f, "left=from"));
    CHECK(contains(f, "right=last"));
    CHECK(contains(f, "inner=York"));
    CHECK(contains(f, "width=3"));
    CHECK(contains(f, "shape_first=Xx"));
    CHECK(contains(f, "prefix_last=Uni"));
    CHECK(contains(f, "suffix_last=ity"));
    CHECK_FALSE(contains(f, "inner=New"));

    const auto whole = span_feature_strings(s.tokens, {0, 9});
    CHECK(contains(whole, "left=<s>"));
    CHECK(contains(whole, "right=</s>"));

    const auto utf = span_feature_strings({"Zürichsee"}, {0, 0});
    CHECK(contains(utf, "prefix_first=Zür"));
    CHECK(contains(utf, "suffix_first=see"));
}

TEST_CASE("shapes and width buckets") {
    CHECK(capitalization_shape("New") == "Xx");
    CHECK(capitalization_shape("NBA") == "X");
    CHECK(capitalization_shape("from") == "x");
    CHECK(capitalization_shape("1976") == "d");
    CHECK(capitalization_shape("iPhone") == "mixed");
    CHECK(width_bucket(1) == "1");
    CHECK(width_bucket(3) == "3");
    CHECK(width_bucket(4) == "4-5");
    CHECK(width_bucket(5) == "4-5");
    CHECK(width_bucket(6) == "6+");
    CHECK(width_bucket(40) == "6+");
}

TEST_CASE("featurize_span is deterministic, sorted, and separates single tokens") {
    const auto s = worked_example();
    const auto a = featurize_span(s.tokens, {5, 7});
    CHECK(a == featurize_span(s.tokens, {5, 7}));
    CHECK(std::is_sorted(a.indices.begin(), a.indices.end()));
    CHECK(std::adjacent_find(a.indices.begin(), a.indices.end()) == a.indices.end());
    for (auto i : a.indices) CHECK(i < kDefaultFeatureDim);

    const auto one = featurize_span(s.tokens, {1, 1});
    const auto two = featurize_span(s.tokens, {2, 2});
    CHECK(one.indices != two.indices);

    // colliding features are summed into one index
    const auto tiny = featurize_span(s.tokens, {5, 7}, 1);
    CHECK(tiny.indices == std::vector<std::uint32_t>{0});
    CHECK(tiny.values[0] == doctest::Approx(static_cast<double>(span_feature_strings(s.tokens, {5, 7}).size())));

    const auto all = featurize_sentence(s.tokens, 3);
    const auto spans = enumerate_spans(s.size(), 3);
    REQUIRE(all.size() == spans.size());
    for (std::size_t k = 0; k < spans.size(); ++k) CHECK(all[k] == featurize_span(s.tokens, spans[k]));
}

TEST_CASE("no collisions among the single-token features of the test vocabulary") {
    const std::vector<std::string> vocab{"Mr.", "John", "Smith", "graduated", "from", "New", "York", "University",
                                         "last", "year", "Tan", "Kong", "Yam", "Sheffield", "Wednesday"};
    std::map<std::uint32_t, std::string> seen;
    std::size_t collisions = 0;
    for (std::size_t k = 0; k < vocab.size(); ++k) {
        for (const auto& f : span_feature_strings(vocab, {k, k})) {
            const auto idx = static_cast<std::uint32_t>(fnv1a(f) % kDefaultFeatureDim);
            auto [it, fresh] = seen.emplace(idx, f);
            if (!fresh && it->second != f) ++collisions;
        }
    }
    CHECK(collisions == 0);
}

TEST_CASE("softmax fixtures") {
    SpanClassifier m({"LOC", "ORG", "PER"}, 16);
    SpanFeatures x{{1, 3}, {1.0, 2.0}};
    for (double p : predict_probs(m, x)) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
    m.set_bias(0, 10.0);
    CHECK(predict_probs(m, x)[0] > 0.999);

    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = random_model(rng, 16);
        const auto p = predict_probs(r, random_features(rng, 16));
        CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-9);
        for (double v : p) CHECK(v > 0.0);
    }
    std::vector<double> big{1000.0, 0.0, -1000.0};
    softmax_inplace(big);
    CHECK(big[0] == doctest::Approx(1.0));
    CHECK(std::isfinite(big[2]));
}

TEST_CASE("loss fixtures") {
    SpanClassifier m({"LOC", "ORG", "PER"}, 8);
    SpanFeatures x{{2}, {1.0}};
    const std::vector<Example> batch{{std::cref(x), 2}};
    auto g = loss_and_grad(m, batch, 0.0);
    CHECK(g.cross_entropy == doctest::Approx(std::log(4.0)));

    m.set_bias(2, 60.0);
    g = loss_and_grad(m, batch, 0.0);
    CHECK(g.cross_entropy == doctest::Approx(0.0));

    m.set_weight(1, 5, 2.0);
    g = loss_and_grad(m, batch, 0.5);
    CHECK(g.loss == doctest::Approx(0.25 * 4.0));
    CHECK(g.weight_partial(m, 1, 5) == doctest::Approx(1.0));
}

TEST_CASE("loss matches the reference computation") {
    Rng rng(35);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(rng, 24);
        std::vector<SpanFeatures> xs;
        std::vector<std::size_t> ys;
        for (int k = 0; k < 7; ++k) {
            xs.push_back(random_features(rng, 24));
            ys.push_back(rng.below(m.num_labels()));
        }
        std::vector<Example> batch;
        for (std::size_t k = 0; k < xs.size(); ++k) batch.push_back({std::cref(xs[k]), ys[k]});
        const double l2 = 0.01 * trial;
        CHECK(loss_and_grad(m, batch, l2).loss == doctest::Approx(reference_loss(m, xs, ys, l2)).epsilon(1e-10));
    }
}

TEST_CASE("gradient agrees with central finite differences") {
    Rng rng(32);
    CHECK(worst_gradient_error(rng, 10, 100, 1e-5) < 1e-4);
}

TEST_CASE("loss is invariant to sample order") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(rng, 32);
        std::vector<SpanFeatures> xs;
        for (int k = 0; k < 30; ++k) xs.push_back(random_features(rng, 32));
        std::vector<Example> batch;
        for (std::size_t k = 0; k < xs.size(); ++k) batch.push_back({std::cref(xs[k]), rng.below(4)});
        const double a = loss_and_grad(m, batch, 1e-3).loss;
        rng.shuffle(batch.begin(), batch.end());
        const double b = loss_and_grad(m, batch, 1e-3).loss;
        CHECK(std::abs(a - b) <= 1e-9 * std::abs(a));
    }
}

TEST_CASE("apply_gradient is a plain descent step") {
    Rng rng(34);
    const std::size_t dim = 12;
    SpanClassifier m = random_model(rng, dim);
    const SpanClassifier before = m;
    std::vector<SpanFeatures> xs{random_features(rng, dim), random_features(rng, dim)};
    std::vector<Example> batch{{std::cref(xs[0]), 1}, {std::cref(xs[1]), 3}};
    const double l2 = 0.05, lr = 0.3;
    const LossGrad g = loss_and_grad(m, batch, l2);
    apply_gradient(m, g, lr);
    for (std::size_t f = 0; f < dim; ++f) {
        for (std::size_t l = 0; l < m.num_labels(); ++l) {
            CHECK(m.weight(l, f) == doctest::Approx(before.weight(l, f) - lr * g.weight_partial(before, l, f)).epsilon(1e-12));
        }
    }
    for (std::size_t l = 0; l < m.num_labels(); ++l) CHECK(m.bias(l) == doctest::Approx(before.bias(l) - lr * g.bias[l]));

    double norm = 0.0;
    for (std::size_t f = 0; f < dim; ++f)
        for (std::size_t l = 0; l < m.num_labels(); ++l) norm += m.weight(l, f) * m.weight(l, f);
    CHECK(m.weight_norm_sq() == doctest::Approx(norm).epsilon(1e-10));
    SpanClassifier n = m;
    n.normalize();
    CHECK(n.weight_norm_sq() == doctest::Approx(norm).epsilon(1e-10));
    CHECK(n.all_finite());
}

TEST_CASE("label bookkeeping") {
    SpanClassifier m({"LOC", "PER"}, 4);
    CHECK(m.labels() == std::vector<std::string>{"O", "LOC", "PER"});
    CHECK(m.label_index("PER") == 2);
    CHECK_THROWS(m.label_index("ORG"));
    CHECK_THROWS(SpanClassifier({"O"}, 4));
}
