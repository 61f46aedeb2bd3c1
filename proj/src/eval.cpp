#include "nff/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

namespace nff {

double PRF::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }

double PRF::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }

double PRF::f1() const {
    const double p = precision();
    const double r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

PRF& PRF::operator+=(const PRF& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
}

namespace {

using SentencePair = std::pair<const AnnotatedSentence*, const AnnotatedSentence*>;

std::vector<SentencePair> align(const std::vector<AnnotatedSentence>& gold,
                                const std::vector<AnnotatedSentence>& pred) {
    std::unordered_map<std::string, const AnnotatedSentence*> by_id;
    by_id.reserve(pred.size());
    for (const auto& p : pred) {
        if (!by_id.emplace(p.id, &p).second) throw Error(fmt::format("duplicate predicted sentence id '{}'", p.id));
    }
    if (gold.size() != pred.size()) {
        throw Error(fmt::format("gold has {} sentences but predictions have {}", gold.size(), pred.size()));
    }
    std::vector<SentencePair> pairs;
    pairs.reserve(gold.size());
    for (const auto& g : gold) {
        auto it = by_id.find(g.id);
        if (it == by_id.end()) throw Error(fmt::format("no prediction for gold sentence id '{}'", g.id));
        if (it->second->tokens.size() != g.tokens.size()) {
            throw Error(fmt::format("sentence '{}' has {} gold tokens but {} predicted tokens", g.id, g.tokens.size(),
                                    it->second->tokens.size()));
        }
        pairs.emplace_back(&g, it->second);
    }
    return pairs;
}

bool contains(const std::vector<Entity>& sorted, const Entity& e) {
    return std::binary_search(sorted.begin(), sorted.end(), e);
}

std::vector<Span> scope_spans(const AnnotatedSentence& gold, ScopeDefinition scope) {
    return entity_spans(scope == ScopeDefinition::Outermost ? outermost(gold.entities) : gold.entities);
}

bool in_within_scope(const Span& s, const std::vector<Span>& scope) {
    return std::any_of(scope.begin(), scope.end(), [&](const Span& outer) { return is_strictly_within(s, outer); });
}

// Visits every gold and predicted entity with its scope and match status.
template <typename Visit>
void score_sentence(const AnnotatedSentence& gold, const AnnotatedSentence& pred, ScopeDefinition scope,
                    Visit&& visit) {
    const auto spans = scope_spans(gold, scope);
    for (const auto& e : gold.entities) {
        const bool matched = contains(pred.entities, e);
        visit(e, in_within_scope(e.span, spans), /*is_gold=*/true, matched);
    }
    for (const auto& e : pred.entities) {
        const bool matched = contains(gold.entities, e);
        if (!matched) visit(e, in_within_scope(e.span, spans), /*is_gold=*/false, false);
    }
}

void count(PRF& prf, bool is_gold, bool matched) {
    if (is_gold) {
        ++(matched ? prf.tp : prf.fn);
    } else {
        ++prf.fp;
    }
}

}  // namespace

PRF micro_prf(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& pred) {
    PRF prf;
    for (const auto& [g, p] : align(gold, pred)) {
        for (const auto& e : g->entities) count(prf, true, contains(p->entities, e));
        for (const auto& e : p->entities) {
            if (!contains(g->entities, e)) ++prf.fp;
        }
    }
    return prf;
}

EvalReport partitioned_eval(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& pred,
                            ScopeDefinition scope) {
    EvalReport report;
    for (const auto& [g, p] : align(gold, pred)) {
        score_sentence(*g, *p, scope, [&](const Entity& e, bool within, bool is_gold, bool matched) {
            count(within ? report.within : report.out, is_gold, matched);
            count(report.overall, is_gold, matched);
            if (within) count(report.per_category[e.label], is_gold, matched);
        });
    }
    return report;
}

std::map<std::string, PRF> categorical_within_f1(const std::vector<AnnotatedSentence>& gold,
                                                 const std::vector<AnnotatedSentence>& pred, ScopeDefinition scope) {
    return partitioned_eval(gold, pred, scope).per_category;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw Error("pearson: inputs differ in length");
    if (xs.size() < 2) throw Error("pearson: need at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance, correlation undefined");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<Entity> post_process(const std::vector<Entity>& predicted) {
    std::vector<Entity> kept;
    kept.reserve(predicted.size());
    for (const auto& e : predicted) {
        const bool nested_person = e.label == "PER" && std::any_of(predicted.begin(), predicted.end(), [&](const Entity& o) {
                                       return o.label == "PER" && is_strictly_within(e.span, o.span);
                                   });
        if (!nested_person) kept.push_back(e);
    }

    std::vector<Entity> out = kept;
    for (auto& e : out) {
        if (e.label != "ORG") continue;
        const bool nested = std::any_of(kept.begin(), kept.end(),
                                        [&](const Entity& o) { return is_strictly_within(e.span, o.span); });
        if (nested) e.label = "LOC";
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

nlohmann::ordered_json to_json(const PRF& prf) {
    nlohmann::ordered_json j;
    j["tp"] = prf.tp;
    j["fp"] = prf.fp;
    j["fn"] = prf.fn;
    j["precision"] = prf.precision();
    j["recall"] = prf.recall();
    j["f1"] = prf.f1();
    return j;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["within"] = to_json(report.within);
    j["out"] = to_json(report.out);
    j["overall"] = to_json(report.overall);
    auto cats = nlohmann::ordered_json::object();
    for (const auto& [label, prf] : report.per_category) cats[label] = to_json(prf);
    j["per_category"] = std::move(cats);
    j["pearson"] = report.pearson ? nlohmann::ordered_json(*report.pearson) : nlohmann::ordered_json(nullptr);
    return j;
}

}  // namespace nff
