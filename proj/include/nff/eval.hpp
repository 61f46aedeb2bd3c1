#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nff/span.hpp"

namespace nff {

/// Micro-averaged counts and scores. 0/0 is reported as 0.
struct PRF {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    double precision() const;
    double recall() const;
    double f1() const;

    PRF& operator+=(const PRF& other);
    friend bool operator==(const PRF&, const PRF&) = default;
};

/// Which gold spans define the within-entity region at evaluation time.
enum class ScopeDefinition {
    Outermost,  // outermost projection of gold: nested gold falls within
    FullGold,   // every gold span
};

struct EvalReport {
    PRF within;
    PRF out;
    PRF overall;
    std::map<std::string, PRF> per_category;  // within scope, absent when empty
    std::optional<double> pearson;
};

/// Exact span-and-label match, counts pooled over sentences. Sentences are
/// paired by id; missing or extra ids throw.
PRF micro_prf(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& pred);

/// Scores within-entity, out-of-entity and overall. Each gold and predicted
/// entity belongs to the within scope iff its span is strictly within one of
/// the sentence's scope-defining gold spans.
EvalReport partitioned_eval(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& pred,
                            ScopeDefinition scope = ScopeDefinition::Outermost);

/// Within-scope PRF per category; categories with no gold and no predicted
/// within-scope entity are left out.
std::map<std::string, PRF> categorical_within_f1(const std::vector<AnnotatedSentence>& gold,
                                                 const std::vector<AnnotatedSentence>& pred,
                                                 ScopeDefinition scope = ScopeDefinition::Outermost);

/// Sample Pearson correlation. Throws on length mismatch, fewer than two
/// points, or zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

/// Removes PER entities strictly within another PER, then relabels ORG
/// entities strictly within any remaining entity as LOC.
std::vector<Entity> post_process(const std::vector<Entity>& predicted);

nlohmann::ordered_json to_json(const PRF& prf);
nlohmann::ordered_json to_json(const EvalReport& report);

}  // namespace nff
