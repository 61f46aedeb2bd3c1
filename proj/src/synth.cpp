#include <array>
#include <string_view>

#include <fmt/format.h>

#include "nff/corpus.hpp"
#include "nff/rng.hpp"

namespace nff {

namespace {

constexpr std::array<std::string_view, 60> kFirstNames = {
    "John",    "Mary",    "Robert",  "Linda",   "Michael", "Susan",   "David",   "Karen",   "James",
    "Nancy",   "Thomas",  "Lisa",    "Daniel",  "Sandra",  "Paul",    "Donna",   "Mark",    "Carol",
    "George",  "Ruth",    "Steven",  "Sharon",  "Edward",  "Laura",   "Brian",   "Helen",   "Kevin",
    "Amy",     "Jason",   "Anna",    "Gary",    "Emma",    "Eric",    "Julia",   "Frank",   "Alice",
    "Peter",   "Grace",   "Henry",   "Diane",   "Walter",  "Joyce",   "Arthur",  "Irene",   "Harold",
    "Clara",   "Ralph",   "Olivia",  "Victor",  "Sophie",  "Oscar",   "Martha",  "Felix",   "Hannah",
    "Tobias",  "Ingrid",  "Marcus",  "Leona",   "Rupert",  "Yvonne",
};

constexpr std::array<std::string_view, 60> kLastNames = {
    "Smith",    "Johnson",  "Williams", "Brown",    "Jones",    "Miller",   "Davis",    "Wilson",
    "Anderson", "Taylor",   "Thomas",   "Moore",    "Martin",   "Jackson",  "Thompson", "White",
    "Harris",   "Clark",    "Lewis",    "Walker",   "Hall",     "Allen",    "Young",    "King",
    "Wright",   "Scott",    "Green",    "Baker",    "Adams",    "Nelson",   "Hill",     "Campbell",
    "Mitchell", "Roberts",  "Carter",   "Phillips", "Evans",    "Turner",   "Parker",   "Collins",
    "Edwards",  "Stewart",  "Morris",   "Murphy",   "Cook",     "Rogers",   "Morgan",   "Cooper",
    "Peterson", "Bailey",   "Reed",     "Kelly",    "Howard",   "Cox",      "Ward",     "Richards",
    "Watson",   "Brooks",   "Sanders",  "Price",
};

constexpr std::array<std::string_view, 40> kCities = {
    "Boston",   "Chicago",  "Denver",    "Seattle",  "Houston",  "Phoenix",  "Dallas",    "Atlanta",
    "Portland", "Detroit",  "Memphis",   "Oakland",  "Tampa",    "Omaha",    "Tulsa",     "Fresno",
    "Austin",   "Raleigh",  "Richmond",  "Madison",  "Toledo",   "Buffalo",  "Orlando",   "Reno",
    "London",   "Paris",    "Berlin",    "Madrid",   "Vienna",   "Prague",   "Lisbon",    "Dublin",
    "Oslo",     "Warsaw",   "Helsinki",  "Geneva",   "Munich",   "Milan",    "Lyon",      "Bristol",
};

constexpr std::array<std::string_view, 12> kOrgSuffixes = {
    "University", "Bank",     "Airlines", "Hospital", "Council",  "Museum",
    "Gazette",    "Symphony", "Railways", "Institute", "Holdings", "Partners",
};

// The first eight are the context words the templates place before mentions.
constexpr std::array<std::string_view, 80> kFiller = {
    "in",        "at",         "from",      "with",      "near",      "by",        "for",       "to",
    "the",       "a",          "said",      "reported",  "announced", "visited",   "met",       "joined",
    "left",      "praised",    "criticized", "signed",   "officials", "yesterday", "today",     "on",
    "Monday",    "Friday",     "after",     "before",    "talks",     "deal",      "plans",     "new",
    "agreement", "statement",  "spokesman", "according", "week",      "last",      "month",     "report",
    "and",       "also",       "will",      "has",       "had",       "was",       "were",      "is",
    "that",      "its",        "their",     "his",       "her",       "over",      "under",     "into",
    "expected",  "approved",   "rejected",  "opened",    "closed",    "hosted",    "funding",   "budget",
    "project",   "meeting",    "season",    "contract",  "election",  "results",   "shares",    "market",
    "team",      "players",    "coach",     "staff",     "director",  "board",     "members",   "city",
};

constexpr std::size_t kContextWords = 8;

enum class Mention { Person, Location, PlainOrg, NestedOrg };

class SentenceBuilder {
public:
    SentenceBuilder(const SynthConfig& config, Rng& rng) : config_(config), rng_(rng) {}

    void filler(std::size_t min_count, std::size_t max_count) {
        const std::size_t n = min_count + rng_.below(max_count - min_count + 1);
        for (std::size_t k = 0; k < n; ++k) push(pick(kFiller, config_.filler_words));
    }

    void context_word() {
        if (rng_.bernoulli(0.7)) push(pick(kFiller, kContextWords));
    }

    void mention(Mention kind) {
        const std::size_t start = sentence_.tokens.size();
        switch (kind) {
            case Mention::Person:
                push(pick(kFirstNames, config_.first_names));
                push(pick(kLastNames, config_.last_names));
                add(start, start + 1, "PER");
                break;
            case Mention::Location:
                push(pick(kCities, config_.cities));
                add(start, start, "LOC");
                break;
            case Mention::PlainOrg:
                push(pick(kLastNames, config_.last_names));
                push(pick(kOrgSuffixes, config_.org_suffixes));
                add(start, start + 1, "ORG");
                break;
            case Mention::NestedOrg:
                push(pick(kCities, config_.cities));
                push(pick(kOrgSuffixes, config_.org_suffixes));
                add(start, start + 1, "ORG");
                add(start, start, "LOC");
                break;
        }
    }

    AnnotatedSentence finish(std::string id, std::string doc) {
        push(".");
        sentence_.id = std::move(id);
        sentence_.doc_id = std::move(doc);
        canonicalize(sentence_);
        return std::move(sentence_);
    }

private:
    template <std::size_t N>
    std::string_view pick(const std::array<std::string_view, N>& pool, std::size_t size) {
        return pool[rng_.below(size)];
    }
    void push(std::string_view token) { sentence_.tokens.emplace_back(token); }
    void add(std::size_t start, std::size_t end, const char* label) {
        sentence_.entities.push_back({{start, end}, label});
    }

    const SynthConfig& config_;
    Rng& rng_;
    AnnotatedSentence sentence_;
};

Mention draw_plain_mention(Rng& rng) {
    const double u = rng.uniform();
    if (u < 0.4) return Mention::Location;
    if (u < 0.75) return Mention::Person;
    return Mention::PlainOrg;
}

std::vector<AnnotatedSentence> generate_split(const SynthConfig& config, const std::string& name,
                                              std::size_t count, std::uint64_t seed, PlantedCounts& planted) {
    Rng rng(seed);
    std::vector<AnnotatedSentence> sentences;
    sentences.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const bool nested = rng.bernoulli(config.nesting_probability);
        std::vector<Mention> mentions;
        const std::size_t others = nested ? rng.below(2) : 1 + rng.below(2);
        for (std::size_t k = 0; k < others; ++k) mentions.push_back(draw_plain_mention(rng));
        if (nested) mentions.insert(mentions.begin() + static_cast<std::ptrdiff_t>(rng.below(mentions.size() + 1)),
                                    Mention::NestedOrg);

        SentenceBuilder builder(config, rng);
        builder.filler(0, 2);
        for (std::size_t k = 0; k < mentions.size(); ++k) {
            if (k > 0) builder.filler(1, 3);
            builder.context_word();
            builder.mention(mentions[k]);
        }
        builder.filler(0, 2);
        AnnotatedSentence sentence = builder.finish(fmt::format("{}-{:05d}", name, i), name);

        ++planted.sentences;
        planted.entities += sentence.entities.size();
        if (nested) {
            ++planted.nested_sentences;
            ++planted.nested_entities;
        }
        sentences.push_back(std::move(sentence));
    }
    return sentences;
}

}  // namespace

SynthConfig synth_vocabulary_limits() {
    SynthConfig limits;
    limits.first_names = kFirstNames.size();
    limits.last_names = kLastNames.size();
    limits.cities = kCities.size();
    limits.org_suffixes = kOrgSuffixes.size();
    limits.filler_words = kFiller.size();
    return limits;
}

void SynthConfig::validate() const {
    if (!(nesting_probability >= 0.0 && nesting_probability <= 1.0)) {
        throw Error(fmt::format("nesting probability {} is outside [0, 1]", nesting_probability));
    }
    if (train_sentences == 0 || dev_sentences == 0 || test_sentences == 0) {
        throw Error("every split needs at least one sentence");
    }
    const SynthConfig limits = synth_vocabulary_limits();
    auto check = [](const char* pool, std::size_t requested, std::size_t minimum, std::size_t maximum) {
        if (requested < minimum) {
            throw Error(fmt::format("{} pool of size {} is too small for the templates (need at least {})", pool,
                                    requested, minimum));
        }
        if (requested > maximum) {
            throw Error(fmt::format("{} pool of size {} exceeds the bundled list of {}", pool, requested, maximum));
        }
    };
    check("first-name", first_names, 1, limits.first_names);
    check("last-name", last_names, 1, limits.last_names);
    check("city", cities, 1, limits.cities);
    check("org-suffix", org_suffixes, 1, limits.org_suffixes);
    check("filler", filler_words, kContextWords, limits.filler_words);
}

SynthCorpus generate_synth(const SynthConfig& config) {
    config.validate();
    SynthCorpus out;
    const std::array<std::pair<const char*, std::size_t>, 3> splits = {{
        {"train", config.train_sentences},
        {"dev", config.dev_sentences},
        {"test", config.test_sentences},
    }};
    for (std::size_t k = 0; k < splits.size(); ++k) {
        const auto& [name, count] = splits[k];
        const std::uint64_t seed = config.seed + 0x9E3779B97F4A7C15ULL * (k + 1);
        out.corpus.splits[name] = generate_split(config, name, count, seed, out.planted[name]);
    }
    out.corpus.splits["train.flat"] = flatten_dataset(out.corpus.splits["train"]);
    out.corpus.splits["dev.flat"] = flatten_dataset(out.corpus.splits["dev"]);
    out.corpus.labels = {"LOC", "ORG", "PER"};
    return out;
}

}  // namespace nff
