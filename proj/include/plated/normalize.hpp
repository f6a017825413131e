#ifndef PLATED_NORMALIZE_HPP
#define PLATED_NORMALIZE_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "plated/corpus.hpp"
#include "plated/error.hpp"
#include "plated/tensor.hpp"

namespace plated {

// ---------------------------------------------------------------------------
// Rule word lists. Color words are protected: they survive every removal
// pass. Lists ship as editable plain-text files (data/rules/) and the same
// content is embedded here as the built-in default.
// ---------------------------------------------------------------------------

struct RuleSet {
    std::set<std::string> fillers;
    std::set<std::string> adjectives;
    std::set<std::string> utensils;
    std::set<std::string> units;
    std::set<std::string> geo_adjectives;
    std::set<std::string> color_words;
    std::map<std::string, std::string> plural_exceptions;

    static RuleSet defaults();
    static RuleSet load_dir(const std::string& dir);

    void validate() const {
        auto check_entries = [](const std::set<std::string>& words, const char* list) {
            for (const std::string& w : words) {
                require(!w.empty(), std::string("rules: empty entry in ") + list);
                for (char c : w)
                    require((std::islower(static_cast<unsigned char>(c)) ||
                             std::isdigit(static_cast<unsigned char>(c))),
                            std::string("rules: entry '") + w + "' in " + list +
                                " must be a lowercase single token");
            }
        };
        check_entries(fillers, "fillers");
        check_entries(adjectives, "adjectives");
        check_entries(utensils, "utensils");
        check_entries(units, "units");
        check_entries(geo_adjectives, "geo_adjectives");
        check_entries(color_words, "colors");
        for (const std::string& c : color_words) {
            require(!adjectives.count(c), "rules: color word '" + c + "' also listed as adjective");
            require(!fillers.count(c), "rules: color word '" + c + "' also listed as filler");
        }
    }
};

namespace detail {

inline std::set<std::string> word_set(const char* blob) {
    std::set<std::string> out;
    std::istringstream is(blob);
    std::string w;
    while (is >> w) out.insert(w);
    return out;
}

inline std::set<std::string> load_word_file(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "rules: cannot read '" + path + "'");
    std::set<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string w;
        while (ls >> w) out.insert(w);
    }
    return out;
}

}  // namespace detail

inline RuleSet RuleSet::defaults() {
    RuleSet r;
    r.fillers = detail::word_set(
        "and or the a an of with for to in into at on as about plus such each if needed more "
        "other optional divided serving taste preferably accompaniment assorted");
    r.adjectives = detail::word_set(
        "creamy superfine freshly fresh ripe soft firm fancy gourmet premium quality best good "
        "favorite pure genuine homemade storebought thick thin chilled warm cold "
        "crunchy crispy tender juicy");
    r.utensils = detail::word_set(
        "jar jars skillet pan pot bowl glass bottle tin foil rack tray sheet plate platter "
        "spoon fork knife whisk processor blender grill toothpick skewer ramekin mold");
    r.units = detail::word_set(
        "pound pounds lb lbs cup cups tablespoon tablespoons tbsp tsp teaspoon teaspoons ounce "
        "ounces oz gram grams g kilogram kilograms kg milliliter milliliters ml liter liters "
        "litre litres quart quarts pint pints gallon gallons dash dashes pinch pinches stick "
        "sticks package packages pkg inch inches cm piece pieces");
    r.geo_adjectives = detail::word_set(
        "italian french mexican spanish greek thai chinese japanese korean indian american "
        "english german moroccan turkish vietnamese cuban persian sicilian tuscan mediterranean "
        "asian european californian hawaiian jamaican");
    r.color_words = detail::word_set("red green yellow white black brown purple pink orange blue golden");
    r.plural_exceptions = {
        {"leaves", "leaf"},   {"loaves", "loaf"},     {"halves", "half"},
        {"knives", "knife"},  {"cookies", "cookie"},  {"chilies", "chili"},
        {"chillies", "chilli"}, {"molasses", "molasses"}, {"couscous", "couscous"},
        {"swiss", "swiss"},   {"brussels", "brussels"},
    };
    r.validate();
    return r;
}

inline RuleSet RuleSet::load_dir(const std::string& dir) {
    RuleSet r;
    r.fillers = detail::load_word_file(dir + "/fillers.txt");
    r.adjectives = detail::load_word_file(dir + "/adjectives.txt");
    r.utensils = detail::load_word_file(dir + "/utensils.txt");
    r.units = detail::load_word_file(dir + "/units.txt");
    r.geo_adjectives = detail::load_word_file(dir + "/geo_adjectives.txt");
    r.color_words = detail::load_word_file(dir + "/colors.txt");
    std::ifstream is(dir + "/plural_exceptions.tsv");
    require(is.good(), "rules: cannot read '" + dir + "/plural_exceptions.tsv'");
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        require(tab != std::string::npos, "rules: plural_exceptions line lacks a tab: " + line);
        r.plural_exceptions[line.substr(0, tab)] = line.substr(tab + 1);
    }
    r.validate();
    return r;
}

// ---------------------------------------------------------------------------
// Phrase cleaning
// ---------------------------------------------------------------------------

// Suffix-rule singularization; irregulars come from the exception table.
inline std::string singularize(const std::string& word, const RuleSet& rules) {
    auto it = rules.plural_exceptions.find(word);
    if (it != rules.plural_exceptions.end()) return it->second;
    const std::size_t n = word.size();
    if (n >= 5 && word.ends_with("ies")) return word.substr(0, n - 3) + "y";
    for (const char* suf : {"sses", "shes", "ches", "xes", "zes", "oes"})
        if (word.ends_with(suf)) return word.substr(0, n - 2);
    if (n >= 3 && word.ends_with("s") && !word.ends_with("ss") && !word.ends_with("us") &&
        !word.ends_with("is"))
        return word.substr(0, n - 1);
    return word;
}

// Lowercase, strip parentheticals and punctuation, drop leading quantity
// tokens and measurement/filler/adjective/utensil/geo words (color words are
// never dropped), singularize the final token. Empty output means "discard".
inline std::string clean_phrase(const std::string& raw, const RuleSet& rules) {
    std::string s;
    s.reserve(raw.size());
    int paren_depth = 0;
    for (char raw_c : raw) {
        const unsigned char uc = static_cast<unsigned char>(raw_c);
        const char c = static_cast<char>(std::tolower(uc));
        if (c == '(') {
            ++paren_depth;
            continue;
        }
        if (c == ')') {
            if (paren_depth > 0) --paren_depth;
            continue;
        }
        if (paren_depth > 0) continue;
        if (c == '\'') continue;  // don't -> dont
        if (std::isalnum(static_cast<unsigned char>(c)))
            s += c;
        else
            s += ' ';
    }

    std::vector<std::string> tokens;
    {
        std::istringstream is(s);
        std::string t;
        while (is >> t) tokens.push_back(t);
    }

    std::vector<std::string> kept;
    for (const std::string& t : tokens) {
        const std::string sing = singularize(t, rules);
        if (rules.color_words.count(t) || rules.color_words.count(sing)) {
            kept.push_back(t);
            continue;
        }
        auto in = [&](const std::set<std::string>& set) { return set.count(t) || set.count(sing); };
        if (in(rules.fillers) || in(rules.adjectives) || in(rules.utensils) || in(rules.units) ||
            in(rules.geo_adjectives))
            continue;
        kept.push_back(t);
    }

    // leading quantity tokens: pure numerals (fractions arrive as "1 2").
    // Stripped after word filtering so removals cannot expose a new leading
    // numeral later (keeps cleaning idempotent).
    auto numeric = [](const std::string& t) {
        return std::all_of(t.begin(), t.end(),
                           [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    };
    std::size_t start = 0;
    while (start < kept.size() && numeric(kept[start])) ++start;
    kept.erase(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(start));

    if (kept.empty()) return "";
    kept.back() = singularize(kept.back(), rules);

    std::string out;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i) out += ' ';
        out += kept[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Two-word prefix/suffix merging
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> words_of(const std::string& phrase) {
    std::vector<std::string> out;
    std::istringstream is(phrase);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

inline std::string first_two(const std::vector<std::string>& w) { return w[0] + " " + w[1]; }
inline std::string last_two(const std::vector<std::string>& w) {
    return w[w.size() - 2] + " " + w[w.size() - 1];
}

}  // namespace detail

// Any two phrases of >= 3 words sharing their first two or last two words
// collapse to that shared two-word form (prefix sharing wins when both
// apply); iterated to a fixed point. Shorter phrases map to themselves. The
// returned map contains every input phrase plus all merge targets, and is a
// projection: applying it twice equals applying it once.
inline std::map<std::string, std::string> merge_vocabulary(const std::vector<std::string>& phrases) {
    std::set<std::string> current(phrases.begin(), phrases.end());
    std::map<std::string, std::string> total;
    for (const std::string& p : current) total[p] = p;

    for (;;) {
        std::map<std::string, std::size_t> prefix_count, suffix_count;
        std::map<std::string, std::vector<std::string>> split_cache;
        for (const std::string& p : current) {
            auto w = detail::words_of(p);
            if (w.size() < 3) continue;
            ++prefix_count[detail::first_two(w)];
            ++suffix_count[detail::last_two(w)];
            split_cache.emplace(p, std::move(w));
        }
        std::map<std::string, std::string> round;
        for (const auto& [p, w] : split_cache) {
            const std::string pre = detail::first_two(w), suf = detail::last_two(w);
            if (prefix_count[pre] >= 2)
                round[p] = pre;  // prefix merge wins ties
            else if (suffix_count[suf] >= 2)
                round[p] = suf;
        }
        if (round.empty()) break;
        std::set<std::string> next;
        for (const std::string& p : current) {
            auto it = round.find(p);
            next.insert(it == round.end() ? p : it->second);
        }
        for (auto& [phrase, target] : total) {
            auto it = round.find(target);
            if (it != round.end()) target = it->second;
        }
        for (const auto& [p, target] : round)
            if (!total.count(target)) total[target] = target;
        current = std::move(next);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Frequency-restricted vocabulary
// ---------------------------------------------------------------------------

struct IngredientVocabulary {
    std::vector<std::string> labels;  // count desc, ties lexicographic
    std::vector<std::size_t> counts;  // aligned with labels
    // every build input phrase; nullopt marks phrases dropped by the cut
    std::map<std::string, std::optional<std::size_t>> phrase_map;
    double top_percent = 1.0;
    std::size_t max_size = 0;

    std::size_t size() const { return labels.size(); }

    std::optional<std::size_t> label_of(const std::string& phrase) const {
        auto it = phrase_map.find(phrase);
        if (it != phrase_map.end()) return it->second;
        return std::nullopt;
    }
};

// Keeps labels ranked within round-half-up(top_percent * |distinct|), at
// least one, then truncates to max_size. Half-up matches the split-size
// rounding used elsewhere.
inline IngredientVocabulary build_vocabulary(const std::map<std::string, std::size_t>& counts,
                                             double top_percent, std::size_t max_size) {
    require(!counts.empty(), "build_vocabulary: empty phrase counts");
    require(top_percent > 0.0 && top_percent <= 1.0, "build_vocabulary: top_percent must be in (0,1]");
    require(max_size >= 1, "build_vocabulary: max_size must be >= 1");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const std::size_t by_percent = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(top_percent * static_cast<double>(ranked.size()) + 0.5)));
    const std::size_t keep = std::min({by_percent, max_size, ranked.size()});

    IngredientVocabulary v;
    v.top_percent = top_percent;
    v.max_size = max_size;
    for (std::size_t i = 0; i < keep; ++i) {
        v.labels.push_back(ranked[i].first);
        v.counts.push_back(ranked[i].second);
        v.phrase_map[ranked[i].first] = i;
    }
    for (std::size_t i = keep; i < ranked.size(); ++i) v.phrase_map[ranked[i].first] = std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// Raw phrase -> label pipeline (clean, merge, vocabulary cut)
// ---------------------------------------------------------------------------

struct VocabPipeline {
    RuleSet rules;
    std::map<std::string, std::string> merge_map;  // over cleaned training phrases
    IngredientVocabulary vocab;
    std::map<std::string, std::string> raw_map;  // raw training phrase -> label

    std::optional<std::size_t> map_raw(const std::string& raw) const {
        auto direct = raw_map.find(raw);
        if (direct != raw_map.end()) return vocab.label_of(direct->second);
        const std::string cleaned = clean_phrase(raw, rules);
        if (cleaned.empty()) return std::nullopt;
        return map_cleaned(cleaned);
    }

    // Exact lookup after merging; unseen longer variants fall back to their
    // two-word prefix/suffix when that form is a label.
    std::optional<std::size_t> map_cleaned(const std::string& cleaned) const {
        std::string merged = cleaned;
        auto it = merge_map.find(cleaned);
        if (it != merge_map.end()) merged = it->second;
        if (auto hit = vocab.label_of(merged)) return hit;
        auto w = detail::words_of(merged);
        if (w.size() >= 3) {
            if (auto hit = vocab.label_of(detail::first_two(w))) return hit;
            if (auto hit = vocab.label_of(detail::last_two(w))) return hit;
        }
        return std::nullopt;
    }
};

// Builds the full pipeline from the training split's raw phrases.
inline VocabPipeline build_pipeline(const std::vector<std::string>& training_phrases,
                                    const RuleSet& rules, double top_percent, std::size_t max_size) {
    VocabPipeline p;
    p.rules = rules;

    std::vector<std::string> cleaned;
    std::map<std::string, std::string> raw_to_clean;
    for (const std::string& raw : training_phrases) {
        const std::string c = clean_phrase(raw, rules);
        raw_to_clean[raw] = c;
        if (!c.empty()) cleaned.push_back(c);
    }
    require(!cleaned.empty(), "build_pipeline: no phrases survive cleaning");

    p.merge_map = merge_vocabulary(cleaned);

    std::map<std::string, std::size_t> counts;
    for (const std::string& c : cleaned) ++counts[p.merge_map.at(c)];
    p.vocab = build_vocabulary(counts, top_percent, max_size);

    for (const auto& [raw, c] : raw_to_clean) {
        if (c.empty()) continue;
        const std::string merged = p.merge_map.at(c);
        if (auto label = p.vocab.label_of(merged)) p.raw_map[raw] = p.vocab.labels[*label];
    }
    return p;
}

// Binary target over vocab labels: component k is 1 iff any cleaned phrase
// of the recipe maps to label k. All-zero vectors are legal (the trainers
// drop such rows with a warning).
inline Tensor encode_targets(const Recipe& recipe, const VocabPipeline& pipeline) {
    Tensor t({pipeline.vocab.size() ? pipeline.vocab.size() : 1});
    require(pipeline.vocab.size() > 0, "encode_targets: empty vocabulary");
    for (const std::string& phrase : recipe.cleaned_ingredients)
        if (auto k = pipeline.map_raw(phrase)) t[*k] = real(1);
    return t;
}

// ------------------------------------------------------------------ files --

// label<TAB>count, rank order.
inline void save_vocabulary(const IngredientVocabulary& v, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot write vocabulary '" + path + "'");
    for (std::size_t i = 0; i < v.labels.size(); ++i)
        os << v.labels[i] << '\t' << v.counts[i] << '\n';
}

inline IngredientVocabulary load_vocabulary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot read vocabulary '" + path + "'");
    IngredientVocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        require(tab != std::string::npos,
                "vocabulary '" + path + "' line " + std::to_string(lineno) + ": missing tab");
        const std::string label = line.substr(0, tab);
        std::size_t count = 0;
        try {
            count = std::stoull(line.substr(tab + 1));
        } catch (...) {
            throw Error("vocabulary '" + path + "' line " + std::to_string(lineno) + ": bad count");
        }
        v.phrase_map[label] = v.labels.size();
        v.labels.push_back(label);
        v.counts.push_back(count);
    }
    require(!v.labels.empty(), "vocabulary '" + path + "' is empty");
    v.max_size = v.labels.size();
    return v;
}

// raw_phrase<TAB>label, mapped phrases only.
inline void save_raw_map(const VocabPipeline& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot write raw map '" + path + "'");
    for (const auto& [raw, label] : p.raw_map) os << raw << '\t' << label << '\n';
}

inline std::map<std::string, std::string> load_raw_map(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot read raw map '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        require(tab != std::string::npos,
                "raw map '" + path + "' line " + std::to_string(lineno) + ": missing tab");
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

// Rebuilds a usable pipeline from persisted vocabulary + raw-map files.
inline VocabPipeline load_pipeline(const std::string& vocab_path, const std::string& raw_map_path,
                                   const RuleSet& rules) {
    VocabPipeline p;
    p.rules = rules;
    p.vocab = load_vocabulary(vocab_path);
    p.raw_map = load_raw_map(raw_map_path);
    return p;
}

}  // namespace plated

#endif  // PLATED_NORMALIZE_HPP
