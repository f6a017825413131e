#ifndef PLATED_CORPUS_HPP
#define PLATED_CORPUS_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plated/error.hpp"
#include "plated/rng.hpp"

namespace plated {

// One dataset row. ids are 0-based CSV data-row indices; they survive
// splitting so manifests stay meaningful.
struct Recipe {
    std::size_t id = 0;
    std::string title;
    std::vector<std::string> ingredients_raw;
    std::string instructions;
    std::string image_name;  // file stem, no path separators
    std::vector<std::string> cleaned_ingredients;
};

struct SplitSet {
    std::vector<Recipe> train;
    std::vector<Recipe> val;
    std::vector<Recipe> test;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------- csv -----

// Minimal RFC-4180 reader: quoted fields, "" escapes, embedded commas and
// newlines, CRLF tolerated.
namespace csv {

inline std::vector<std::vector<std::string>> parse(std::istream& is) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false, row_started = false;
    for (int ci = is.get(); ci != EOF; ci = is.get()) {
        const char c = static_cast<char>(ci);
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field += '"';
                    is.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_started || !field.empty() || !row.empty()) {
                    row.push_back(std::move(field));
                    field.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                }
                row_started = false;
                break;
            default:
                field += c;
                row_started = true;
                break;
        }
    }
    require(!in_quotes, "csv: unterminated quoted field at end of input");
    if (row_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string quote(const std::string& s) {
    bool needs = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace csv

// -------------------------------------------------------- list literals ---

// Parses the dataset's bracketed list literals: ['a', "b c", 'don\'t'].
// Single or double quotes, backslash escapes, bare tokens tolerated.
// A non-bracketed string yields a one-element list; errors carry the byte
// offset of the offending character.
inline std::vector<std::string> parse_list_field(const std::string& text) {
    auto fail = [&](const std::string& what, std::size_t at) -> std::vector<std::string> {
        throw Error("list literal: " + what + " at byte " + std::to_string(at));
    };
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };

    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n || text[i] != '[') {
        const std::string single = trim(text);
        return single.empty() ? std::vector<std::string>{} : std::vector<std::string>{single};
    }
    const std::size_t open_at = i;
    ++i;
    std::vector<std::string> items;
    for (;;) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) return fail("unterminated bracket opened", open_at);
        if (text[i] == ']') {
            ++i;
            break;
        }
        std::string item;
        if (text[i] == '\'' || text[i] == '"') {
            const char q = text[i];
            const std::size_t quote_at = i;
            ++i;
            for (;;) {
                if (i >= n) return fail("unterminated quote opened", quote_at);
                if (text[i] == '\\') {
                    if (i + 1 >= n) return fail("dangling escape", i);
                    item += text[i + 1];
                    i += 2;
                } else if (text[i] == q) {
                    ++i;
                    break;
                } else {
                    item += text[i++];
                }
            }
        } else {
            while (i < n && text[i] != ',' && text[i] != ']') {
                if (text[i] == '\'' || text[i] == '"') return fail("unexpected quote", i);
                item += text[i++];
            }
            if (i >= n) return fail("unterminated bracket opened", open_at);
        }
        items.push_back(trim(item));
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) return fail("unterminated bracket opened", open_at);
        if (text[i] == ',') {
            ++i;
        } else if (text[i] != ']') {
            return fail("expected ',' or ']'", i);
        }
    }
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i != n) return fail("trailing characters after ']'", i);
    return items;
}

// ----------------------------------------------------------- ingestion ----

inline const std::vector<std::string>& recipe_columns() {
    static const std::vector<std::string> cols = {"Title", "Ingredients", "Instructions",
                                                  "Image_Name", "Cleaned_Ingredients"};
    return cols;
}

inline std::vector<Recipe> load_recipes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot read recipe file '" + path + "'");
    auto rows = csv::parse(is);
    require(!rows.empty(), "recipe file '" + path + "' has no header row");
    auto& header = rows.front();
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0)
        header[0].erase(0, 3);  // UTF-8 BOM
    std::vector<std::size_t> col_index;
    for (const auto& want : recipe_columns()) {
        auto it = std::find(header.begin(), header.end(), want);
        require(it != header.end(), "recipe file '" + path + "' is missing column '" + want + "'");
        col_index.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    std::vector<Recipe> recipes;
    recipes.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        require(row.size() >= header.size(), "recipe file '" + path + "': row " + std::to_string(r) +
                                                 " has " + std::to_string(row.size()) + " fields, header has " +
                                                 std::to_string(header.size()));
        Recipe rec;
        rec.id = recipes.size();
        rec.title = row[col_index[0]];
        rec.ingredients_raw = parse_list_field(row[col_index[1]]);
        rec.instructions = row[col_index[2]];
        rec.image_name = row[col_index[3]];
        rec.cleaned_ingredients = parse_list_field(row[col_index[4]]);
        recipes.push_back(std::move(rec));
    }
    return recipes;
}

// Inverse of load_recipes; used by fixtures and the round-trip property.
inline void write_recipes(const std::vector<Recipe>& recipes, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot write recipe file '" + path + "'");
    os << ",Title,Ingredients,Instructions,Image_Name,Cleaned_Ingredients\n";
    auto list_literal = [](const std::vector<std::string>& items) {
        std::string s = "[";
        for (std::size_t i = 0; i < items.size(); ++i) {
            s += i ? ", '" : "'";
            for (char c : items[i]) {
                if (c == '\'' || c == '\\') s += '\\';
                s += c;
            }
            s += '\'';
        }
        return s + "]";
    };
    for (std::size_t i = 0; i < recipes.size(); ++i) {
        const Recipe& r = recipes[i];
        os << i << ',' << csv::quote(r.title) << ',' << csv::quote(list_literal(r.ingredients_raw))
           << ',' << csv::quote(r.instructions) << ',' << csv::quote(r.image_name) << ','
           << csv::quote(list_literal(r.cleaned_ingredients)) << '\n';
    }
}

// ----------------------------------------------------------- validation ---

struct DropResult {
    std::vector<Recipe> kept;
    std::size_t removed = 0;
};

namespace detail {
inline bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}
}  // namespace detail

// Removes rows with empty/whitespace-only fields, empty ingredient lists, or
// image names that are missing or contain path separators.
inline DropResult drop_incomplete(const std::vector<Recipe>& recipes) {
    DropResult out;
    for (const Recipe& r : recipes) {
        const bool bad_lists =
            r.ingredients_raw.empty() || r.cleaned_ingredients.empty() ||
            std::any_of(r.ingredients_raw.begin(), r.ingredients_raw.end(), detail::blank) ||
            std::any_of(r.cleaned_ingredients.begin(), r.cleaned_ingredients.end(), detail::blank);
        const bool bad_image = detail::blank(r.image_name) ||
                               r.image_name.find('/') != std::string::npos ||
                               r.image_name.find('\\') != std::string::npos;
        if (detail::blank(r.title) || detail::blank(r.instructions) || bad_lists || bad_image) {
            ++out.removed;
        } else {
            out.kept.push_back(r);
        }
    }
    return out;
}

// ------------------------------------------------------------- splitting --

inline std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

// Seeded shuffle, then 20% test, then 20% of the remainder as validation.
inline SplitSet split(const std::vector<Recipe>& recipes, std::uint64_t seed) {
    require(recipes.size() >= 5, "split: need at least 5 recipes, got " + std::to_string(recipes.size()));
    std::vector<std::size_t> order(recipes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n = recipes.size();
    const std::size_t n_test = round_half_up(0.20 * static_cast<double>(n));
    const std::size_t n_val = round_half_up(0.20 * static_cast<double>(n - n_test));

    SplitSet out;
    out.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        const Recipe& r = recipes[order[i]];
        if (i < n_test)
            out.test.push_back(r);
        else if (i < n_test + n_val)
            out.val.push_back(r);
        else
            out.train.push_back(r);
    }
    return out;
}

// ------------------------------------------------------------- manifest ---

inline void save_split_manifest(const SplitSet& s, const std::string& path) {
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    auto ids = [](const std::vector<Recipe>& v) {
        std::vector<std::size_t> out;
        for (const Recipe& r : v) out.push_back(r.id);
        return out;
    };
    j["train_ids"] = ids(s.train);
    j["val_ids"] = ids(s.val);
    j["test_ids"] = ids(s.test);
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot write split manifest '" + path + "'");
    os << j.dump() << '\n';
}

struct SplitManifest {
    std::uint64_t seed = 0;
    std::vector<std::size_t> train_ids, val_ids, test_ids;

    const std::vector<std::size_t>& ids_for(const std::string& set_name) const {
        if (set_name == "train") return train_ids;
        if (set_name == "val") return val_ids;
        if (set_name == "test") return test_ids;
        throw Error("unknown split set '" + set_name + "' (want train|val|test)");
    }
};

inline SplitManifest load_split_manifest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot read split manifest '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("split manifest '" + path + "' is not valid JSON: " + e.what());
    }
    SplitManifest m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        m.train_ids = j.at("train_ids").get<std::vector<std::size_t>>();
        m.val_ids = j.at("val_ids").get<std::vector<std::size_t>>();
        m.test_ids = j.at("test_ids").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("split manifest '" + path + "' has a bad field: " + e.what());
    }
    return m;
}

// Materializes manifest ids against a recipe list (post-validation order).
inline std::vector<Recipe> select_by_ids(const std::vector<Recipe>& recipes,
                                         const std::vector<std::size_t>& ids) {
    std::vector<Recipe> out;
    out.reserve(ids.size());
    std::map<std::size_t, const Recipe*> by_id;
    for (const Recipe& r : recipes) by_id[r.id] = &r;
    for (std::size_t id : ids) {
        auto it = by_id.find(id);
        require(it != by_id.end(), "split manifest id " + std::to_string(id) + " not present in recipes");
        out.push_back(*it->second);
    }
    return out;
}

}  // namespace plated

#endif  // PLATED_CORPUS_HPP
