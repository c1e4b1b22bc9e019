#pragma once

// Per-category raw dictionaries (the concatenated label stream of a
// category's training images) and pattern dictionaries (frequencies of
// adjacent label pairs in that stream).

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "semfeat/ingest.hpp"

namespace semfeat {

inline constexpr int kDefaultMaxImages = 100;

struct RawDictionary {
    std::string category;
    /// Labels in (image, sub-image index, tag rank) order. Empty when the
    /// dictionary was loaded from disk; `token_digest` still identifies it.
    std::vector<std::string> tokens;
    std::map<std::string, long long> counts;
    long long total = 0;
    /// Tokens contributed per sub-image (the tag count), used to restrict
    /// pairs to one sub-image.
    int segment_length = 0;
    std::string token_digest;
};

/// Canonical unordered pair: `first < second` always holds.
struct LabelPair {
    std::string first;
    std::string second;

    static LabelPair of(std::string_view a, std::string_view b);

    friend auto operator<=>(const LabelPair&, const LabelPair&) = default;
    friend bool operator==(const LabelPair&, const LabelPair&) = default;
};

struct RankedPair {
    LabelPair pair;
    long long frequency = 0;

    friend bool operator==(const RankedPair&, const RankedPair&) = default;
};

struct PatternDictionary {
    std::string category;
    std::map<LabelPair, long long> pairs;
    /// Frequency descending, ties by pair ascending.
    std::vector<RankedPair> ranked;
};

struct PatternOptions {
    /// Count each adjacency from both ends (every frequency doubles).
    bool count_both_directions = false;
    /// Ignore adjacencies that straddle two sub-images.
    bool within_subimage = false;
};

/// Digest over the token stream, stable across runs and platforms.
std::string token_digest(const std::vector<std::string>& tokens);

/// Concatenates the tags of the first `max_images` training images of a
/// category, in corpus order.
RawDictionary build_raw_dictionary(const Corpus& corpus, std::string_view category,
                                   int max_images = kDefaultMaxImages);

PatternDictionary build_pattern_dictionary(const RawDictionary& raw,
                                           const PatternOptions& options = {});

/// counts[label] / total, or 0 when the label is absent.
double probability(const RawDictionary& raw, std::string_view label);

/// Occurrence count of a label (0 when absent).
long long frequency(const RawDictionary& raw, std::string_view label);

struct CategoryDictionary {
    RawDictionary raw;
    PatternDictionary pattern;
};

/// Builds both dictionaries for every corpus category, in axis order.
/// Categories are built concurrently when `workers` > 1.
std::vector<CategoryDictionary> build_dictionaries(const Corpus& corpus, int max_images,
                                                   const PatternOptions& options = {},
                                                   int workers = 1);

/// Deterministic JSON: category, total, digest, counts, ranked pairs.
std::string dictionary_to_json(const CategoryDictionary& dict);
CategoryDictionary dictionary_from_json(std::string_view text);

/// File name used under the dictionary directory for a category.
std::string dictionary_file_name(std::string_view category);

void save_dictionaries(const std::string& directory, const std::vector<CategoryDictionary>& dicts);
/// Loads `<directory>/<category>.json` for each listed category, in order.
std::vector<CategoryDictionary> load_dictionaries(const std::string& directory,
                                                  const std::vector<std::string>& categories);

}  // namespace semfeat
