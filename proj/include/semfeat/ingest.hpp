#pragma once

// Tag-detection corpus: the per-image object labels (with classifier scores)
// that every later stage consumes. Parsing, validation, synthetic generation
// and train/test splitting live here.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semfeat {

inline constexpr int kDefaultTagCount = 10;

struct TagRecord {
    std::string label;
    double score = 0.0;

    friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

struct SubImageTags {
    int index = 0;
    std::vector<TagRecord> tags;

    friend bool operator==(const SubImageTags&, const SubImageTags&) = default;
};

enum class Split { Train, Test, Unassigned };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ImageRecord {
    std::string image_id;
    std::string category;
    Split split = Split::Unassigned;
    std::vector<SubImageTags> sub_images;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Corpus {
    std::vector<ImageRecord> images;
    /// Defines the feature-vector axis order.
    std::vector<std::string> categories;
    int n_slices = 0;
    int k_tags = kDefaultTagCount;

    /// Axis index of a category, or -1 when unknown.
    int category_index(std::string_view category) const;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Lowercases and replaces whitespace with underscores, so "Book Jacket" and
/// "book_jacket" name the same object. Leading/trailing blanks are trimmed.
std::string normalize_label(std::string_view label);

/// Only 3x3, 4x4 and 5x5 grids are supported.
bool is_valid_slice_count(int n_slices);

/// Sorts tags by score descending, breaking ties by label ascending.
void sort_tags(std::vector<TagRecord>& tags);

struct ParseOptions {
    int k_tags = kDefaultTagCount;
    /// When set, every image must carry exactly this many sub-images.
    std::optional<int> n_slices;
};

/// Reads one JSON image record per line. Blank lines are skipped. Errors name
/// the offending (1-based) line and, where relevant, the sub-image index.
Corpus parse_corpus(std::istream& in, const ParseOptions& options = {});
Corpus load_corpus(const std::string& path, const ParseOptions& options = {});

void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::string& path, const Corpus& corpus);

struct CategorySignature {
    std::string category;
    std::vector<std::string> labels;
};

struct SyntheticSpec {
    std::vector<CategorySignature> signatures;
    std::vector<std::string> noise_pool;
    int images_per_category = 40;
    int n_slices = 9;
    int k_tags = kDefaultTagCount;
    /// Probability that a tag slot is drawn from the category signature.
    double signature_probability = 0.8;
};

/// Builds a spec with `categories` disjoint signatures of `signature_size`
/// labels each and a shared pool of `noise_size` labels.
SyntheticSpec make_disjoint_spec(int categories, int images_per_category, int signature_size,
                                 int noise_size, double signature_probability, int n_slices = 9,
                                 int k_tags = kDefaultTagCount);

/// Each sub-image receives k_tags distinct labels. A slot takes an unused
/// signature label with probability q, otherwise an unused noise label.
/// Signature tags score in (0.5, 1] and noise tags in (0, 0.5], so after
/// sorting the planted labels sit next to each other.
Corpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Stratified per-category assignment of the split field. Each category keeps
/// round(train_fraction * size) training images, clamped to leave at least one
/// image on each side.
Corpus split_corpus(const Corpus& corpus, double train_fraction, std::uint64_t seed);

}  // namespace semfeat
