#pragma once

// Feature vectors: each semantic object contributes delta * p(object | category)
// to its category's attribute. Attribute-level min-max normalization is fit on
// the training vectors.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semfeat/dictionary.hpp"
#include "semfeat/ingest.hpp"
#include "semfeat/semantic.hpp"

namespace semfeat {

enum class DeltaVariant { Normal, Avg, Normalized, Multi, Root, Divide };

inline constexpr DeltaVariant kAllDeltaVariants[] = {
    DeltaVariant::Avg,    DeltaVariant::Divide, DeltaVariant::Multi,
    DeltaVariant::Normal, DeltaVariant::Normalized, DeltaVariant::Root,
};

struct DeltaKind {
    DeltaVariant variant = DeltaVariant::Normal;
    /// Power of ten used by Divide; ignored by the other variants.
    int divide_exponent = 1;
};

std::string_view to_string(DeltaVariant variant);
DeltaVariant parse_delta_variant(std::string_view name);

/// Per-image quantities a delta may depend on beyond its own object.
struct DeltaContext {
    /// Sum of p(o|D_i) over every (semantic object, category) of the image.
    double probability_sum = 0.0;
    /// Same sum with add-one smoothed probabilities (f+1)/(c+1).
    double smoothed_probability_sum = 0.0;
};

/// Weight of one semantic object in one category:
///   Normal f/c, Avg p/sum(p), Normalized p/p^(1/4), Multi p*f, Root sqrt(p),
///   Divide p/10^k.
/// Whenever a denominator is zero the counts involved are add-one smoothed.
double delta(const DeltaKind& kind, const RawDictionary& raw, std::string_view label,
             const DeltaContext& context);

enum class FeatureLayout {
    /// One attribute per category: sum of the category's terms.
    Summed,
    /// s_sem attributes per category, one per semantic-object slot (zero padded).
    PerObject,
};

std::string_view to_string(FeatureLayout layout);
FeatureLayout parse_layout(std::string_view name);

struct FeatureParams {
    DeltaKind delta;
    int k_cand = kDefaultCandidates;
    int s_sem = kDefaultSemanticObjects;
    std::vector<Proposition> modes{Proposition::P1, Proposition::P4};
    FeatureLayout layout = FeatureLayout::Summed;
};

struct FeatureVector {
    std::string image_id;
    std::string label;
    int label_index = -1;
    std::vector<double> values;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Read-only per-category state used during featurization.
class FeatureExtractor {
public:
    FeatureExtractor(std::vector<std::string> categories, std::vector<CategoryDictionary> dicts);

    const std::vector<std::string>& categories() const { return categories_; }
    const std::vector<CategoryDictionary>& dictionaries() const { return dicts_; }
    std::size_t dimension(const FeatureParams& params) const;

    /// Pure in (image, dictionaries, params). When `trace` is non-null it
    /// receives the semantic objects extracted per category.
    FeatureVector featurize(const ImageRecord& image, const FeatureParams& params,
                            std::vector<SemanticObjectSet>* trace = nullptr) const;

private:
    std::vector<std::string> categories_;
    std::vector<CategoryDictionary> dicts_;
    std::vector<PairGraph> graphs_;
};

struct NormalizationModel {
    std::vector<double> min;
    std::vector<double> max;
};

NormalizationModel fit_normalization(std::span<const FeatureVector> train);

/// (x - min) / (max - min) clipped to [0,1]; constant attributes map to 0.
FeatureVector apply_normalization(const NormalizationModel& model, const FeatureVector& v);

}  // namespace semfeat
