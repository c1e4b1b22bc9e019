#include "semfeat/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "semfeat/common.hpp"

namespace semfeat {

std::string_view to_string(DeltaVariant variant) {
    switch (variant) {
        case DeltaVariant::Normal: return "normal";
        case DeltaVariant::Avg: return "avg";
        case DeltaVariant::Normalized: return "normalized";
        case DeltaVariant::Multi: return "multi";
        case DeltaVariant::Root: return "root";
        case DeltaVariant::Divide: return "divide";
    }
    return "normal";
}

DeltaVariant parse_delta_variant(std::string_view name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (auto v : kAllDeltaVariants)
        if (to_string(v) == lower) return v;
    throw Error("unknown delta '" + std::string(name) +
                "' (expected normal, avg, normalized, multi, root or divide)");
}

std::string_view to_string(FeatureLayout layout) {
    return layout == FeatureLayout::Summed ? "summed" : "per-object";
}

FeatureLayout parse_layout(std::string_view name) {
    if (name == "summed") return FeatureLayout::Summed;
    if (name == "per-object") return FeatureLayout::PerObject;
    throw Error("unknown layout '" + std::string(name) + "' (expected summed or per-object)");
}

double delta(const DeltaKind& kind, const RawDictionary& raw, std::string_view label,
             const DeltaContext& context) {
    const auto f = static_cast<double>(frequency(raw, label));
    const auto c = static_cast<double>(raw.total);
    const double smoothed = (f + 1.0) / (c + 1.0);
    const double p = c > 0.0 ? f / c : smoothed;

    switch (kind.variant) {
        case DeltaVariant::Normal:
            return p;
        case DeltaVariant::Avg:
            if (context.probability_sum > 0.0) return p / context.probability_sum;
            if (context.smoothed_probability_sum > 0.0)
                return smoothed / context.smoothed_probability_sum;
            return 0.0;
        case DeltaVariant::Normalized: {
            const double base = p > 0.0 ? p : smoothed;
            return base / std::pow(base, 0.25);
        }
        case DeltaVariant::Multi:
            return p * f;
        case DeltaVariant::Root:
            return std::sqrt(p);
        case DeltaVariant::Divide: {
            double scale = 1.0;
            for (int i = 0; i < kind.divide_exponent; ++i) scale *= 10.0;
            return p / scale;
        }
    }
    return 0.0;
}

FeatureExtractor::FeatureExtractor(std::vector<std::string> categories,
                                   std::vector<CategoryDictionary> dicts)
    : categories_(std::move(categories)), dicts_(std::move(dicts)) {
    if (dicts_.size() != categories_.size())
        throw Error("features", "expected one dictionary per category");
    for (std::size_t i = 0; i < categories_.size(); ++i) {
        if (dicts_[i].raw.category != categories_[i])
            throw Error("features", "missing dictionary for category '" + categories_[i] + "'");
        graphs_.emplace_back(dicts_[i].pattern);
    }
}

std::size_t FeatureExtractor::dimension(const FeatureParams& params) const {
    return params.layout == FeatureLayout::Summed
               ? categories_.size()
               : categories_.size() * static_cast<std::size_t>(params.s_sem);
}

FeatureVector FeatureExtractor::featurize(const ImageRecord& image, const FeatureParams& params,
                                          std::vector<SemanticObjectSet>* trace) const {
    if (params.delta.divide_exponent < 0)
        throw Error("features", "divide exponent must be >= 0");

    FeatureVector v;
    v.image_id = image.image_id;
    v.label = image.category;
    auto it = std::find(categories_.begin(), categories_.end(), image.category);
    if (it == categories_.end())
        throw Error("features", "image '" + image.image_id + "' has unknown category '" +
                                    image.category + "'");
    v.label_index = static_cast<int>(it - categories_.begin());

    const CandidateSet cands = select_candidates(image, params.k_cand);
    const std::set<std::string> raw = raw_labels(image);

    std::vector<SemanticObjectSet> sets;
    sets.reserve(categories_.size());
    DeltaContext context;
    for (std::size_t i = 0; i < categories_.size(); ++i) {
        auto set = extract_semantic_objects(graphs_[i], cands, raw, params.s_sem, params.modes);
        set.category = categories_[i];
        const auto& dict = dicts_[i].raw;
        for (const auto& object : set.objects) {
            context.probability_sum += probability(dict, object.label);
            context.smoothed_probability_sum +=
                (static_cast<double>(frequency(dict, object.label)) + 1.0) /
                (static_cast<double>(dict.total) + 1.0);
        }
        sets.push_back(std::move(set));
    }

    v.values.assign(dimension(params), 0.0);
    for (std::size_t i = 0; i < categories_.size(); ++i) {
        const auto& dict = dicts_[i].raw;
        for (std::size_t j = 0; j < sets[i].objects.size(); ++j) {
            const auto& label = sets[i].objects[j].label;
            const double term = delta(params.delta, dict, label, context) * probability(dict, label);
            if (params.layout == FeatureLayout::Summed)
                v.values[i] += term;
            else
                v.values[i * static_cast<std::size_t>(params.s_sem) + j] = term;
        }
    }
    if (trace) *trace = std::move(sets);
    return v;
}

NormalizationModel fit_normalization(std::span<const FeatureVector> train) {
    if (train.empty()) throw Error("normalize", "need at least one training vector");
    const std::size_t dim = train.front().values.size();
    NormalizationModel model{train.front().values, train.front().values};
    for (const auto& v : train) {
        if (v.values.size() != dim) throw Error("normalize", "inconsistent vector dimensions");
        for (std::size_t a = 0; a < dim; ++a) {
            model.min[a] = std::min(model.min[a], v.values[a]);
            model.max[a] = std::max(model.max[a], v.values[a]);
        }
    }
    return model;
}

FeatureVector apply_normalization(const NormalizationModel& model, const FeatureVector& v) {
    if (v.values.size() != model.min.size())
        throw Error("normalize", "dimension mismatch: vector has " + std::to_string(v.values.size()) +
                                     " attributes, model has " + std::to_string(model.min.size()));
    FeatureVector out = v;
    for (std::size_t a = 0; a < out.values.size(); ++a) {
        const double range = model.max[a] - model.min[a];
        if (!(range > 0.0)) {
            out.values[a] = 0.0;
            continue;
        }
        out.values[a] = std::clamp((v.values[a] - model.min[a]) / range, 0.0, 1.0);
    }
    return out;
}

}  // namespace semfeat
