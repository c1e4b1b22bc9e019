#pragma once

// End-to-end wiring: corpus -> split -> dictionaries -> features ->
// normalization -> SVM -> evaluation, plus the ablation harness that repeats
// the pipeline over a grid of settings.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semfeat/classify.hpp"
#include "semfeat/dictionary.hpp"
#include "semfeat/feature_io.hpp"
#include "semfeat/features.hpp"
#include "semfeat/ingest.hpp"

namespace semfeat {

struct SyntheticConfig {
    int categories = 5;
    int images_per_category = 40;
    int signature_size = 12;
    int noise_size = 40;
    double signature_probability = 0.8;
    std::uint64_t seed = 1;
};

struct PipelineConfig {
    /// Tag corpus (JSONL). A `{slices}` placeholder is replaced with the
    /// slice count, which lets grid ablations pick per-grid files.
    std::string corpus_path;
    /// Generate the corpus in memory instead of reading corpus_path.
    std::optional<SyntheticConfig> synthetic;

    int n_slices = 0;  ///< 0 accepts whatever the corpus uses
    int k_tags = kDefaultTagCount;
    int max_images = kDefaultMaxImages;
    PatternOptions pattern;
    FeatureParams features;

    double train_fraction = 0.8;
    /// Keep a corpus's existing train/test assignment instead of re-splitting.
    bool respect_split = false;
    int folds = 10;  ///< 0 disables cross-validation
    SmoOptions smo;
    std::uint64_t seed = 42;
    int workers = 0;  ///< 0 = SEMFEAT_WORKERS or hardware concurrency

    /// Output directory; empty runs without writing files.
    std::string out_dir;
    FeatureFormat feature_format = FeatureFormat::Csv;
    bool write_trace = false;
};

/// Throws Error("config", ...) on the first invalid field.
void validate(const PipelineConfig& config);

/// Resolves config.workers against SEMFEAT_WORKERS and the hardware.
int resolve_workers(int requested);

/// Loads or generates the corpus and applies the configured split.
Corpus prepare_corpus(const PipelineConfig& config);

struct PipelineResult {
    EvalReport holdout;
    std::optional<EvalReport> cross_validation;
    FeatureTable features;  ///< normalized, corpus order
    MulticlassModel model;
};

/// Runs every stage. When out_dir is set writes dict/<category>.json,
/// features.<csv|svm>, model.json, report.json and optionally trace.jsonl.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Combined JSON report (holdout plus optional cross-validation).
std::string pipeline_report_json(const PipelineResult& result);

enum class AblationAxis { DictionarySize, SubImages, Delta };

std::string_view to_string(AblationAxis axis);
AblationAxis parse_ablation_axis(std::string_view name);
std::vector<std::string> default_axis_values(AblationAxis axis);

struct AblationGrid {
    AblationAxis axis = AblationAxis::Delta;
    std::vector<std::string> values;
    int repeats = 1;
};

/// Applies one grid value to a copy of the config. Dictionary sizes are either
/// presets (9000, 16000, 25000 = 100 images x 9/16/25 sub-images x 10 tags) or
/// explicit `<images>x<slices>` pairs.
PipelineConfig apply_axis_value(const PipelineConfig& base, AblationAxis axis, const std::string& value);

struct AblationCell {
    std::optional<double> accuracy;
    std::string error;
};

struct AblationTable {
    AblationAxis axis = AblationAxis::Delta;
    std::vector<std::string> values;
    /// cells[repeat][column]
    std::vector<std::vector<AblationCell>> cells;
    /// Mean over the successful cells of each column (NaN when none).
    std::vector<double> averages;
};

/// Repeat r of every column uses split seed base + r. Cells run on a bounded
/// worker pool; a failing cell records its error and the grid continues.
AblationTable run_ablation(const PipelineConfig& config, const AblationGrid& grid);

std::string ablation_csv(const AblationTable& table);
std::string ablation_text(const AblationTable& table);

}  // namespace semfeat
