#include "semfeat/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "semfeat/common.hpp"

namespace semfeat {

namespace fs = std::filesystem;

namespace {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
    }
    if (error) std::rethrow_exception(error);
}

template <typename Fn>
auto stage(std::string_view name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(name, e.what());
    } catch (const std::exception& e) {
        throw Error(name, e.what());
    }
}

std::string substitute_slices(std::string path, int n_slices) {
    const std::string key = "{slices}";
    for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key))
        path.replace(pos, key.size(), std::to_string(n_slices));
    return path;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("output", "cannot write '" + path.string() + "'");
    out << content;
}

}  // namespace

void validate(const PipelineConfig& c) {
    auto fail = [](const std::string& what) { throw Error("config", what); };
    if (c.corpus_path.empty() && !c.synthetic) fail("either a corpus path or a synthetic corpus is required");
    if (c.n_slices != 0 && !is_valid_slice_count(c.n_slices)) fail("slices must be one of 9, 16, 25");
    if (c.k_tags < 1) fail("k-tags must be >= 1");
    if (c.max_images < 1) fail("max-images must be >= 1");
    if (c.features.k_cand < 1) fail("k-cand must be >= 1");
    if (c.features.s_sem < 1) fail("s-sem must be >= 1");
    if (c.features.modes.empty()) fail("at least one proposition is required");
    if (c.features.delta.divide_exponent < 0) fail("divide-k must be >= 0");
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) fail("train-fraction must lie in (0,1)");
    if (c.folds != 0 && c.folds < 2) fail("folds must be 0 (disabled) or >= 2");
    if (!(c.smo.C > 0.0)) fail("C must be positive");
    if (!(c.smo.tol > 0.0)) fail("tol must be positive");
    if (c.workers < 0) fail("workers must be >= 0");
    if (c.synthetic) {
        const auto& s = *c.synthetic;
        if (s.categories < 2) fail("synthetic categories must be >= 2");
        if (s.images_per_category < 2) fail("synthetic images per category must be >= 2");
        if (s.signature_size < 3) fail("synthetic signature size must be >= 3");
        if (s.noise_size < 0) fail("synthetic noise size must be >= 0");
        if (!(s.signature_probability > 0.0 && s.signature_probability <= 1.0))
            fail("synthetic q must lie in (0,1]");
    }
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SEMFEAT_WORKERS")) {
        const int value = std::atoi(env);
        if (value > 0) return value;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Corpus prepare_corpus(const PipelineConfig& config) {
    Corpus corpus = stage("ingest", [&] {
        if (config.synthetic) {
            const auto& s = *config.synthetic;
            auto spec = make_disjoint_spec(s.categories, s.images_per_category, s.signature_size,
                                           s.noise_size, s.signature_probability,
                                           config.n_slices ? config.n_slices : 9, config.k_tags);
            return generate_synthetic(spec, s.seed);
        }
        ParseOptions options;
        options.k_tags = config.k_tags;
        if (config.n_slices) options.n_slices = config.n_slices;
        return load_corpus(substitute_slices(config.corpus_path, config.n_slices ? config.n_slices : 9),
                           options);
    });
    if (corpus.images.empty()) throw Error("ingest", "corpus is empty");
    if (corpus.categories.size() < 2) throw Error("ingest", "corpus needs at least 2 categories");

    const bool all_assigned = std::none_of(corpus.images.begin(), corpus.images.end(), [](const auto& img) {
        return img.split == Split::Unassigned;
    });
    if (config.respect_split && all_assigned) return corpus;
    return stage("split", [&] { return split_corpus(corpus, config.train_fraction, config.seed); });
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    validate(config);
    const int workers = resolve_workers(config.workers);
    const Corpus corpus = prepare_corpus(config);

    auto dicts = stage("dictionary", [&] {
        return build_dictionaries(corpus, config.max_images, config.pattern, workers);
    });
    const FeatureExtractor extractor(corpus.categories, dicts);

    const auto n = corpus.images.size();
    std::vector<FeatureVector> raw(n);
    std::vector<std::vector<SemanticObjectSet>> traces(config.write_trace ? n : 0);
    stage("features", [&] {
        parallel_for(n, workers, [&](std::size_t i) {
            raw[i] = extractor.featurize(corpus.images[i], config.features,
                                         config.write_trace ? &traces[i] : nullptr);
        });
        return 0;
    });

    std::vector<FeatureVector> train_raw;
    for (std::size_t i = 0; i < n; ++i)
        if (corpus.images[i].split == Split::Train) train_raw.push_back(raw[i]);
    const auto norm = stage("normalize", [&] { return fit_normalization(train_raw); });

    PipelineResult result;
    result.features.categories = corpus.categories;
    result.features.dimension = extractor.dimension(config.features);
    std::vector<FeatureVector> train, test;
    for (std::size_t i = 0; i < n; ++i) {
        auto v = apply_normalization(norm, raw[i]);
        if (corpus.images[i].split == Split::Train)
            train.push_back(v);
        else if (corpus.images[i].split == Split::Test)
            test.push_back(v);
        result.features.rows.push_back(std::move(v));
    }

    result.model = stage("train", [&] { return train_multiclass(train, corpus.categories, config.smo); });
    result.holdout = stage("eval", [&] { return evaluate(result.model, test); });
    if (config.folds >= 2)
        result.cross_validation = stage("cross-validate", [&] {
            return cross_validate(train, corpus.categories, config.folds, config.seed, config.smo);
        });

    if (!config.out_dir.empty()) {
        stage("output", [&] {
            const fs::path dir(config.out_dir);
            fs::create_directories(dir);
            save_dictionaries((dir / "dict").string(), dicts);
            const char* ext = config.feature_format == FeatureFormat::Csv ? "features.csv" : "features.svm";
            save_features((dir / ext).string(), result.features, config.feature_format);
            write_file(dir / "model.json", model_to_json(result.model));
            write_file(dir / "report.json", pipeline_report_json(result));
            if (config.write_trace) {
                std::ostringstream out;
                for (std::size_t i = 0; i < n; ++i) {
                    nlohmann::ordered_json line;
                    line["image_id"] = corpus.images[i].image_id;
                    line["candidates"] = select_candidates(corpus.images[i], config.features.k_cand).candidates;
                    auto per_category = nlohmann::ordered_json::array();
                    for (const auto& set : traces[i]) {
                        nlohmann::ordered_json entry;
                        entry["category"] = set.category;
                        auto objects = nlohmann::ordered_json::array();
                        for (const auto& o : set.objects)
                            objects.push_back({{"label", o.label},
                                               {"score", o.score},
                                               {"support", o.support},
                                               {"via", std::string(to_string(o.via))}});
                        entry["objects"] = std::move(objects);
                        per_category.push_back(std::move(entry));
                    }
                    line["semantic_objects"] = std::move(per_category);
                    out << line.dump() << '\n';
                }
                write_file(dir / "trace.jsonl", out.str());
            }
            return 0;
        });
    }
    return result;
}

std::string pipeline_report_json(const PipelineResult& result) {
    nlohmann::ordered_json obj;
    obj["holdout"] = nlohmann::ordered_json::parse(report_to_json(result.holdout));
    obj["cross_validation"] = result.cross_validation
                                  ? nlohmann::ordered_json::parse(report_to_json(*result.cross_validation))
                                  : nlohmann::ordered_json(nullptr);
    return obj.dump(1) + "\n";
}

std::string_view to_string(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::DictionarySize: return "dictionary_size";
        case AblationAxis::SubImages: return "sub_images";
        case AblationAxis::Delta: return "delta";
    }
    return "delta";
}

AblationAxis parse_ablation_axis(std::string_view name) {
    std::string key(name);
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "dictionary_size") return AblationAxis::DictionarySize;
    if (key == "sub_images") return AblationAxis::SubImages;
    if (key == "delta") return AblationAxis::Delta;
    throw Error("config", "unknown ablation axis '" + std::string(name) +
                              "' (expected dictionary_size, sub_images or delta)");
}

std::vector<std::string> default_axis_values(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::DictionarySize: return {"9000", "16000", "25000"};
        case AblationAxis::SubImages: return {"9", "16", "25"};
        case AblationAxis::Delta: {
            std::vector<std::string> names;
            for (auto v : kAllDeltaVariants) names.emplace_back(to_string(v));
            return names;
        }
    }
    return {};
}

PipelineConfig apply_axis_value(const PipelineConfig& base, AblationAxis axis, const std::string& value) {
    PipelineConfig config = base;
    auto to_int = [&](std::string_view text) {
        int out = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw Error("config", "bad ablation value '" + value + "'");
        return out;
    };
    switch (axis) {
        case AblationAxis::Delta:
            config.features.delta.variant = parse_delta_variant(value);
            break;
        case AblationAxis::SubImages:
            config.n_slices = to_int(value);
            if (!is_valid_slice_count(config.n_slices))
                throw Error("config", "sub-image count must be one of 9, 16, 25");
            break;
        case AblationAxis::DictionarySize: {
            if (auto x = value.find('x'); x != std::string::npos) {
                config.max_images = to_int(std::string_view(value).substr(0, x));
                config.n_slices = to_int(std::string_view(value).substr(x + 1));
            } else {
                const int size = to_int(value);
                const int per_image = kDefaultMaxImages * base.k_tags;
                if (size % per_image != 0)
                    throw Error("config", "dictionary size " + value + " is not 100 images x slices x tags");
                config.max_images = kDefaultMaxImages;
                config.n_slices = size / per_image;
            }
            if (config.max_images < 1 || !is_valid_slice_count(config.n_slices))
                throw Error("config", "dictionary size '" + value + "' maps to an invalid grid");
            break;
        }
    }
    return config;
}

AblationTable run_ablation(const PipelineConfig& config, const AblationGrid& grid) {
    if (grid.repeats < 1) throw Error("config", "repeats must be >= 1");
    if (grid.values.empty()) throw Error("config", "ablation needs at least one value");
    validate(config);
    // Validate every column before running anything.
    std::vector<PipelineConfig> columns;
    for (const auto& value : grid.values) columns.push_back(apply_axis_value(config, grid.axis, value));

    AblationTable table;
    table.axis = grid.axis;
    table.values = grid.values;
    const auto n_cols = grid.values.size();
    const auto n_rows = static_cast<std::size_t>(grid.repeats);
    table.cells.assign(n_rows, std::vector<AblationCell>(n_cols));

    const int workers = resolve_workers(config.workers);
    parallel_for(n_rows * n_cols, workers, [&](std::size_t k) {
        const auto r = k / n_cols, c = k % n_cols;
        PipelineConfig cell = columns[c];
        cell.seed = config.seed + r;
        cell.folds = 0;
        cell.out_dir.clear();
        cell.write_trace = false;
        cell.workers = 1;
        try {
            table.cells[r][c].accuracy = run_pipeline(cell).holdout.accuracy;
        } catch (const std::exception& e) {
            table.cells[r][c].error = e.what();
        }
    });

    for (std::size_t c = 0; c < n_cols; ++c) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < n_rows; ++r)
            if (table.cells[r][c].accuracy) {
                sum += *table.cells[r][c].accuracy;
                ++count;
            }
        table.averages.push_back(count ? sum / static_cast<double>(count) : std::nan(""));
    }
    return table;
}

std::string ablation_csv(const AblationTable& table) {
    std::ostringstream out;
    out << "repeat";
    for (const auto& v : table.values) out << ',' << v;
    out << '\n';
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        out << (r + 1);
        for (const auto& cell : table.cells[r]) out << ',' << (cell.accuracy ? format_double(*cell.accuracy) : "error");
        out << '\n';
    }
    out << "average";
    for (double avg : table.averages) out << ',' << format_double(avg);
    out << '\n';
    return out.str();
}

std::string ablation_text(const AblationTable& table) {
    std::ostringstream out;
    const int width = 12;
    out << std::left << std::setw(10) << to_string(table.axis);
    for (const auto& v : table.values) out << std::right << std::setw(width) << v;
    out << '\n';
    out << std::fixed << std::setprecision(4);
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        out << std::left << std::setw(10) << ("#" + std::to_string(r + 1));
        for (const auto& cell : table.cells[r]) {
            out << std::right << std::setw(width);
            if (cell.accuracy)
                out << *cell.accuracy;
            else
                out << "error";
        }
        out << '\n';
    }
    out << std::left << std::setw(10) << "average";
    for (double avg : table.averages) out << std::right << std::setw(width) << avg;
    out << '\n';
    for (std::size_t r = 0; r < table.cells.size(); ++r)
        for (std::size_t c = 0; c < table.cells[r].size(); ++c)
            if (!table.cells[r][c].accuracy)
                out << "cell (" << r + 1 << ", " << table.values[c] << "): " << table.cells[r][c].error << '\n';
    return out.str();
}

}  // namespace semfeat
