// semfeat: command-line front end for the semantic feature pipeline.
//
//   semfeat gen-synthetic --out corpus.jsonl
//   semfeat run --corpus corpus.jsonl --out-dir out/
//   semfeat ablate --corpus corpus.jsonl --axis delta --repeats 10 --table-out delta.csv
//
// `--config <file>` reads flat `key = value` lines whose keys are long option
// names; options given on the command line win over the file.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "semfeat/classify.hpp"
#include "semfeat/common.hpp"
#include "semfeat/dictionary.hpp"
#include "semfeat/feature_io.hpp"
#include "semfeat/features.hpp"
#include "semfeat/ingest.hpp"
#include "semfeat/pipeline.hpp"

namespace fs = std::filesystem;
using namespace semfeat;

namespace {

/// Raw option values; converted into a PipelineConfig by build_config so that
/// every name is validated before any file is touched.
struct Options {
    std::string corpus;
    bool synthetic = false;
    SyntheticConfig syn;
    int slices = 0;
    int k_tags = kDefaultTagCount;
    int max_images = kDefaultMaxImages;
    bool count_both_directions = false;
    bool within_subimage = false;
    int k_cand = kDefaultCandidates;
    int s_sem = kDefaultSemanticObjects;
    std::string propositions = "p1,p4";
    std::string delta = "normal";
    int divide_k = 1;
    std::string layout = "summed";
    double train_fraction = 0.8;
    bool respect_split = false;
    int folds = 10;
    double C = 1.0;
    double tol = 1e-3;
    int workers = 0;
    std::string format = "csv";
    bool trace = false;
};

void add_corpus_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--corpus", o.corpus, "Tag corpus (JSONL); {slices} expands to the slice count");
    cmd->add_flag("--synthetic", o.synthetic, "Generate a synthetic corpus instead of reading one");
    cmd->add_option("--syn-categories", o.syn.categories, "Synthetic categories");
    cmd->add_option("--syn-images", o.syn.images_per_category, "Synthetic images per category");
    cmd->add_option("--syn-signature-size", o.syn.signature_size, "Signature labels per category");
    cmd->add_option("--syn-noise-size", o.syn.noise_size, "Shared noise labels");
    cmd->add_option("--syn-q", o.syn.signature_probability, "Signature draw probability");
    cmd->add_option("--syn-seed", o.syn.seed, "Seed of the synthetic corpus");
    cmd->add_option("--slices", o.slices, "Sub-images per image (9, 16 or 25)");
    cmd->add_option("--k-tags", o.k_tags, "Tags per sub-image");
    cmd->add_option("--train-fraction", o.train_fraction, "Per-category training fraction");
    cmd->add_flag("--respect-split", o.respect_split, "Keep the corpus train/test assignment");
    cmd->add_option("--max-images", o.max_images, "Training images per category dictionary");
    cmd->add_flag("--count-both-directions", o.count_both_directions, "Count each adjacency twice");
    cmd->add_flag("--within-subimage", o.within_subimage, "Only pair labels of the same sub-image");
    cmd->add_option("--workers", o.workers, "Worker threads (default SEMFEAT_WORKERS or all cores)");
}

void add_feature_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--k-cand", o.k_cand, "Candidate objects per image");
    cmd->add_option("--s-sem", o.s_sem, "Semantic objects kept per category");
    cmd->add_option("--propositions", o.propositions, "Comma-separated relation rules (p1..p4)");
    cmd->add_option("--delta", o.delta, "normal|avg|normalized|multi|root|divide");
    cmd->add_option("--divide-k", o.divide_k, "Exponent of the divide delta");
    cmd->add_option("--layout", o.layout, "summed|per-object");
}

void add_svm_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--C", o.C, "SVM regularization");
    cmd->add_option("--tol", o.tol, "SMO KKT tolerance");
    cmd->add_option("--folds", o.folds, "Cross-validation folds (0 disables)");
}

PipelineConfig build_config(const Options& o, std::uint64_t seed) {
    PipelineConfig c;
    c.corpus_path = o.corpus;
    if (o.synthetic) c.synthetic = o.syn;
    c.n_slices = o.slices;
    c.k_tags = o.k_tags;
    c.max_images = o.max_images;
    c.pattern.count_both_directions = o.count_both_directions;
    c.pattern.within_subimage = o.within_subimage;
    c.features.k_cand = o.k_cand;
    c.features.s_sem = o.s_sem;
    try {
        c.features.modes = parse_propositions(o.propositions);
        c.features.delta.variant = parse_delta_variant(o.delta);
        c.features.layout = parse_layout(o.layout);
        c.feature_format = parse_feature_format(o.format);
    } catch (const Error& e) {
        throw Error("config", e.what());
    }
    c.features.delta.divide_exponent = o.divide_k;
    c.train_fraction = o.train_fraction;
    c.respect_split = o.respect_split;
    c.folds = o.folds;
    c.smo.C = o.C;
    c.smo.tol = o.tol;
    c.seed = seed;
    c.workers = o.workers;
    c.write_trace = o.trace;
    validate(c);
    return c;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config", "cannot open config file '" + path + "'");
    std::map<std::string, std::string> values;
    std::string line;
    int number = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r";
        s.erase(0, s.find_first_not_of(ws));
        s.erase(s.find_last_not_of(ws) + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++number;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config", path + ":" + std::to_string(number) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        values[key] = value;
    }
    return values;
}

/// Fills options not given on the command line from the config file.
void apply_config_file(CLI::App* cmd, const std::map<std::string, std::string>& values,
                       CLI::App& app) {
    for (const auto& [key, value] : values) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt) opt = app.get_option_no_throw("--" + key);
        if (!opt) throw Error("config", "unknown config key '" + key + "' for '" + cmd->get_name() + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("output", "cannot write '" + path + "'");
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("input", "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-level semantic features from object tags, with an SMO-trained SVM"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 42;
    std::string config_path;
    app.add_option("--seed", seed, "Seed for splits, folds and generation");
    app.add_option("--config", config_path, "Flat key = value file with option defaults");

    Options o;

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic tag corpus");
    std::string gen_out;
    SyntheticConfig gen_cfg;
    int gen_slices = 9, gen_k_tags = kDefaultTagCount;
    gen->add_option("--out", gen_out, "Output JSONL path")->required();
    gen->add_option("--categories", gen_cfg.categories, "Number of categories");
    gen->add_option("--images", gen_cfg.images_per_category, "Images per category");
    gen->add_option("--signature-size", gen_cfg.signature_size, "Signature labels per category");
    gen->add_option("--noise-size", gen_cfg.noise_size, "Shared noise labels");
    gen->add_option("--q", gen_cfg.signature_probability, "Signature draw probability");
    gen->add_option("--slices", gen_slices, "Sub-images per image (9, 16 or 25)");
    gen->add_option("--k-tags", gen_k_tags, "Tags per sub-image");

    // build-dict
    auto* build = app.add_subcommand("build-dict", "Build per-category dictionaries");
    std::string dict_dir;
    add_corpus_options(build, o);
    build->add_option("--dict-dir", dict_dir, "Output directory")->required();

    // featurize
    auto* feat = app.add_subcommand("featurize", "Compute normalized feature vectors");
    std::string feat_out, train_out, test_out, trace_path;
    bool no_normalize = false;
    add_corpus_options(feat, o);
    add_feature_options(feat, o);
    feat->add_option("--dict-dir", dict_dir, "Load dictionaries from here instead of building them");
    feat->add_option("--out", feat_out, "All images")->required();
    feat->add_option("--train-out", train_out, "Training rows only");
    feat->add_option("--test-out", test_out, "Test rows only");
    feat->add_option("--format", o.format, "csv|svmlight (default: from each file extension)");
    feat->add_flag("--no-normalize", no_normalize, "Write raw (unnormalized) values");
    feat->add_option("--trace", trace_path, "Dump extracted semantic objects as JSONL");

    // train
    auto* train = app.add_subcommand("train", "Train the one-vs-one SMO model");
    std::string features_path, model_path, report_path;
    std::string train_format;
    train->add_option("--features", features_path, "Feature file (csv or svmlight)")->required();
    train->add_option("--format", train_format, "csv|svmlight (default: from extension)");
    train->add_option("--model-out", model_path, "Model JSON")->required();
    train->add_option("--C", o.C, "SVM regularization");
    train->add_option("--tol", o.tol, "SMO KKT tolerance");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a model, or cross-validate a feature file");
    std::string eval_model;
    int eval_folds = 0;
    eval->add_option("--features", features_path, "Feature file (csv or svmlight)")->required();
    eval->add_option("--format", train_format, "csv|svmlight (default: from extension)");
    eval->add_option("--model", eval_model, "Model JSON (hold-out evaluation)");
    eval->add_option("--folds", eval_folds, "Cross-validate with this many folds instead");
    eval->add_option("--report", report_path, "Report JSON")->required();
    eval->add_option("--C", o.C, "SVM regularization (cross-validation)");
    eval->add_option("--tol", o.tol, "SMO KKT tolerance (cross-validation)");

    // run
    auto* run = app.add_subcommand("run", "End-to-end pipeline");
    std::string out_dir;
    add_corpus_options(run, o);
    add_feature_options(run, o);
    add_svm_options(run, o);
    run->add_option("--out-dir", out_dir, "Output directory")->required();
    run->add_option("--format", o.format, "Feature file format: csv|svmlight");
    run->add_flag("--trace", o.trace, "Also write trace.jsonl");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Repeat the pipeline over an ablation grid");
    std::string axis = "delta", table_out;
    std::vector<std::string> values;
    int repeats = 10;
    add_corpus_options(ablate, o);
    add_feature_options(ablate, o);
    add_svm_options(ablate, o);
    ablate->add_option("--axis", axis, "dictionary_size|sub_images|delta");
    ablate->add_option("--values", values, "Grid values (default: all presets of the axis)")->delimiter(',');
    ablate->add_option("--repeats", repeats, "Re-seeded splits per value");
    ablate->add_option("--table-out", table_out, "CSV table path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!config_path.empty()) {
            const auto file_values = read_config_file(config_path);
            for (auto* sub : app.get_subcommands()) apply_config_file(sub, file_values, app);
        }

        if (*gen) {
            gen_cfg.seed = seed;
            auto spec = make_disjoint_spec(gen_cfg.categories, gen_cfg.images_per_category,
                                           gen_cfg.signature_size, gen_cfg.noise_size,
                                           gen_cfg.signature_probability, gen_slices, gen_k_tags);
            auto corpus = generate_synthetic(spec, seed);
            save_corpus(gen_out, corpus);
            std::cout << "wrote " << corpus.images.size() << " images in " << corpus.categories.size()
                      << " categories to " << gen_out << "\n";
        } else if (*build) {
            const auto config = build_config(o, seed);
            const auto corpus = prepare_corpus(config);
            const auto dicts = build_dictionaries(corpus, config.max_images, config.pattern,
                                                  resolve_workers(config.workers));
            save_dictionaries(dict_dir, dicts);
            for (const auto& d : dicts)
                std::cout << d.raw.category << ": " << d.raw.total << " tokens, " << d.pattern.pairs.size()
                          << " pairs\n";
        } else if (*feat) {
            const auto config = build_config(o, seed);
            const auto corpus = prepare_corpus(config);
            auto dicts = dict_dir.empty() || !fs::exists(dict_dir)
                             ? build_dictionaries(corpus, config.max_images, config.pattern,
                                                  resolve_workers(config.workers))
                             : load_dictionaries(dict_dir, corpus.categories);
            const FeatureExtractor extractor(corpus.categories, std::move(dicts));
            FeatureTable all, train_rows, test_rows;
            all.categories = train_rows.categories = test_rows.categories = corpus.categories;
            all.dimension = train_rows.dimension = test_rows.dimension = extractor.dimension(config.features);
            std::ostringstream trace;
            for (const auto& image : corpus.images) {
                std::vector<SemanticObjectSet> sets;
                all.rows.push_back(extractor.featurize(image, config.features, trace_path.empty() ? nullptr : &sets));
                for (const auto& set : sets) {
                    trace << "{\"image_id\":\"" << image.image_id << "\",\"category\":\"" << set.category
                          << "\",\"objects\":[";
                    for (std::size_t k = 0; k < set.objects.size(); ++k)
                        trace << (k ? "," : "") << "[\"" << set.objects[k].label << "\","
                              << set.objects[k].score << "," << set.objects[k].support << ",\""
                              << to_string(set.objects[k].via) << "\"]";
                    trace << "]}\n";
                }
            }
            if (!no_normalize) {
                std::vector<FeatureVector> fit_rows;
                for (std::size_t i = 0; i < corpus.images.size(); ++i)
                    if (corpus.images[i].split == Split::Train) fit_rows.push_back(all.rows[i]);
                const auto norm = fit_normalization(fit_rows);
                for (auto& row : all.rows) row = apply_normalization(norm, row);
            }
            for (std::size_t i = 0; i < corpus.images.size(); ++i) {
                if (corpus.images[i].split == Split::Train) train_rows.rows.push_back(all.rows[i]);
                if (corpus.images[i].split == Split::Test) test_rows.rows.push_back(all.rows[i]);
            }
            // Without --format each file's extension picks its format.
            const bool explicit_format = feat->get_option("--format")->count() > 0;
            auto format_for = [&](const std::string& path) {
                return explicit_format ? config.feature_format : format_from_path(path);
            };
            save_features(feat_out, all, format_for(feat_out));
            if (!train_out.empty()) save_features(train_out, train_rows, format_for(train_out));
            if (!test_out.empty()) save_features(test_out, test_rows, format_for(test_out));
            if (!trace_path.empty()) write_text(trace_path, trace.str());
            std::cout << "wrote " << all.rows.size() << " vectors of dimension " << all.dimension << "\n";
        } else if (*train) {
            const auto format = train_format.empty() ? format_from_path(features_path)
                                                     : parse_feature_format(train_format);
            const auto table = load_features(features_path, format);
            SmoOptions smo;
            smo.C = o.C;
            smo.tol = o.tol;
            const auto model = train_multiclass(table.rows, table.categories, smo);
            write_text(model_path, model_to_json(model));
            std::cout << "trained " << model.machines.size() << " pairwise machines on "
                      << table.rows.size() << " vectors\n";
        } else if (*eval) {
            const auto format = train_format.empty() ? format_from_path(features_path)
                                                     : parse_feature_format(train_format);
            const auto table = load_features(features_path, format);
            EvalReport report;
            if (eval_folds >= 2) {
                SmoOptions smo;
                smo.C = o.C;
                smo.tol = o.tol;
                report = cross_validate(table.rows, table.categories, eval_folds, seed, smo);
            } else if (!eval_model.empty()) {
                const auto model = model_from_json(read_text(eval_model));
                // Map the file's label names onto the model's category axis.
                std::vector<FeatureVector> rows = table.rows;
                for (auto& row : rows) {
                    auto it = std::find(model.categories.begin(), model.categories.end(), row.label);
                    if (it == model.categories.end())
                        throw Error("eval", "label '" + row.label + "' is not a model category");
                    row.label_index = static_cast<int>(it - model.categories.begin());
                }
                report = evaluate(model, rows);
            } else {
                throw Error("eval", "either --model or --folds >= 2 is required");
            }
            write_text(report_path, report_to_json(report));
            std::cout << "accuracy " << format_double(report.accuracy) << " on " << report.total()
                      << " vectors\n";
        } else if (*run) {
            auto config = build_config(o, seed);
            config.out_dir = out_dir;
            const auto result = run_pipeline(config);
            std::cout << "hold-out accuracy " << format_double(result.holdout.accuracy) << " ("
                      << result.holdout.total() << " test images)\n";
            if (result.cross_validation)
                std::cout << config.folds << "-fold cross-validation accuracy "
                          << format_double(result.cross_validation->accuracy) << "\n";
        } else if (*ablate) {
            auto config = build_config(o, seed);
            AblationGrid grid;
            grid.axis = parse_ablation_axis(axis);
            grid.values = values.empty() ? default_axis_values(grid.axis) : values;
            grid.repeats = repeats;
            const auto table = run_ablation(config, grid);
            std::cout << ablation_text(table);
            if (!table_out.empty()) write_text(table_out, ablation_csv(table));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
