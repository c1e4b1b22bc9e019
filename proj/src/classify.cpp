#include "semfeat/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "semfeat/common.hpp"

namespace semfeat {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
    return sum;
}

}  // namespace

double BinarySvmModel::decision(std::span<const double> x) const {
    if (x.size() != weights.size())
        throw Error("classify", "dimension mismatch: got " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(weights.size()));
    return dot(weights, x) + bias;
}

std::size_t BinarySvmModel::support_vector_count() const {
    if (alpha.empty()) return loaded_support_vectors;
    return static_cast<std::size_t>(
        std::count_if(alpha.begin(), alpha.end(), [](double a) { return a > 0.0; }));
}

double dual_objective(std::span<const LabeledPoint> points, std::span<const double> alpha) {
    double linear = 0.0, quadratic = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        linear += alpha[i];
        for (std::size_t j = 0; j < points.size(); ++j)
            quadratic += alpha[i] * alpha[j] * points[i].y * points[j].y * dot(points[i].x, points[j].x);
    }
    return linear - 0.5 * quadratic;
}

BinarySvmModel train_binary(std::vector<LabeledPoint> points, const SmoOptions& options) {
    if (!(options.C > 0.0)) throw Error("classify", "C must be positive");
    if (!(options.tol > 0.0)) throw Error("classify", "tol must be positive");
    const std::size_t n = points.size();
    bool has_pos = false, has_neg = false;
    const std::size_t dim = n ? points.front().x.size() : 0;
    for (const auto& p : points) {
        if (p.y == 1)
            has_pos = true;
        else if (p.y == -1)
            has_neg = true;
        else
            throw Error("classify", "labels must be +1 or -1");
        if (p.x.size() != dim) throw Error("classify", "inconsistent point dimensions");
        for (double v : p.x)
            if (!std::isfinite(v)) throw Error("classify", "non-finite feature value");
    }
    if (!has_pos || !has_neg) throw Error("classify", "training data must contain both classes");

    const double C = options.C;
    // Gradient of the minimised form f(a) = 1/2 a'Qa - sum(a): G = Qa - 1.
    std::vector<double> alpha(n, 0.0), grad(n, -1.0), diag(n);
    for (std::size_t t = 0; t < n; ++t) diag[t] = dot(points[t].x, points[t].x);
    auto in_up = [&](std::size_t t) { return points[t].y == 1 ? alpha[t] < C : alpha[t] > 0.0; };
    auto in_low = [&](std::size_t t) { return points[t].y == 1 ? alpha[t] > 0.0 : alpha[t] < C; };

    BinarySvmModel model;
    model.C = C;
    model.tol = options.tol;
    model.converged = false;
    std::size_t iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        // i maximises -y G over I_up, j minimises it over I_low; the pair
        // maximises |E_i - E_j| among feasible directions.
        std::size_t i = n, j = n;
        double up_max = -std::numeric_limits<double>::infinity();
        double low_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -points[t].y * grad[t];
            if (in_up(t) && v > up_max) {
                up_max = v;
                i = t;
            }
            if (in_low(t) && v < low_min) {
                low_min = v;
                j = t;
            }
        }
        if (i == n || j == n || up_max - low_min < options.tol) {
            model.converged = true;
            break;
        }

        const double kij = dot(points[i].x, points[j].x);
        double eta = diag[i] + diag[j] - 2.0 * kij;
        if (eta <= 0.0) eta = 1e-12;
        // Step along a_i += y_i * step, a_j -= y_j * step.
        double step = (up_max - low_min) / eta;
        const double room_i = points[i].y == 1 ? C - alpha[i] : alpha[i];
        const double room_j = points[j].y == 1 ? alpha[j] : C - alpha[j];
        step = std::min({step, room_i, room_j});

        alpha[i] += points[i].y * step;
        alpha[j] -= points[j].y * step;
        if (step == room_i) alpha[i] = points[i].y == 1 ? C : 0.0;
        if (step == room_j) alpha[j] = points[j].y == 1 ? 0.0 : C;

        for (std::size_t t = 0; t < n; ++t) {
            const double kit = t == i ? diag[i] : dot(points[i].x, points[t].x);
            const double kjt = t == j ? diag[j] : dot(points[j].x, points[t].x);
            grad[t] += step * points[t].y * (kit - kjt);
        }

        if (options.observer) {
            double w = 0.0;
            for (std::size_t t = 0; t < n; ++t) w += alpha[t] * (1.0 - grad[t]);
            options.observer(iter + 1, 0.5 * w, alpha);
        }
    }
    model.iterations = iter;

    // Bias from free multipliers, or the midpoint of the feasible interval.
    double free_sum = 0.0;
    std::size_t free_count = 0;
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = points[t].y * grad[t];
        const bool at_upper = alpha[t] >= C;
        const bool at_lower = alpha[t] <= 0.0;
        if (at_upper) {
            if (points[t].y == 1)
                lower = std::max(lower, yg);
            else
                upper = std::min(upper, yg);
        } else if (at_lower) {
            if (points[t].y == 1)
                upper = std::min(upper, yg);
            else
                lower = std::max(lower, yg);
        } else {
            free_sum += yg;
            ++free_count;
        }
    }
    const double rho = free_count ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;
    model.bias = -rho;

    model.weights.assign(dim, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] != 0.0)
            for (std::size_t k = 0; k < dim; ++k) model.weights[k] += alpha[t] * points[t].y * points[t].x[k];
    model.alpha = std::move(alpha);
    model.points = std::move(points);
    return model;
}

MulticlassModel train_multiclass(std::span<const FeatureVector> train,
                                 const std::vector<std::string>& categories,
                                 const SmoOptions& options) {
    const auto m = categories.size();
    if (m < 2) throw Error("classify", "need at least 2 categories");
    if (train.empty()) throw Error("classify", "no training vectors");
    MulticlassModel model;
    model.categories = categories;
    model.dimension = train.front().values.size();

    std::vector<std::vector<const FeatureVector*>> by_class(m);
    for (const auto& v : train) {
        if (v.label_index < 0 || static_cast<std::size_t>(v.label_index) >= m)
            throw Error("classify", "vector '" + v.image_id + "' has an invalid label");
        if (v.values.size() != model.dimension) throw Error("classify", "inconsistent vector dimensions");
        by_class[static_cast<std::size_t>(v.label_index)].push_back(&v);
    }
    for (std::size_t c = 0; c < m; ++c)
        if (by_class[c].empty())
            throw Error("classify", "category '" + categories[c] + "' has no training vectors");

    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            std::vector<LabeledPoint> points;
            points.reserve(by_class[a].size() + by_class[b].size());
            for (const auto* v : by_class[a]) points.push_back({v->values, 1});
            for (const auto* v : by_class[b]) points.push_back({v->values, -1});
            model.machines.push_back(
                {static_cast<int>(a), static_cast<int>(b), train_binary(std::move(points), options)});
        }
    }
    return model;
}

int predict(const MulticlassModel& model, std::span<const double> x) {
    if (x.size() != model.dimension)
        throw Error("classify", "dimension mismatch: got " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(model.dimension));
    std::vector<int> votes(model.categories.size(), 0);
    for (const auto& machine : model.machines)
        ++votes[static_cast<std::size_t>(machine.svm.decision(x) >= 0.0 ? machine.positive
                                                                         : machine.negative)];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

long long EvalReport::total() const {
    long long sum = 0;
    for (const auto& row : confusion) sum = std::accumulate(row.begin(), row.end(), sum);
    return sum;
}

EvalReport make_report(const std::vector<std::string>& categories,
                       std::span<const std::pair<int, int>> outcomes) {
    const auto m = categories.size();
    EvalReport report;
    report.categories = categories;
    report.confusion.assign(m, std::vector<long long>(m, 0));
    for (auto [truth, predicted] : outcomes) {
        if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= m ||
            static_cast<std::size_t>(predicted) >= m)
            throw Error("classify", "category index out of range in outcomes");
        ++report.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    }
    long long correct = 0;
    report.per_category.assign(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
        const auto row = std::accumulate(report.confusion[c].begin(), report.confusion[c].end(), 0LL);
        correct += report.confusion[c][c];
        if (row > 0)
            report.per_category[c] =
                static_cast<double>(report.confusion[c][c]) / static_cast<double>(row);
    }
    const auto total = static_cast<long long>(outcomes.size());
    report.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    return report;
}

EvalReport evaluate(const MulticlassModel& model, std::span<const FeatureVector> test) {
    std::vector<std::pair<int, int>> outcomes;
    outcomes.reserve(test.size());
    for (const auto& v : test) outcomes.emplace_back(v.label_index, predict(model, v.values));
    return make_report(model.categories, outcomes);
}

std::vector<int> stratified_folds(std::span<const FeatureVector> data, std::size_t n_categories,
                                  int folds, std::uint64_t seed) {
    if (folds < 2) throw Error("classify", "need at least 2 folds");
    std::vector<std::vector<std::size_t>> members(n_categories);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int label = data[i].label_index;
        if (label < 0 || static_cast<std::size_t>(label) >= n_categories)
            throw Error("classify", "vector '" + data[i].image_id + "' has an invalid label");
        members[static_cast<std::size_t>(label)].push_back(i);
    }
    Rng rng(seed);
    std::vector<int> assignment(data.size(), 0);
    // The dealing position carries over between categories to balance folds.
    std::size_t position = 0;
    for (auto& group : members) {
        rng.shuffle(group.begin(), group.end());
        for (auto index : group) assignment[index] = static_cast<int>(position++ % static_cast<std::size_t>(folds));
    }
    return assignment;
}

EvalReport cross_validate(std::span<const FeatureVector> data,
                          const std::vector<std::string>& categories, int folds,
                          std::uint64_t seed, const SmoOptions& options) {
    std::vector<std::size_t> sizes(categories.size(), 0);
    for (const auto& v : data)
        if (v.label_index >= 0 && static_cast<std::size_t>(v.label_index) < sizes.size())
            ++sizes[static_cast<std::size_t>(v.label_index)];
    for (std::size_t c = 0; c < categories.size(); ++c)
        if (sizes[c] < 2)
            throw Error("classify", "category '" + categories[c] + "' has fewer than 2 vectors");

    const auto assignment = stratified_folds(data, categories.size(), folds, seed);
    std::vector<std::pair<int, int>> outcomes;
    std::vector<double> fold_accuracies;
    for (int fold = 0; fold < folds; ++fold) {
        std::vector<FeatureVector> train, test;
        for (std::size_t i = 0; i < data.size(); ++i)
            (assignment[i] == fold ? test : train).push_back(data[i]);
        if (test.empty()) continue;
        const auto model = train_multiclass(train, categories, options);
        std::size_t correct = 0;
        for (const auto& v : test) {
            const int predicted = predict(model, v.values);
            correct += predicted == v.label_index;
            outcomes.emplace_back(v.label_index, predicted);
        }
        fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
    }
    auto report = make_report(categories, outcomes);
    report.fold_accuracies = std::move(fold_accuracies);
    return report;
}

std::string model_to_json(const MulticlassModel& model) {
    nlohmann::ordered_json obj;
    obj["kernel"] = "linear";
    obj["categories"] = model.categories;
    obj["dimension"] = model.dimension;
    auto machines = nlohmann::ordered_json::array();
    for (const auto& m : model.machines) {
        nlohmann::ordered_json entry;
        entry["positive"] = m.positive;
        entry["negative"] = m.negative;
        entry["weights"] = m.svm.weights;
        entry["bias"] = m.svm.bias;
        entry["C"] = m.svm.C;
        entry["tol"] = m.svm.tol;
        entry["iterations"] = m.svm.iterations;
        entry["support_vectors"] = m.svm.support_vector_count();
        entry["converged"] = m.svm.converged;
        machines.push_back(std::move(entry));
    }
    obj["machines"] = std::move(machines);
    return obj.dump(1) + "\n";
}

MulticlassModel model_from_json(std::string_view text) {
    MulticlassModel model;
    try {
        auto obj = nlohmann::json::parse(text);
        if (obj.value("kernel", "linear") != "linear") throw Error("classify", "only linear models are supported");
        model.categories = obj.at("categories").get<std::vector<std::string>>();
        model.dimension = obj.at("dimension").get<std::size_t>();
        for (const auto& entry : obj.at("machines")) {
            PairwiseMachine m;
            m.positive = entry.at("positive").get<int>();
            m.negative = entry.at("negative").get<int>();
            m.svm.weights = entry.at("weights").get<std::vector<double>>();
            m.svm.bias = entry.at("bias").get<double>();
            m.svm.C = entry.value("C", 1.0);
            m.svm.tol = entry.value("tol", 1e-3);
            m.svm.iterations = entry.value("iterations", std::size_t{0});
            m.svm.converged = entry.value("converged", true);
            m.svm.loaded_support_vectors = entry.value("support_vectors", std::size_t{0});
            const auto m_count = static_cast<int>(model.categories.size());
            if (m.positive < 0 || m.negative < 0 || m.positive >= m_count || m.negative >= m_count ||
                m.svm.weights.size() != model.dimension)
                throw Error("classify", "inconsistent machine in model file");
            model.machines.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("classify", std::string("malformed model file: ") + e.what());
    }
    return model;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json obj;
    obj["categories"] = report.categories;
    obj["accuracy"] = report.accuracy;
    obj["total"] = report.total();
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < report.categories.size(); ++c)
        per[report.categories[c]] = report.per_category[c];
    obj["per_category"] = std::move(per);
    obj["confusion"] = report.confusion;
    obj["folds"] = report.fold_accuracies;
    return obj.dump(1) + "\n";
}

}  // namespace semfeat
