#pragma once

// Linear SVM trained by Sequential Minimal Optimization, one-vs-one multiclass
// voting, and stratified k-fold cross-validation.
//
// The solver works on the dual
//     max  W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j <x_i, x_j>
//     s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
// and updates two multipliers per step: the maximal KKT violator paired with
// the point whose error differs most from it.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "semfeat/features.hpp"

namespace semfeat {

struct SmoOptions {
    double C = 1.0;
    double tol = 1e-3;
    std::size_t max_iterations = 10'000'000;
    /// Called after every update with the iteration number, the dual
    /// objective and the current multipliers. Only used by tests and tracing.
    std::function<void(std::size_t, double, std::span<const double>)> observer;
};

struct LabeledPoint {
    std::vector<double> x;
    int y = 1;  ///< +1 or -1
};

struct BinarySvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    /// Training state; empty for models loaded from disk.
    std::vector<double> alpha;
    std::vector<LabeledPoint> points;
    double C = 1.0;
    double tol = 1e-3;
    std::size_t iterations = 0;
    bool converged = true;
    /// Support vector count read from a model file (alpha is not stored).
    std::size_t loaded_support_vectors = 0;

    double decision(std::span<const double> x) const;
    std::size_t support_vector_count() const;
};

/// Dual objective W(a) for the given points and multipliers.
double dual_objective(std::span<const LabeledPoint> points, std::span<const double> alpha);

BinarySvmModel train_binary(std::vector<LabeledPoint> points, const SmoOptions& options = {});

struct PairwiseMachine {
    int positive = 0;  ///< category index voted for when decision >= 0
    int negative = 1;
    BinarySvmModel svm;
};

struct MulticlassModel {
    std::vector<std::string> categories;
    std::size_t dimension = 0;
    std::vector<PairwiseMachine> machines;
};

/// One machine per unordered category pair (i < j), with i on the positive side.
MulticlassModel train_multiclass(std::span<const FeatureVector> train,
                                 const std::vector<std::string>& categories,
                                 const SmoOptions& options = {});

/// Majority vote; ties go to the lowest category index.
int predict(const MulticlassModel& model, std::span<const double> x);

struct EvalReport {
    std::vector<std::string> categories;
    double accuracy = 0.0;
    std::vector<double> per_category;
    /// confusion[true][predicted]
    std::vector<std::vector<long long>> confusion;
    std::vector<double> fold_accuracies;

    long long total() const;
};

/// Builds a report from (true, predicted) index pairs.
EvalReport make_report(const std::vector<std::string>& categories,
                       std::span<const std::pair<int, int>> outcomes);

EvalReport evaluate(const MulticlassModel& model, std::span<const FeatureVector> test);

/// Stratified assignment: each category's members are shuffled and dealt
/// round-robin into folds. Returns the fold index of every vector.
std::vector<int> stratified_folds(std::span<const FeatureVector> data, std::size_t n_categories,
                                  int folds, std::uint64_t seed);

EvalReport cross_validate(std::span<const FeatureVector> data,
                          const std::vector<std::string>& categories, int folds,
                          std::uint64_t seed, const SmoOptions& options = {});

std::string model_to_json(const MulticlassModel& model);
MulticlassModel model_from_json(std::string_view text);

std::string report_to_json(const EvalReport& report);

}  // namespace semfeat
