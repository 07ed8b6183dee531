#pragma once

// Error metric, repeated trials and grid search.

#include "rscn/baselines.hpp"
#include "rscn/builder.hpp"
#include "rscn/tasks.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rscn {

/// sqrt(sum ||y(n) - t(n)||^2 / (n var(t))), population variance over all
/// target entries. Throws undefined_metric when var(t) = 0.
double nrmse(const Matrix& predictions, const Matrix& targets);

/// Post-washout NRMSE of a model run from the zero state over `seq`.
double evaluate_nrmse(const ReservoirModel& model, const SupervisedSequence& seq);

/// Post-washout predictions of a model run from the zero state.
Matrix predict(const ReservoirModel& model, const SupervisedSequence& seq);

struct ModelSpec {
    std::string name;
    std::variant<BuildConfig, BaselineConfig> config;
    double ridge = 0.0;

    static ModelSpec rscn(BuildConfig cfg = {});
    static ModelSpec esn(BaselineConfig cfg = {});
    static ModelSpec scr(BaselineConfig cfg = {});

    bool is_rscn() const noexcept { return std::holds_alternative<BuildConfig>(config); }
    /// Returns a copy with the model seed replaced.
    ModelSpec with_seed(std::uint64_t seed) const;
    /// Sets a named hyperparameter: alpha, n, lambda, ring_weight, ridge,
    /// sparsity, g_max, n_max.
    ModelSpec with(const std::string& key, double value) const;
};

struct TrainedModel {
    ReservoirModel model;
    std::optional<BuildHistory> history;
};

TrainedModel train_model(const ModelSpec& spec, const TaskSplits& task);

struct TrialResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    Index n_nodes = 0;
    double train_time_s = 0.0;
    double train_nrmse = 0.0;
    double val_nrmse = 0.0;
    double test_nrmse = 0.0;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and population standard deviation.
MeanStd mean_std(const std::vector<double>& v);

struct TrialReport {
    std::string model_name;
    std::string task_name;
    MeanStd reservoir_size;
    MeanStd train_time_s;
    MeanStd train_nrmse;
    MeanStd val_nrmse;
    MeanStd test_nrmse;
    Index n_trials = 0;
    Index failures = 0;
    std::vector<TrialResult> trials; ///< keyed by trial index

    bool complete() const noexcept { return failures == 0; }
};

/// Trial i trains with model seed base_seed + i on the task built once from
/// the manifest. Trials may run concurrently; results are keyed by index.
TrialReport run_trials(const TaskManifest& manifest, const ModelSpec& spec, Index n_trials,
                       std::uint64_t base_seed, unsigned workers = 0);

TrialReport run_trials(const TaskSplits& task, const ModelSpec& spec, Index n_trials,
                       std::uint64_t base_seed, unsigned workers = 0);

/// Named value lists; points are the Cartesian product with the last key
/// varying fastest.
using Grid = std::vector<std::pair<std::string, std::vector<double>>>;

/// Parses "alpha=0.5,0.75,0.99;n=50,100".
Grid parse_grid(const std::string& spec);

struct GridPoint {
    std::vector<std::pair<std::string, double>> values;
    TrialReport report;
};

struct GridResult {
    std::size_t best = 0;
    std::vector<GridPoint> table;

    const GridPoint& best_point() const { return table.at(best); }
};

/// Evaluates every grid point and picks the smallest mean validation NRMSE
/// (first in iteration order on ties).
GridResult grid_search(const TaskSplits& task, const ModelSpec& spec, const Grid& grid,
                       Index n_trials_per_point, std::uint64_t seed, unsigned workers = 0);

GridResult grid_search(const TaskManifest& manifest, const ModelSpec& spec, const Grid& grid,
                       Index n_trials_per_point, std::uint64_t seed, unsigned workers = 0);

} // namespace rscn
