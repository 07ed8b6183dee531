#include "rscn/evaluation.hpp"

#include "rscn/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <cmath>
#include <sstream>
#include <thread>

namespace rscn {

double nrmse(const Matrix& predictions, const Matrix& targets)
{
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw contract_violation("predictions and targets differ in shape");
    const Index n = targets.cols();
    if (n < 2) throw undefined_metric("nrmse needs at least two samples");
    const double mean = targets.mean();
    const double var = (targets.array() - mean).square().sum() / static_cast<double>(targets.size());
    if (!(var > 0.0)) throw undefined_metric("target variance is zero");
    const double sse = (predictions - targets).squaredNorm();
    return std::sqrt(sse / (static_cast<double>(n) * var));
}

Matrix predict(const ReservoirModel& model, const SupervisedSequence& seq)
{
    const auto states = run_reservoir(model, seq.inputs);
    return model.readout * trim_washout(states.extended, seq.washout);
}

double evaluate_nrmse(const ReservoirModel& model, const SupervisedSequence& seq)
{
    return nrmse(predict(model, seq), trim_washout(seq.targets, seq.washout));
}

ModelSpec ModelSpec::rscn(BuildConfig cfg) { return {"RSCN", std::move(cfg), 0.0}; }

ModelSpec ModelSpec::esn(BaselineConfig cfg)
{
    cfg.topology = Topology::esn_random;
    return {"ESN", cfg, 0.0};
}

ModelSpec ModelSpec::scr(BaselineConfig cfg)
{
    cfg.topology = Topology::scr_ring;
    return {"SCR", cfg, 0.0};
}

ModelSpec ModelSpec::with_seed(std::uint64_t seed) const
{
    ModelSpec out = *this;
    std::visit([seed](auto& c) { c.seed = seed; }, out.config);
    return out;
}

ModelSpec ModelSpec::with(const std::string& key, double value) const
{
    ModelSpec out = *this;
    if (key == "ridge") {
        out.ridge = value;
        return out;
    }
    if (auto* b = std::get_if<BuildConfig>(&out.config)) {
        if (key == "alpha") b->esp_alpha = value;
        else if (key == "n" || key == "n_max") b->n_max = static_cast<Index>(value);
        else if (key == "sparsity") b->sparsity = value;
        else if (key == "g_max") b->g_max = static_cast<Index>(value);
        else if (key == "lambda") b->lambda_sequence = {value};
        else throw schema_error("unknown RSCN hyperparameter '" + key + "'");
    } else {
        auto& c = std::get<BaselineConfig>(out.config);
        if (key == "alpha") c.esp_alpha = value;
        else if (key == "n" || key == "n_max") c.n_nodes = static_cast<Index>(value);
        else if (key == "lambda") c.lambda = value;
        else if (key == "ring_weight") c.ring_weight = value;
        else if (key == "sparsity") c.sparsity = value;
        else throw schema_error("unknown baseline hyperparameter '" + key + "'");
    }
    return out;
}

TrainedModel train_model(const ModelSpec& spec, const TaskSplits& task)
{
    if (const auto* b = std::get_if<BuildConfig>(&spec.config)) {
        BuildConfig cfg = *b;
        if (spec.ridge > 0.0) cfg.ridge = spec.ridge;
        auto res = build_rscn(task.train, task.validation, cfg);
        return {std::move(res.model), std::move(res.history)};
    }
    return {build_baseline(std::get<BaselineConfig>(spec.config), task.train, spec.ridge), {}};
}

MeanStd mean_std(const std::vector<double>& v)
{
    if (v.empty()) return {};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

namespace {

TrialResult run_one(const TaskSplits& task, const ModelSpec& spec, std::uint64_t seed)
{
    TrialResult r;
    r.seed = seed;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto trained = train_model(spec.with_seed(seed), task);
        const auto t1 = std::chrono::steady_clock::now();
        r.train_time_s = std::chrono::duration<double>(t1 - t0).count();
        r.n_nodes = trained.model.n_nodes();
        r.train_nrmse = evaluate_nrmse(trained.model, task.train);
        r.val_nrmse = evaluate_nrmse(trained.model, task.validation);
        r.test_nrmse = evaluate_nrmse(trained.model, task.test);
        r.ok = std::isfinite(r.train_nrmse) && std::isfinite(r.val_nrmse) && std::isfinite(r.test_nrmse);
        if (!r.ok) r.error = "non-finite NRMSE";
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

template <class F>
void for_each_index(Index count, unsigned workers, F&& fn)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<Index>(workers, std::max<Index>(count, 1)));
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (Index i = next++; i < count; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace

TrialReport run_trials(const TaskSplits& task, const ModelSpec& spec, Index n_trials,
                       std::uint64_t base_seed, unsigned workers)
{
    if (n_trials < 1) throw contract_violation("n_trials must be at least 1");
    TrialReport rep;
    rep.model_name = spec.name;
    rep.task_name = task.train.name.substr(0, task.train.name.find('/'));
    rep.n_trials = n_trials;
    rep.trials.resize(static_cast<std::size_t>(n_trials));
    for_each_index(n_trials, workers, [&](Index i) {
        rep.trials[static_cast<std::size_t>(i)] =
            run_one(task, spec, base_seed + static_cast<std::uint64_t>(i));
    });

    std::vector<double> size, time, tr, va, te;
    for (const auto& t : rep.trials) {
        if (!t.ok) {
            ++rep.failures;
            continue;
        }
        size.push_back(static_cast<double>(t.n_nodes));
        time.push_back(t.train_time_s);
        tr.push_back(t.train_nrmse);
        va.push_back(t.val_nrmse);
        te.push_back(t.test_nrmse);
    }
    rep.reservoir_size = mean_std(size);
    rep.train_time_s = mean_std(time);
    rep.train_nrmse = mean_std(tr);
    rep.val_nrmse = mean_std(va);
    rep.test_nrmse = mean_std(te);
    return rep;
}

TrialReport run_trials(const TaskManifest& manifest, const ModelSpec& spec, Index n_trials,
                       std::uint64_t base_seed, unsigned workers)
{
    return run_trials(build_task(manifest), spec, n_trials, base_seed, workers);
}

Grid parse_grid(const std::string& spec)
{
    Grid grid;
    std::stringstream outer(spec);
    std::string item;
    while (std::getline(outer, item, ';')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw schema_error("grid entry '" + item + "' is not key=v1,v2,...");
        std::vector<double> values;
        std::stringstream inner(item.substr(eq + 1));
        std::string v;
        while (std::getline(inner, v, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(v, &used));
                if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw schema_error("grid value '" + v + "' is not a number");
            }
        }
        if (values.empty()) throw schema_error("grid entry '" + item + "' has no values");
        grid.emplace_back(item.substr(0, eq), std::move(values));
    }
    if (grid.empty()) throw schema_error("grid is empty");
    return grid;
}

GridResult grid_search(const TaskSplits& task, const ModelSpec& spec, const Grid& grid,
                       Index n_trials_per_point, std::uint64_t seed, unsigned workers)
{
    if (grid.empty()) throw contract_violation("grid is empty");
    for (const auto& [key, values] : grid)
        if (values.empty()) throw contract_violation("grid axis '" + key + "' is empty");

    std::size_t total = 1;
    for (const auto& axis : grid) total *= axis.second.size();

    GridResult result;
    for (std::size_t idx = 0; idx < total; ++idx) {
        GridPoint point;
        ModelSpec s = spec;
        std::size_t rest = idx;
        std::vector<double> picked(grid.size());
        for (std::size_t a = grid.size(); a-- > 0;) {
            picked[a] = grid[a].second[rest % grid[a].second.size()];
            rest /= grid[a].second.size();
        }
        for (std::size_t a = 0; a < grid.size(); ++a) {
            point.values.emplace_back(grid[a].first, picked[a]);
            s = s.with(grid[a].first, picked[a]);
        }
        point.report = run_trials(task, s, n_trials_per_point, seed, workers);
        result.table.push_back(std::move(point));
    }

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        const auto& r = result.table[i].report;
        if (r.failures == r.n_trials) continue;
        if (r.val_nrmse.mean < best) {
            best = r.val_nrmse.mean;
            result.best = i;
        }
    }
    return result;
}

GridResult grid_search(const TaskManifest& manifest, const ModelSpec& spec, const Grid& grid,
                       Index n_trials_per_point, std::uint64_t seed, unsigned workers)
{
    return grid_search(build_task(manifest), spec, grid, n_trials_per_point, seed, workers);
}

} // namespace rscn
