#pragma once

// Benchmark task generators, lagged-feature datasets and CSV ingestion.

#include "rscn/random.hpp"
#include "rscn/reservoir.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rscn {

/// Inputs and targets over discrete time. Column n is time step n.
struct SupervisedSequence {
    Matrix inputs;  ///< K x n
    Matrix targets; ///< L x n
    Index washout = 0;
    std::string name;

    Index length() const noexcept { return inputs.cols(); }
    /// Throws contract_violation when lengths differ, washout >= length or a
    /// value is not finite.
    void validate() const;
};

/// Train / validation / test splits of one task.
struct TaskSplits {
    SupervisedSequence train;
    SupervisedSequence validation;
    SupervisedSequence test;
};

// ---------------------------------------------------------------------------
// Mackey-Glass
// ---------------------------------------------------------------------------

struct MGParams {
    double upsilon = -0.1;
    double alpha_mg = 0.2;
    int tau = 17;
    int exponent = 10;
    double dt = 0.1;
    double init_low = 0.1;
    double init_high = 1.3;
    int length = 1177;
    /// When set, every history point equals this value instead of a draw.
    std::optional<double> constant_history;

    void validate() const;
};

/// Integrates dy/dt = upsilon*y + alpha*y(t-tau)/(1 + y(t-tau)^exponent)
/// with the midpoint rule. The history on [-tau, 0] is drawn i.i.d. per unit
/// time point from [init_low, init_high] and linearly interpolated.
/// Returns y(1..length) sampled at unit intervals.
std::vector<double> mackey_glass(const MGParams& p, Rng& rng);

enum class MGVariant { mg, mg1, mg2 };

MGVariant parse_mg_variant(std::string_view s);
std::string_view to_string(MGVariant v);

/// Lags (in series steps) used as inputs by each variant; target is y(n+6).
std::vector<int> mg_input_lags(MGVariant v);

struct MGSplitSpec {
    Index n_train = 500;
    Index n_validation = 300;
    Index washout = 20;
};

/// Windows the series into lagged samples and splits them in time order.
TaskSplits mg_task(const std::vector<double>& series, MGVariant variant,
                   const MGSplitSpec& splits = {});

/// Index (0-based, into the series) of the time n of the first usable sample.
Index mg_first_index();

// ---------------------------------------------------------------------------
// Nonlinear plant
// ---------------------------------------------------------------------------

struct PlantParams {
    double c_y = 0.72;
    double c_yu = 0.025;
    double c_u2 = 0.01;
    double c_u3 = 0.2;
    std::array<double, 4> initial_outputs{0.0, 0.0, 0.0, 0.1};
    Index n_train = 2000;
    Index n_validation = 1000;
    Index n_test = 1000;
    Index washout = 100;
};

enum class PlantPhase { train, test };

/// Test-phase input signal at time n (1-based).
double plant_test_input(Index n);

/// Simulates y(n+1) = c_y y(n) + c_yu y(n-1) u(n) + c_u2 u(n-2)^2 + c_u3 u(n-3)
/// for the given input sequence u(1..count). Returns y(1..count+1).
std::vector<double> plant_response(const PlantParams& p, const std::vector<double>& u);

/// Train phase: n_train + n_validation samples driven by U[-1, 1].
/// Test phase: n_test samples driven by the piecewise test signal.
/// Inputs are (y(n), u(n)), target y(n+1).
SupervisedSequence plant_simulate(const PlantParams& p, PlantPhase phase, Rng& rng);

/// Plant splits: train/validation cut from the random-input run, test from
/// the piecewise run.
TaskSplits plant_task(const PlantParams& p, Rng& rng);

/// Plant simulation driven by a caller-supplied input sequence.
SupervisedSequence plant_sequence(const PlantParams& p, const std::vector<double>& u,
                                  std::string name);

// ---------------------------------------------------------------------------
// CSV datasets
// ---------------------------------------------------------------------------

/// One model input: mean of the named channels at a common lag.
struct LagFeature {
    std::vector<std::string> channels;
    int lag = 0;
};

struct CsvSchema {
    std::vector<std::string> columns; ///< expected header, in order
    std::string target;               ///< target column (lag 0)
};

/// Reads a header-mandatory CSV and builds inputs from the lag features.
/// Rows whose lags reach before the first row are dropped from the front.
SupervisedSequence load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                            const std::vector<LagFeature>& features);

/// Writes inputs as u1..uK and targets as y (L = 1) or y1..yL, shortest
/// round-trip formatting.
std::string sequence_to_csv(const SupervisedSequence& seq);
void write_csv(const SupervisedSequence& seq, const std::filesystem::path& path);

/// Reads a file written by write_csv back (every column at lag 0).
SupervisedSequence read_sequence_csv(const std::filesystem::path& path, Index washout = 0);

/// Debutanizer feature maps: the full map (u1..u5, u5 lags 1-3, (u1+u2)/2,
/// y lags 1-4) and the reduced map (u1..u5, y(n-1)).
std::vector<LagFeature> debutanizer_full_features();
std::vector<LagFeature> debutanizer_reduced_features();
/// Power load: u1..u4 and y(n-1).
std::vector<LagFeature> power_load_features();

// ---------------------------------------------------------------------------
// Noise and manifests
// ---------------------------------------------------------------------------

/// Adds i.i.d. N(0, sigma^2) noise to the targets.
SupervisedSequence add_gaussian_noise(const SupervisedSequence& seq, double sigma, Rng& rng);

/// Population standard deviation of all target entries.
double target_std(const SupervisedSequence& seq);

/// Replayable task description:
/// {"generator": "mg"|"plant"|"csv", "variant": "mg"|"mg1"|"mg2",
///  "seed": u64, "splits": {...}, "washout": n, "path": ..., "schema": [...],
///  "target": "y", "features": "debutanizer_reduced"|"power_load"|[...],
///  "noise_fraction": 0.05}
struct TaskManifest {
    nlohmann::json doc;

    static TaskManifest from_json(const nlohmann::json& j);
    /// Shorthand names: mg, mg1, mg2, plant, csv:PATH.
    static TaskManifest from_name(std::string_view name, std::uint64_t seed);
    std::string name() const;
};

TaskSplits build_task(const TaskManifest& manifest);

} // namespace rscn
