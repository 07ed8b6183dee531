#pragma once

// Projection updates of the readout on a stream with a frozen reservoir.

#include "rscn/reservoir.hpp"
#include "rscn/tasks.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rscn {

enum class OnlineMode { basic, decreasing_gain, dead_zone };

std::string_view to_string(OnlineMode m);
/// Accepts basic, decreasing, decreasing_gain, deadzone, dead_zone.
OnlineMode parse_online_mode(std::string_view s);

struct OnlineConfig {
    OnlineMode mode = OnlineMode::basic;
    double a = 1.0;
    double c = 1.0;
    /// Noise bound. A single entry is used for every step; otherwise one entry
    /// per step.
    std::vector<double> phi{0.0};

    double phi_at(Index step) const;
    void validate() const;
};

struct StepDiagnostics {
    Index step = 0;
    double prior_err_norm = 0.0;
    double posterior_err_norm = 0.0;
    double eta = 0.0;
    std::optional<double> weight_gap;
};

struct OnlineState {
    Matrix readout;
    double accumulated_gain = 0.0;
    Index step = 0;
    std::vector<StepDiagnostics> diagnostics;
    std::optional<Matrix> w_ref;

    explicit OnlineState(Matrix w, std::optional<Matrix> ref = std::nullopt);
};

/// W += a (y - W g) g^T / (c + g^T g).
void project_step(OnlineState& state, const Vector& g, const Vector& y, double a, double c);

/// S += g^T g; W += (y - W g) g^T / S, skipped while S = 0.
void project_step_decreasing(OnlineState& state, const Vector& g, const Vector& y);

/// Basic step with a = c = 1 when any |prior error| exceeds 2 phi, identity
/// otherwise.
void project_step_deadzone(OnlineState& state, const Vector& g, const Vector& y, double phi);

/// Logs the step without changing the weights.
void hold_step(OnlineState& state, const Vector& g, const Vector& y);

void online_step(OnlineState& state, const OnlineConfig& cfg, const Vector& g, const Vector& y);

struct OnlineResult {
    Matrix predictions; ///< L x n, prediction made before the target is revealed
    Matrix targets;
    OnlineState state;
};

/// Runs the frozen reservoir over the stream from the zero state, predicts
/// with the current readout and then updates it with the revealed target.
/// No update is applied during the first `warmup_steps` steps (default: the
/// stream's washout), while the state still remembers the zero start.
OnlineResult online_run(const ReservoirModel& model, const SupervisedSequence& stream,
                        const OnlineConfig& cfg, const std::optional<Matrix>& w_ref = std::nullopt,
                        std::optional<Index> warmup_steps = std::nullopt);

/// Columns n, target_1..L, prediction_1..L, prior_err_norm,
/// posterior_err_norm, eta, weight_gap (empty when no reference).
std::string online_to_csv(const OnlineResult& result);

} // namespace rscn
