#pragma once

// Reservoir network representation, state recursion and spectral utilities.

#include <Eigen/Dense>

#include "rscn/random.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace rscn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Activation { tanh, sigmoid };

/// Shape of the feedback matrix. Block lower triangular means that rows
/// appended after the initial block never feed back into later nodes.
enum class Structure { block_lower_triangular, general };

/// How the spectral radius of a non-triangular block is obtained.
enum class RadiusEstimator {
    sigma_bound, ///< use the largest singular value, an upper bound on rho
    eigen        ///< compute the eigenvalues of the block
};

/// How the feedback matrix is rescaled to obtain the echo state property.
enum class FeedbackScaling {
    contraction,  ///< W <- alpha / sigma_max(W) * W
    eq22_spectral ///< W <- alpha / rho(W) * W
};

std::string_view to_string(Activation a);
std::string_view to_string(Structure s);
std::string_view to_string(RadiusEstimator e);
std::string_view to_string(FeedbackScaling m);
Activation parse_activation(std::string_view s);
Structure parse_structure(std::string_view s);
RadiusEstimator parse_radius_estimator(std::string_view s);
FeedbackScaling parse_feedback_scaling(std::string_view s);

/// All parameters of one reservoir network.
///
/// input_weights is N x K, feedback N x N, biases N and readout
/// L x (N + K). The readout acts on the stacked vector (x(n), u(n)).
struct ReservoirModel {
    Activation activation = Activation::tanh;
    Structure structure = Structure::general;
    /// Size of the leading block of the feedback matrix that may be dense.
    /// Only meaningful for Structure::block_lower_triangular.
    Index initial_block_size = 0;

    Matrix input_weights;
    Matrix feedback;
    Vector biases;
    Matrix readout;

    Index n_nodes() const noexcept { return feedback.rows(); }
    Index n_inputs() const noexcept { return input_weights.cols(); }
    Index n_outputs() const noexcept { return readout.rows(); }

    /// Throws contract_violation when dimensions disagree, an entry is not
    /// finite, or the structure tag is not honoured by the feedback matrix.
    void validate() const;
};

/// Reservoir trajectory x(1..n) and the stacked regressors (x(n), u(n)).
struct StateSequence {
    Matrix states;   ///< N x n
    Matrix extended; ///< (N + K) x n
    Vector initial_state;
};

double activate(Activation a, double v) noexcept;

/// Runs x(n) = g(W_in u(n) + W_r x(n-1) + b) from x(0) = initial_state.
StateSequence run_reservoir(const ReservoirModel& model, const Matrix& inputs,
                            const Vector& initial_state);

/// Runs from the zero state.
StateSequence run_reservoir(const ReservoirModel& model, const Matrix& inputs);

/// Stacks states (N x n) over inputs (K x n).
Matrix stack_extended(const Matrix& states, const Matrix& inputs);

/// y(n) = W_out (x(n), u(n)) for every column.
Matrix readout(const ReservoirModel& model, const StateSequence& seq, const Matrix& inputs);

/// Largest singular value by power iteration on W^T W.
double max_singular_value(const Matrix& w);

/// Spectral radius. For block lower triangular matrices the spectrum is the
/// spectrum of the initial block plus the diagonal of the appended rows.
double spectral_radius(const Matrix& w, Structure structure, Index initial_block_size,
                       RadiusEstimator estimator = RadiusEstimator::sigma_bound);

/// Spectral radius of a general square matrix with the chosen estimator.
double spectral_radius(const Matrix& w, RadiusEstimator estimator = RadiusEstimator::sigma_bound);

struct ScaleResult {
    ReservoirModel model;
    double factor = 1.0;      ///< multiplier applied to the feedback matrix
    double sigma_before = 0.0;
    double rho_before = 0.0;
    /// alpha < rho / sigma_max, i.e. sigma_max of the result is below one.
    bool esp_certified = false;
    /// The matrix was already zero and was left untouched.
    bool noop = false;
};

/// Rescales the feedback matrix so that the chosen norm equals alpha.
ScaleResult scale_feedback(const ReservoirModel& model, double alpha, FeedbackScaling mode,
                           RadiusEstimator estimator = RadiusEstimator::sigma_bound);

struct EspCheckResult {
    Index pairs = 0;
    Index steps = 0;
    double tolerance = 0.0;
    double sigma_max = 0.0;
    double max_initial_gap = 0.0;
    double max_final_gap = 0.0;
    /// Largest first step at which a pair's gap fell below the tolerance, or
    /// -1 when some pair never got there.
    Index worst_convergence_step = -1;
    bool converged = false;
};

/// Drives the reservoir twice from random initial states in [-1, 1]^N with a
/// common input sequence and tracks the Euclidean state gap.
EspCheckResult two_trajectory_check(const ReservoirModel& model, const Matrix& inputs, Index pairs,
                                    double tolerance, std::uint64_t seed);

} // namespace rscn
