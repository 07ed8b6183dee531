#include "rscn/reservoir.hpp"

#include "rscn/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace rscn {

namespace {

constexpr int power_iteration_cap = 10000;
constexpr double power_iteration_tol = 1e-12;

std::string dims(const Matrix& m)
{
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

} // namespace

std::string_view to_string(Activation a)
{
    return a == Activation::tanh ? "tanh" : "sigmoid";
}

std::string_view to_string(Structure s)
{
    return s == Structure::block_lower_triangular ? "block_lower_triangular" : "general";
}

std::string_view to_string(RadiusEstimator e)
{
    return e == RadiusEstimator::sigma_bound ? "sigma_bound" : "eigen";
}

std::string_view to_string(FeedbackScaling m)
{
    return m == FeedbackScaling::contraction ? "contraction" : "eq22_spectral";
}

Activation parse_activation(std::string_view s)
{
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    throw schema_error("unknown activation '" + std::string(s) + "'");
}

Structure parse_structure(std::string_view s)
{
    if (s == "block_lower_triangular") return Structure::block_lower_triangular;
    if (s == "general") return Structure::general;
    throw schema_error("unknown structure tag '" + std::string(s) + "'");
}

RadiusEstimator parse_radius_estimator(std::string_view s)
{
    if (s == "sigma_bound") return RadiusEstimator::sigma_bound;
    if (s == "eigen") return RadiusEstimator::eigen;
    throw schema_error("unknown radius estimator '" + std::string(s) + "'");
}

FeedbackScaling parse_feedback_scaling(std::string_view s)
{
    if (s == "contraction") return FeedbackScaling::contraction;
    if (s == "eq22_spectral" || s == "spectral") return FeedbackScaling::eq22_spectral;
    throw schema_error("unknown feedback scaling '" + std::string(s) + "'");
}

void ReservoirModel::validate() const
{
    const Index n = feedback.rows();
    if (feedback.cols() != n)
        throw contract_violation("feedback matrix must be square, got " + dims(feedback));
    if (input_weights.rows() != n)
        throw contract_violation("input_weights has " + std::to_string(input_weights.rows())
                                 + " rows, expected " + std::to_string(n));
    if (biases.size() != n)
        throw contract_violation("biases has length " + std::to_string(biases.size())
                                 + ", expected " + std::to_string(n));
    if (readout.size() != 0 && readout.cols() != n + input_weights.cols())
        throw contract_violation("readout is " + dims(readout) + ", expected L x "
                                 + std::to_string(n + input_weights.cols()));
    if (!input_weights.allFinite() || !feedback.allFinite() || !biases.allFinite()
        || !readout.allFinite())
        throw contract_violation("model contains non-finite entries");
    if (structure == Structure::block_lower_triangular) {
        if (initial_block_size < 0 || initial_block_size > n)
            throw contract_violation("initial_block_size out of range");
        for (Index i = 0; i < n; ++i)
            for (Index j = std::max(i, initial_block_size - 1) + 1; j < n; ++j)
                if (feedback(i, j) != 0.0)
                    throw contract_violation("feedback entry (" + std::to_string(i) + ","
                                             + std::to_string(j)
                                             + ") breaks the block lower triangular structure");
    }
}

double activate(Activation a, double v) noexcept
{
    if (a == Activation::tanh) return std::tanh(v);
    return 1.0 / (1.0 + std::exp(-v));
}

Matrix stack_extended(const Matrix& states, const Matrix& inputs)
{
    if (states.cols() != inputs.cols())
        throw contract_violation("states and inputs have different lengths");
    Matrix ext(states.rows() + inputs.rows(), states.cols());
    ext.topRows(states.rows()) = states;
    ext.bottomRows(inputs.rows()) = inputs;
    return ext;
}

StateSequence run_reservoir(const ReservoirModel& model, const Matrix& inputs,
                            const Vector& initial_state)
{
    const Index n_nodes = model.n_nodes();
    if (model.input_weights.rows() != n_nodes || model.biases.size() != n_nodes
        || model.feedback.cols() != n_nodes)
        throw contract_violation("inconsistent reservoir model dimensions");
    if (inputs.rows() != model.n_inputs())
        throw contract_violation("inputs have " + std::to_string(inputs.rows())
                                 + " channels, model expects "
                                 + std::to_string(model.n_inputs()));
    if (initial_state.size() != n_nodes)
        throw contract_violation("initial state has length " + std::to_string(initial_state.size())
                                 + ", expected " + std::to_string(n_nodes));
    if (!inputs.allFinite()) throw contract_violation("inputs contain non-finite values");

    StateSequence seq;
    seq.initial_state = initial_state;
    seq.states.resize(n_nodes, inputs.cols());

    // Input drive for all steps at once; the recursion only adds feedback.
    Matrix drive = model.input_weights * inputs;
    drive.colwise() += model.biases;

    Vector prev = initial_state;
    Vector pre(n_nodes);
    for (Index t = 0; t < inputs.cols(); ++t) {
        pre.noalias() = model.feedback * prev;
        pre += drive.col(t);
        for (Index i = 0; i < n_nodes; ++i) {
            const double v = activate(model.activation, pre(i));
            if (!std::isfinite(v))
                throw numeric_overflow("non-finite reservoir state at step " + std::to_string(t + 1),
                                       static_cast<long>(t + 1));
            seq.states(i, t) = v;
        }
        prev = seq.states.col(t);
    }
    seq.extended = stack_extended(seq.states, inputs);
    return seq;
}

StateSequence run_reservoir(const ReservoirModel& model, const Matrix& inputs)
{
    return run_reservoir(model, inputs, Vector::Zero(model.n_nodes()));
}

Matrix readout(const ReservoirModel& model, const StateSequence& seq, const Matrix& inputs)
{
    if (seq.states.rows() != model.n_nodes() || inputs.rows() != model.n_inputs()
        || seq.states.cols() != inputs.cols())
        throw contract_violation("state sequence does not match model and inputs");
    if (model.readout.cols() != model.n_nodes() + model.n_inputs())
        throw contract_violation("readout is " + dims(model.readout) + ", expected L x "
                                 + std::to_string(model.n_nodes() + model.n_inputs()));
    const Index n = model.n_nodes();
    return model.readout.leftCols(n) * seq.states + model.readout.rightCols(model.n_inputs()) * inputs;
}

double max_singular_value(const Matrix& w)
{
    if (w.size() == 0) return 0.0;
    const double fro = w.norm();
    if (fro == 0.0) return 0.0;

    // Deterministic, non-degenerate starting vector.
    Vector v(w.cols());
    std::uint64_t s = 0x9E3779B97F4A7C15ULL;
    for (Index i = 0; i < v.size(); ++i) {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        v(i) = 0.5 + static_cast<double>(s >> 11) * 0x1.0p-53;
    }
    v.normalize();
    if ((w * v).norm() == 0.0) {
        Index j = 0;
        w.colwise().norm().maxCoeff(&j);
        v.setZero();
        v(j) = 1.0;
    }

    double lambda = 0.0;
    Vector wv(w.rows());
    Vector next(w.cols());
    for (int it = 0; it < power_iteration_cap; ++it) {
        wv.noalias() = w * v;
        next.noalias() = w.transpose() * wv;
        const double est = wv.squaredNorm(); // Rayleigh quotient v^T W^T W v
        const double nn = next.norm();
        if (nn == 0.0) return std::sqrt(est);
        v = next / nn;
        if (it > 0 && std::abs(est - lambda) <= power_iteration_tol * est) {
            lambda = est;
            break;
        }
        lambda = est;
    }
    return std::sqrt(lambda);
}

double spectral_radius(const Matrix& w, RadiusEstimator estimator)
{
    if (w.rows() != w.cols()) throw contract_violation("spectral radius needs a square matrix");
    if (w.size() == 0) return 0.0;
    if (estimator == RadiusEstimator::sigma_bound) return max_singular_value(w);

    Eigen::EigenSolver<Matrix> solver(w, false);
    if (solver.info() != Eigen::Success)
        throw estimation_failure("eigenvalue iteration did not converge", max_singular_value(w));
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const Matrix& w, Structure structure, Index initial_block_size,
                       RadiusEstimator estimator)
{
    if (w.rows() != w.cols()) throw contract_violation("spectral radius needs a square matrix");
    if (structure == Structure::general) return spectral_radius(w, estimator);
    if (initial_block_size < 0 || initial_block_size > w.rows())
        throw contract_violation("initial block size out of range");

    const Index b = initial_block_size;
    double rho = b > 0 ? spectral_radius(w.topLeftCorner(b, b), estimator) : 0.0;
    for (Index i = b; i < w.rows(); ++i) rho = std::max(rho, std::abs(w(i, i)));
    return rho;
}

ScaleResult scale_feedback(const ReservoirModel& model, double alpha, FeedbackScaling mode,
                           RadiusEstimator estimator)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw contract_violation("scaling factor alpha must lie in (0, 1)");

    ScaleResult res;
    res.model = model;
    res.sigma_before = max_singular_value(model.feedback);
    res.rho_before = spectral_radius(model.feedback, model.structure, model.initial_block_size,
                                     estimator);
    const double denom = mode == FeedbackScaling::contraction ? res.sigma_before : res.rho_before;
    if (denom == 0.0) {
        res.noop = true;
        res.esp_certified = res.sigma_before < 1.0;
        return res;
    }
    res.factor = alpha / denom;
    res.model.feedback *= res.factor;
    if (mode == FeedbackScaling::contraction)
        res.esp_certified = true;
    else
        res.esp_certified = alpha < res.rho_before / res.sigma_before;
    return res;
}

EspCheckResult two_trajectory_check(const ReservoirModel& model, const Matrix& inputs, Index pairs,
                                    double tolerance, std::uint64_t seed)
{
    if (pairs < 1) throw contract_violation("need at least one initial-state pair");
    if (inputs.rows() != model.n_inputs())
        throw contract_violation("inputs do not match the model's input dimension");
    const Index n = model.n_nodes();
    EspCheckResult res;
    res.pairs = pairs;
    res.steps = inputs.cols();
    res.tolerance = tolerance;
    res.sigma_max = max_singular_value(model.feedback);
    res.worst_convergence_step = 0;

    const Matrix drive = (model.input_weights * inputs).colwise() + model.biases;
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Index p = 0; p < pairs; ++p) {
        Vector a(n), b(n);
        for (Index i = 0; i < n; ++i) a(i) = unit(rng);
        for (Index i = 0; i < n; ++i) b(i) = unit(rng);
        res.max_initial_gap = std::max(res.max_initial_gap, (a - b).norm());
        Index hit = -1;
        double gap = (a - b).norm();
        for (Index t = 0; t < inputs.cols(); ++t) {
            a = (drive.col(t) + model.feedback * a).unaryExpr([&](double v) { return activate(model.activation, v); });
            b = (drive.col(t) + model.feedback * b).unaryExpr([&](double v) { return activate(model.activation, v); });
            gap = (a - b).norm();
            if (hit < 0 && gap < tolerance) hit = t + 1;
        }
        res.max_final_gap = std::max(res.max_final_gap, gap);
        if (hit < 0 || res.worst_convergence_step < 0)
            res.worst_convergence_step = -1;
        else
            res.worst_convergence_step = std::max(res.worst_convergence_step, hit);
    }
    res.converged = res.worst_convergence_step >= 0;
    return res;
}

} // namespace rscn
