#pragma once

// Incremental reservoir construction under the supervisory inequality.
//
// Each new node receives an input row, a bias and a feedback row that couples
// it to every existing node and to itself. Existing rows never see the new
// node, so the feedback matrix stays block lower triangular and the states of
// the existing nodes are reused unchanged. A candidate is admissible when
//
//     xi_q = <e_q, g>^2 / <g, g> - (1 - r - mu) ||e_q||^2 >= 0   for every output q,
//
// where e is the current training residual and g the candidate's state
// sequence. The admissible candidate with the largest sum of xi_q is added and
// the readout is re-solved by least squares.

#include "rscn/random.hpp"
#include "rscn/reservoir.hpp"
#include "rscn/tasks.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace rscn {

enum class EspMode {
    /// No rescaling while growing. Self-weights are clamped to |w| <= esp_alpha
    /// so the triangular part keeps rho < 1 and old states stay valid.
    incremental,
    /// After each accepted node rescale the whole feedback matrix to
    /// rho = esp_alpha and recompute every state.
    full_rescale,
    /// Rescale the candidate feedback matrix before scoring every candidate.
    per_candidate_scaled,
    none
};

std::string_view to_string(EspMode m);
EspMode parse_esp_mode(std::string_view s);

struct BuildConfig {
    Index n_init = 5;
    Index n_max = 100;
    Index n_step = 6;
    Index g_max = 100;
    std::vector<double> lambda_sequence{0.5, 1.0, 5.0, 10.0, 30.0, 50.0, 100.0};
    std::vector<double> r_sequence{0.9, 0.99, 0.999, 0.9999, 0.99999};
    double epsilon = 1e-6;
    double sparsity = 0.03;
    double esp_alpha = 0.9;
    EspMode esp_mode = EspMode::incremental;
    RadiusEstimator radius_estimator = RadiusEstimator::sigma_bound;
    Activation activation = Activation::tanh;
    double ridge = 0.0;
    /// Overrides the washout carried by the training/validation sequences.
    std::optional<Index> washout;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CandidateNode {
    Vector input_row;    ///< K
    Vector feedback_row; ///< N + 1, last entry is the self-weight
    double bias = 0.0;
    /// Multiplier applied to the whole feedback matrix on acceptance
    /// (per_candidate_scaled only).
    double feedback_scale = 1.0;
    Vector state_seq; ///< full-length state sequence of the new node
    double score = 0.0;
    Vector per_output_scores;
};

struct CandidateScore {
    double score = 0.0;
    Vector per_output;
    bool feasible = true;
};

struct BuildState {
    ReservoirModel model;
    StateSequence train_states;
    StateSequence val_states;
    Index washout = 0;
    Index val_washout = 0;
    Matrix residual; ///< L x n_eff, targets minus outputs after the washout
    std::vector<double> residual_norm_history;
    std::vector<double> validation_norm_history;
    double mu_current = 0.0;
    /// Most recent models, newest last, for rollback.
    std::deque<ReservoirModel> snapshots;
};

struct BuildRecord {
    Index size = 0;
    double lambda = 0.0;
    double r = 0.0;
    double xi_best = 0.0;
    double train_norm = 0.0;
    double val_norm = 0.0;
    Index pool_accepted = 0;
    Index pool_total = 0;
};

struct BuildHistory {
    std::vector<BuildRecord> records;
    bool stalled = false;
    bool early_stopped = false;
    Index final_size = 0;
    /// Loop nesting used by the search over (lambda, r).
    std::string search_order = "lambda_outer_r_inner";

    std::string to_csv() const;
};

struct BuildResult {
    ReservoirModel model;
    BuildHistory history;
};

struct PoolStats {
    Index accepted = 0;
    Index total = 0;
};

/// Post-washout columns.
Matrix trim_washout(const Matrix& m, Index washout);

/// Random initial reservoir of size n_init with a least-squares readout.
BuildState init_network(const SupervisedSequence& train, const SupervisedSequence& val,
                        const BuildConfig& cfg, Rng& rng);

/// State sequence of a candidate node appended to a reservoir whose existing
/// trajectory is `existing`. The new node starts from zero; the existing
/// nodes are untouched because they do not see the new one.
Vector candidate_states(const StateSequence& existing, const CandidateNode& cand,
                        const Matrix& inputs, Activation activation = Activation::tanh);

Vector candidate_states(const BuildState& state, const CandidateNode& cand, const Matrix& inputs);

/// xi_q = <e_q, g>^2 / <g, g> - (1 - r - mu) ||e_q||^2 and their sum.
/// A zero g is infeasible and scores -infinity.
CandidateScore score_candidate(const Matrix& residual, const Vector& g, double r, double mu);

/// Draws g_max candidates on [-lambda, lambda] and returns the admissible one
/// with the largest score, or nothing when no candidate passes.
std::optional<CandidateNode> configure_node(const BuildState& state,
                                            const SupervisedSequence& train, double lambda,
                                            double r, Index g_max, const BuildConfig& cfg,
                                            Rng& rng, PoolStats* stats = nullptr);

/// argmin_W ||T - W X||^2 + ridge ||W||^2. With ridge = 0 returns the
/// minimum-norm least-squares solution.
Matrix solve_output_weights(const Matrix& extended, const Matrix& targets, double ridge = 0.0);

/// Model with the candidate appended as the last node. The readout is
/// cleared; callers re-solve it.
ReservoirModel append_node(const ReservoirModel& model, const CandidateNode& cand);

/// Keeps the first `size` nodes. Readout columns of removed nodes are dropped.
ReservoirModel truncate_model(const ReservoirModel& model, Index size);

BuildResult build_rscn(const SupervisedSequence& train, const SupervisedSequence& val,
                       const BuildConfig& cfg);

} // namespace rscn
