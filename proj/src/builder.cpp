#include "rscn/builder.hpp"

#include "rscn/error.hpp"
#include "rscn/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rscn {

std::string_view to_string(EspMode m)
{
    switch (m) {
    case EspMode::incremental: return "incremental";
    case EspMode::full_rescale: return "full_rescale";
    case EspMode::per_candidate_scaled: return "per_candidate_scaled";
    case EspMode::none: return "none";
    }
    return "incremental";
}

EspMode parse_esp_mode(std::string_view s)
{
    if (s == "incremental") return EspMode::incremental;
    if (s == "full_rescale") return EspMode::full_rescale;
    if (s == "per_candidate_scaled") return EspMode::per_candidate_scaled;
    if (s == "none") return EspMode::none;
    throw schema_error("unknown esp mode '" + std::string(s) + "'");
}

void BuildConfig::validate() const
{
    if (n_init < 1) throw contract_violation("n_init must be at least 1");
    if (n_max < n_init) throw contract_violation("n_max must be at least n_init");
    if (n_step < 1 || n_step >= n_max) throw contract_violation("n_step must lie in [1, n_max)");
    if (g_max < 0) throw contract_violation("g_max must be non-negative");
    if (lambda_sequence.empty()) throw contract_violation("lambda sequence is empty");
    for (double l : lambda_sequence)
        if (!(l > 0.0)) throw contract_violation("lambda values must be positive");
    if (r_sequence.empty()) throw contract_violation("r sequence is empty");
    for (double r : r_sequence)
        if (!(r > 0.0 && r < 1.0)) throw contract_violation("r values must lie in (0, 1)");
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw contract_violation("sparsity must lie in [0, 1]");
    if (esp_mode != EspMode::none && !(esp_alpha > 0.0 && esp_alpha < 1.0))
        throw contract_violation("esp_alpha must lie in (0, 1)");
    if (!(epsilon >= 0.0)) throw contract_violation("epsilon must be non-negative");
    if (!(ridge >= 0.0)) throw contract_violation("ridge must be non-negative");
}

std::string BuildHistory::to_csv() const
{
    std::string out = "size,lambda,r,xi_best,train_norm,val_norm,pool_accepted,pool_total\n";
    for (const auto& r : records) {
        out += std::to_string(r.size) + "," + format_number(r.lambda) + "," + format_number(r.r)
               + "," + format_number(r.xi_best) + "," + format_number(r.train_norm) + ","
               + format_number(r.val_norm) + "," + std::to_string(r.pool_accepted) + ","
               + std::to_string(r.pool_total) + "\n";
    }
    return out;
}

Matrix trim_washout(const Matrix& m, Index washout)
{
    if (washout < 0 || washout >= m.cols())
        throw contract_violation("washout " + std::to_string(washout) + " leaves no samples");
    return m.rightCols(m.cols() - washout);
}

namespace {

void append_state_row(StateSequence& seq, const Vector& row, const Matrix& inputs)
{
    const Index n = seq.states.rows();
    seq.states.conservativeResize(n + 1, Eigen::NoChange);
    seq.states.row(n) = row.transpose();
    seq.initial_state.conservativeResize(n + 1);
    seq.initial_state(n) = 0.0;
    seq.extended = stack_extended(seq.states, inputs);
}

double residual_norm(const ReservoirModel& model, const StateSequence& seq,
                     const SupervisedSequence& data, Index washout, Matrix* residual_out)
{
    Matrix res = trim_washout(data.targets, washout) - model.readout * trim_washout(seq.extended, washout);
    const double norm = res.norm();
    if (residual_out) *residual_out = std::move(res);
    return norm;
}

void refresh_readout(BuildState& state, const SupervisedSequence& train,
                     const SupervisedSequence& val, double ridge)
{
    state.model.readout = solve_output_weights(trim_washout(state.train_states.extended, state.washout),
                                               trim_washout(train.targets, state.washout), ridge);
    state.residual_norm_history.push_back(
        residual_norm(state.model, state.train_states, train, state.washout, &state.residual));
    state.validation_norm_history.push_back(
        residual_norm(state.model, state.val_states, val, state.val_washout, nullptr));
}

void push_snapshot(BuildState& state, Index keep)
{
    state.snapshots.push_back(state.model);
    while (static_cast<Index>(state.snapshots.size()) > keep) state.snapshots.pop_front();
}

} // namespace

BuildState init_network(const SupervisedSequence& train, const SupervisedSequence& val,
                        const BuildConfig& cfg, Rng& rng)
{
    cfg.validate();
    train.validate();
    val.validate();
    if (train.inputs.rows() != val.inputs.rows() || train.targets.rows() != val.targets.rows())
        throw contract_violation("training and validation sequences differ in K or L");

    const Index n = cfg.n_init;
    const Index k = train.inputs.rows();
    const double lambda = cfg.lambda_sequence.front();

    BuildState state;
    state.washout = cfg.washout.value_or(train.washout);
    state.val_washout = cfg.washout.value_or(val.washout);
    if (state.washout >= train.length() || state.val_washout >= val.length())
        throw contract_violation("washout leaves no training or validation samples");

    auto& m = state.model;
    m.activation = cfg.activation;
    m.structure = Structure::block_lower_triangular;
    m.initial_block_size = n;
    m.input_weights.resize(n, k);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) m.input_weights(i, j) = uniform_symmetric(rng, lambda);
    m.biases.resize(n);
    for (Index i = 0; i < n; ++i) m.biases(i) = uniform_symmetric(rng, lambda);
    m.feedback = Matrix::Zero(n, n);
    std::bernoulli_distribution present(cfg.sparsity);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (present(rng)) m.feedback(i, j) = uniform_symmetric(rng, lambda);

    switch (cfg.esp_mode) {
    case EspMode::incremental:
        m = scale_feedback(m, cfg.esp_alpha, FeedbackScaling::contraction, cfg.radius_estimator).model;
        break;
    case EspMode::full_rescale:
    case EspMode::per_candidate_scaled:
        m = scale_feedback(m, cfg.esp_alpha, FeedbackScaling::eq22_spectral, cfg.radius_estimator)
                .model;
        break;
    case EspMode::none: break;
    }

    state.train_states = run_reservoir(m, train.inputs);
    state.val_states = run_reservoir(m, val.inputs);
    refresh_readout(state, train, val, cfg.ridge);
    state.mu_current = (1.0 - cfg.r_sequence.front()) / static_cast<double>(n + 1);
    push_snapshot(state, cfg.n_step + 1);
    return state;
}

Vector candidate_states(const StateSequence& existing, const CandidateNode& cand,
                        const Matrix& inputs, Activation activation)
{
    const Index n_nodes = existing.states.rows();
    const Index len = existing.states.cols();
    if (cand.feedback_row.size() != n_nodes + 1)
        throw contract_violation("candidate feedback row has length "
                                 + std::to_string(cand.feedback_row.size()) + ", expected "
                                 + std::to_string(n_nodes + 1));
    if (cand.input_row.size() != inputs.rows())
        throw contract_violation("candidate input row does not match the input channels");
    if (inputs.cols() != len) throw contract_violation("inputs and states differ in length");

    // Drive from inputs and from the previous states of existing nodes.
    Eigen::RowVectorXd drive = cand.input_row.transpose() * inputs;
    drive.array() += cand.bias;
    const auto coupling = cand.feedback_row.head(n_nodes);
    if (n_nodes > 0 && len > 0) {
        drive(0) += coupling.dot(existing.initial_state.size() == n_nodes
                                     ? existing.initial_state
                                     : Vector::Zero(n_nodes));
        if (len > 1)
            drive.tail(len - 1).noalias() += coupling.transpose() * existing.states.leftCols(len - 1);
    }

    const double self = cand.feedback_row(n_nodes);
    Vector g(len);
    double prev = 0.0;
    for (Index t = 0; t < len; ++t) {
        prev = activate(activation, drive(t) + self * prev);
        g(t) = prev;
    }
    return g;
}

Vector candidate_states(const BuildState& state, const CandidateNode& cand, const Matrix& inputs)
{
    return candidate_states(state.train_states, cand, inputs, state.model.activation);
}

CandidateScore score_candidate(const Matrix& residual, const Vector& g, double r, double mu)
{
    if (residual.cols() != g.size())
        throw contract_violation("candidate state and residual differ in length");
    CandidateScore s;
    const Index l = residual.rows();
    s.per_output.resize(l);
    const double gg = g.squaredNorm();
    if (gg == 0.0) {
        s.feasible = false;
        s.score = -std::numeric_limits<double>::infinity();
        s.per_output.setConstant(s.score);
        return s;
    }
    const double penalty = 1.0 - r - mu;
    const Vector eg = residual * g;
    for (Index q = 0; q < l; ++q)
        s.per_output(q) = eg(q) * eg(q) / gg - penalty * residual.row(q).squaredNorm();
    s.score = s.per_output.sum();
    return s;
}

std::optional<CandidateNode> configure_node(const BuildState& state,
                                            const SupervisedSequence& train, double lambda,
                                            double r, Index g_max, const BuildConfig& cfg,
                                            Rng& rng, PoolStats* stats)
{
    const auto& model = state.model;
    const Index n = model.n_nodes();
    const Index k = model.n_inputs();
    const double mu = (1.0 - r) / static_cast<double>(n + 1);

    // Draw the whole pool first so results do not depend on evaluation order.
    std::vector<CandidateNode> pool(static_cast<std::size_t>(std::max<Index>(g_max, 0)));
    for (auto& c : pool) {
        c.input_row.resize(k);
        for (Index j = 0; j < k; ++j) c.input_row(j) = uniform_symmetric(rng, lambda);
        c.bias = uniform_symmetric(rng, lambda);
        c.feedback_row.resize(n + 1);
        for (Index j = 0; j <= n; ++j) c.feedback_row(j) = uniform_symmetric(rng, lambda);
        if (cfg.esp_mode == EspMode::incremental)
            c.feedback_row(n) = std::clamp(c.feedback_row(n), -cfg.esp_alpha, cfg.esp_alpha);
    }

    std::optional<CandidateNode> best;
    for (auto& c : pool) {
        if (cfg.esp_mode == EspMode::per_candidate_scaled) {
            auto grown = append_node(model, c);
            const double rho = spectral_radius(grown.feedback, grown.structure,
                                               grown.initial_block_size, cfg.radius_estimator);
            if (rho > 0.0) {
                c.feedback_scale = cfg.esp_alpha / rho;
                grown.feedback *= c.feedback_scale;
            }
            c.state_seq = run_reservoir(grown, train.inputs).states.row(n).transpose();
        } else {
            c.state_seq = candidate_states(state.train_states, c, train.inputs, model.activation);
        }
        const Vector g = c.state_seq.tail(c.state_seq.size() - state.washout);
        const auto sc = score_candidate(state.residual, g, r, mu);
        if (stats) ++stats->total;
        if (!sc.feasible || sc.per_output.minCoeff() < 0.0) continue;
        if (stats) ++stats->accepted;
        c.score = sc.score;
        c.per_output_scores = sc.per_output;
        if (!best || c.score > best->score) best = std::move(c);
    }
    return best;
}

Matrix solve_output_weights(const Matrix& extended, const Matrix& targets, double ridge)
{
    if (extended.cols() != targets.cols())
        throw contract_violation("regressors and targets differ in length");
    if (extended.cols() < 1) throw contract_violation("least squares needs at least one sample");
    if (!extended.allFinite() || !targets.allFinite())
        throw contract_violation("least squares input contains non-finite values");
    if (!(ridge >= 0.0)) throw contract_violation("ridge must be non-negative");

    if (ridge > 0.0) {
        Matrix gram = extended * extended.transpose();
        gram.diagonal().array() += ridge;
        const Matrix rhs = extended * targets.transpose();
        Eigen::LLT<Matrix> llt(gram);
        if (llt.info() == Eigen::Success) return llt.solve(rhs).transpose();
        return gram.completeOrthogonalDecomposition().solve(rhs).transpose();
    }
    // Minimum-norm least squares on X^T W^T = T^T.
    const Matrix xt = extended.transpose();
    return xt.completeOrthogonalDecomposition().solve(targets.transpose()).transpose();
}

ReservoirModel append_node(const ReservoirModel& model, const CandidateNode& cand)
{
    const Index n = model.n_nodes();
    if (cand.feedback_row.size() != n + 1 || cand.input_row.size() != model.n_inputs())
        throw contract_violation("candidate does not fit the reservoir");
    ReservoirModel out = model;
    out.input_weights.conservativeResize(n + 1, Eigen::NoChange);
    out.input_weights.row(n) = cand.input_row.transpose();
    out.biases.conservativeResize(n + 1);
    out.biases(n) = cand.bias;
    out.feedback.conservativeResize(n + 1, n + 1);
    out.feedback.col(n).setZero();
    out.feedback.row(n) = cand.feedback_row.transpose();
    out.readout.resize(0, n + 1 + model.n_inputs());
    return out;
}

ReservoirModel truncate_model(const ReservoirModel& model, Index size)
{
    const Index n = model.n_nodes();
    const Index k = model.n_inputs();
    if (size < 0 || size > n) throw contract_violation("truncation size out of range");
    ReservoirModel out;
    out.activation = model.activation;
    out.structure = model.structure;
    out.initial_block_size = std::min(model.initial_block_size, size);
    out.input_weights = model.input_weights.topRows(size);
    out.feedback = model.feedback.topLeftCorner(size, size);
    out.biases = model.biases.head(size);
    if (model.readout.rows() > 0) {
        out.readout.resize(model.readout.rows(), size + k);
        out.readout << model.readout.leftCols(size), model.readout.rightCols(k);
    } else {
        out.readout.resize(0, size + k);
    }
    return out;
}

namespace {

void accept_candidate(BuildState& state, const CandidateNode& cand,
                      const SupervisedSequence& train, const SupervisedSequence& val,
                      const BuildConfig& cfg)
{
    state.model = append_node(state.model, cand);
    switch (cfg.esp_mode) {
    case EspMode::incremental:
    case EspMode::none: {
        append_state_row(state.train_states, cand.state_seq, train.inputs);
        const Vector g_val = candidate_states(state.val_states, cand, val.inputs, state.model.activation);
        append_state_row(state.val_states, g_val, val.inputs);
        break;
    }
    case EspMode::full_rescale:
        state.model = scale_feedback(state.model, cfg.esp_alpha, FeedbackScaling::eq22_spectral,
                                     cfg.radius_estimator)
                          .model;
        state.train_states = run_reservoir(state.model, train.inputs);
        state.val_states = run_reservoir(state.model, val.inputs);
        break;
    case EspMode::per_candidate_scaled:
        state.model.feedback *= cand.feedback_scale;
        state.train_states = run_reservoir(state.model, train.inputs);
        state.val_states = run_reservoir(state.model, val.inputs);
        break;
    }
    refresh_readout(state, train, val, cfg.ridge);
    push_snapshot(state, cfg.n_step + 1);
}

bool validation_stalled(const std::vector<double>& v, Index n_step)
{
    const auto need = static_cast<std::size_t>(n_step + 1);
    if (v.size() < need) return false;
    for (std::size_t i = v.size() - need; i + 1 < v.size(); ++i)
        if (v[i] > v[i + 1]) return false;
    return true;
}

} // namespace

BuildResult build_rscn(const SupervisedSequence& train, const SupervisedSequence& val,
                       const BuildConfig& cfg)
{
    auto init_rng = make_rng(cfg.seed, "init");
    auto cand_rng = make_rng(cfg.seed, "candidates");
    BuildState state = init_network(train, val, cfg, init_rng);

    BuildResult result;
    auto& hist = result.history;
    hist.records.push_back({state.model.n_nodes(), cfg.lambda_sequence.front(), 0.0, 0.0,
                            state.residual_norm_history.back(),
                            state.validation_norm_history.back(), 0, 0});

    while (state.model.n_nodes() < cfg.n_max && state.residual_norm_history.back() > cfg.epsilon) {
        std::optional<CandidateNode> chosen;
        PoolStats stats;
        double used_lambda = 0.0;
        double used_r = 0.0;
        for (double lambda : cfg.lambda_sequence) {
            for (double r : cfg.r_sequence) {
                chosen = configure_node(state, train, lambda, r, cfg.g_max, cfg, cand_rng, &stats);
                if (chosen) {
                    used_lambda = lambda;
                    used_r = r;
                    state.mu_current = (1.0 - r) / static_cast<double>(state.model.n_nodes() + 1);
                    break;
                }
            }
            if (chosen) break;
        }
        if (!chosen) {
            hist.stalled = true;
            break;
        }

        accept_candidate(state, *chosen, train, val, cfg);
        hist.records.push_back({state.model.n_nodes(), used_lambda, used_r, chosen->score,
                                state.residual_norm_history.back(),
                                state.validation_norm_history.back(), stats.accepted, stats.total});

        if (validation_stalled(state.validation_norm_history, cfg.n_step)) {
            hist.early_stopped = true;
            state.model = state.snapshots.front();
            break;
        }
    }

    hist.final_size = state.model.n_nodes();
    result.model = std::move(state.model);
    return result;
}

} // namespace rscn
