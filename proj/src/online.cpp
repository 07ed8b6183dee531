#include "rscn/online.hpp"

#include "rscn/error.hpp"
#include "rscn/serialization.hpp"

#include <cmath>

namespace rscn {

std::string_view to_string(OnlineMode m)
{
    switch (m) {
    case OnlineMode::basic: return "basic";
    case OnlineMode::decreasing_gain: return "decreasing_gain";
    case OnlineMode::dead_zone: return "dead_zone";
    }
    return "basic";
}

OnlineMode parse_online_mode(std::string_view s)
{
    if (s == "basic") return OnlineMode::basic;
    if (s == "decreasing" || s == "decreasing_gain") return OnlineMode::decreasing_gain;
    if (s == "deadzone" || s == "dead_zone") return OnlineMode::dead_zone;
    throw schema_error("unknown online mode '" + std::string(s) + "'");
}

double OnlineConfig::phi_at(Index step) const
{
    if (phi.empty()) return 0.0;
    if (phi.size() == 1) return phi.front();
    if (step < 0 || step >= static_cast<Index>(phi.size()))
        throw contract_violation("phi series has no entry for step " + std::to_string(step));
    return phi[static_cast<std::size_t>(step)];
}

void OnlineConfig::validate() const
{
    if (mode == OnlineMode::basic) {
        if (!(a > 0.0 && a <= 1.0)) throw contract_violation("a must lie in (0, 1]");
        if (!(c > 0.0)) throw contract_violation("c must be positive");
    }
    for (double p : phi)
        if (!(p >= 0.0) || !std::isfinite(p)) throw contract_violation("phi must be non-negative");
}

OnlineState::OnlineState(Matrix w, std::optional<Matrix> ref) : readout(std::move(w)), w_ref(std::move(ref))
{
    if (w_ref && (w_ref->rows() != readout.rows() || w_ref->cols() != readout.cols()))
        throw contract_violation("reference weights differ in shape from the readout");
}

namespace {

void check(const OnlineState& s, const Vector& g, const Vector& y)
{
    if (g.size() != s.readout.cols() || y.size() != s.readout.rows())
        throw contract_violation("regressor or target does not match the readout shape");
    if (!g.allFinite() || !y.allFinite()) throw contract_violation("non-finite regressor or target");
}

void record(OnlineState& s, double prior, const Vector& g, const Vector& y, double eta)
{
    StepDiagnostics d;
    d.step = s.step;
    d.prior_err_norm = prior;
    d.posterior_err_norm = (y - s.readout * g).norm();
    d.eta = eta;
    if (s.w_ref) d.weight_gap = (s.readout - *s.w_ref).norm();
    s.diagnostics.push_back(d);
    ++s.step;
}

} // namespace

void project_step(OnlineState& state, const Vector& g, const Vector& y, double a, double c)
{
    check(state, g, y);
    const Vector e = y - state.readout * g;
    const double eta = a / (c + g.squaredNorm());
    state.readout.noalias() += eta * e * g.transpose();
    record(state, e.norm(), g, y, a);
}

void project_step_decreasing(OnlineState& state, const Vector& g, const Vector& y)
{
    check(state, g, y);
    const Vector e = y - state.readout * g;
    state.accumulated_gain += g.squaredNorm();
    if (state.accumulated_gain > 0.0)
        state.readout.noalias() += (e / state.accumulated_gain) * g.transpose();
    record(state, e.norm(), g, y, state.accumulated_gain > 0.0 ? 1.0 / state.accumulated_gain : 0.0);
}

void project_step_deadzone(OnlineState& state, const Vector& g, const Vector& y, double phi)
{
    check(state, g, y);
    if (!(phi >= 0.0)) throw contract_violation("phi must be non-negative");
    const Vector e = y - state.readout * g;
    const bool active = (e.array().abs() > 2.0 * phi).any();
    if (active) state.readout.noalias() += (e / (1.0 + g.squaredNorm())) * g.transpose();
    record(state, e.norm(), g, y, active ? 1.0 : 0.0);
}

void hold_step(OnlineState& state, const Vector& g, const Vector& y)
{
    check(state, g, y);
    record(state, (y - state.readout * g).norm(), g, y, 0.0);
}

void online_step(OnlineState& state, const OnlineConfig& cfg, const Vector& g, const Vector& y)
{
    switch (cfg.mode) {
    case OnlineMode::basic: project_step(state, g, y, cfg.a, cfg.c); break;
    case OnlineMode::decreasing_gain: project_step_decreasing(state, g, y); break;
    case OnlineMode::dead_zone: project_step_deadzone(state, g, y, cfg.phi_at(state.step)); break;
    }
}

OnlineResult online_run(const ReservoirModel& model, const SupervisedSequence& stream,
                        const OnlineConfig& cfg, const std::optional<Matrix>& w_ref,
                        std::optional<Index> warmup_steps)
{
    cfg.validate();
    stream.validate();
    model.validate();
    if (stream.inputs.rows() != model.n_inputs() || stream.targets.rows() != model.n_outputs())
        throw contract_violation("stream does not match the model's inputs or outputs");

    const auto states = run_reservoir(model, stream.inputs);
    OnlineResult out{Matrix(model.n_outputs(), stream.length()), stream.targets,
                     OnlineState(model.readout, w_ref)};
    const Index warmup = warmup_steps.value_or(stream.washout);
    for (Index n = 0; n < stream.length(); ++n) {
        const Vector g = states.extended.col(n);
        out.predictions.col(n) = out.state.readout * g;
        if (n < warmup)
            hold_step(out.state, g, stream.targets.col(n));
        else
            online_step(out.state, cfg, g, stream.targets.col(n));
    }
    return out;
}

std::string online_to_csv(const OnlineResult& r)
{
    const Index l = r.targets.rows();
    std::string out = "n";
    for (Index q = 1; q <= l; ++q) out += ",target_" + std::to_string(q);
    for (Index q = 1; q <= l; ++q) out += ",prediction_" + std::to_string(q);
    out += ",prior_err_norm,posterior_err_norm,eta,weight_gap\n";
    for (Index n = 0; n < r.targets.cols(); ++n) {
        out += std::to_string(n + 1);
        for (Index q = 0; q < l; ++q) out += "," + format_number(r.targets(q, n));
        for (Index q = 0; q < l; ++q) out += "," + format_number(r.predictions(q, n));
        const auto& d = r.state.diagnostics[static_cast<std::size_t>(n)];
        out += "," + format_number(d.prior_err_norm) + "," + format_number(d.posterior_err_norm) + ","
               + format_number(d.eta) + "," + (d.weight_gap ? format_number(*d.weight_gap) : "")
               + "\n";
    }
    return out;
}

} // namespace rscn
