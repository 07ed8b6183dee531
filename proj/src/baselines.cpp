#include "rscn/baselines.hpp"

#include "rscn/builder.hpp"
#include "rscn/error.hpp"
#include "rscn/random.hpp"

#include <cmath>

namespace rscn {

std::string_view to_string(Topology t)
{
    return t == Topology::scr_ring ? "scr_ring" : "esn_random";
}

Topology parse_topology(std::string_view s)
{
    if (s == "esn_random" || s == "esn") return Topology::esn_random;
    if (s == "scr_ring" || s == "scr") return Topology::scr_ring;
    throw schema_error("unknown topology '" + std::string(s) + "'");
}

void BaselineConfig::validate() const
{
    if (n_nodes < 1) throw contract_violation("baseline needs at least one node");
    if (!(lambda > 0.0)) throw contract_violation("lambda must be positive");
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw contract_violation("sparsity must lie in [0, 1]");
    if (topology == Topology::esn_random && !(esp_alpha > 0.0 && esp_alpha < 1.0))
        throw contract_violation("esp_alpha must lie in (0, 1)");
    if (topology == Topology::scr_ring && !(std::abs(ring_weight) < 1.0))
        throw contract_violation("ring weight magnitude must be below 1");
}

ReservoirModel fit_readout(ReservoirModel model, const SupervisedSequence& train, double ridge)
{
    train.validate();
    const auto seq = run_reservoir(model, train.inputs);
    model.readout = solve_output_weights(trim_washout(seq.extended, train.washout),
                                         trim_washout(train.targets, train.washout), ridge);
    return model;
}

namespace {

ReservoirModel random_inputs(const BaselineConfig& cfg, Index k, Rng& rng)
{
    ReservoirModel m;
    m.activation = cfg.activation;
    m.structure = Structure::general;
    m.initial_block_size = cfg.n_nodes;
    m.input_weights.resize(cfg.n_nodes, k);
    for (Index i = 0; i < cfg.n_nodes; ++i)
        for (Index j = 0; j < k; ++j) m.input_weights(i, j) = uniform_symmetric(rng, cfg.lambda);
    m.biases.resize(cfg.n_nodes);
    for (Index i = 0; i < cfg.n_nodes; ++i) m.biases(i) = uniform_symmetric(rng, cfg.lambda);
    return m;
}

} // namespace

ReservoirModel build_esn(const BaselineConfig& cfg, const SupervisedSequence& train, double ridge)
{
    cfg.validate();
    if (cfg.topology != Topology::esn_random) throw contract_violation("build_esn needs esn_random");
    auto rng = make_rng(cfg.seed, "init");
    auto m = random_inputs(cfg, train.inputs.rows(), rng);
    const Index n = cfg.n_nodes;
    m.feedback = Matrix::Zero(n, n);
    std::bernoulli_distribution present(cfg.sparsity);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (present(rng)) m.feedback(i, j) = uniform_symmetric(rng, cfg.lambda);
    m.readout.resize(0, n + train.inputs.rows());
    m = scale_feedback(m, cfg.esp_alpha, cfg.scaling).model;
    return fit_readout(std::move(m), train, ridge);
}

ReservoirModel build_scr(const BaselineConfig& cfg, const SupervisedSequence& train, double ridge)
{
    cfg.validate();
    if (cfg.topology != Topology::scr_ring) throw contract_violation("build_scr needs scr_ring");
    auto rng = make_rng(cfg.seed, "init");
    auto m = random_inputs(cfg, train.inputs.rows(), rng);
    const Index n = cfg.n_nodes;
    m.feedback = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) m.feedback(i, (i + n - 1) % n) = cfg.ring_weight;
    if (n == 1) m.feedback(0, 0) = cfg.ring_weight;
    m.readout.resize(0, n + train.inputs.rows());
    return fit_readout(std::move(m), train, ridge);
}

ReservoirModel build_baseline(const BaselineConfig& cfg, const SupervisedSequence& train,
                              double ridge)
{
    return cfg.topology == Topology::scr_ring ? build_scr(cfg, train, ridge)
                                              : build_esn(cfg, train, ridge);
}

} // namespace rscn
