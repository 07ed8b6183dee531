#include "rscn/baselines.hpp"
#include "rscn/error.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace rscn;

namespace {

SupervisedSequence task(Index len, std::uint64_t seed)
{
    Rng rng(seed);
    SupervisedSequence s;
    s.inputs.resize(2, len);
    for (Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = uniform_symmetric(rng, 1.0);
    s.targets = s.inputs.row(0).array().sin();
    s.washout = 10;
    return s;
}

} // namespace

TEST_CASE("ESN: spectral norm, determinism")
{
    BaselineConfig c;
    c.n_nodes = 40;
    c.sparsity = 0.2;
    c.esp_alpha = 0.7;
    c.seed = 3;
    const auto t = task(200, 1);
    const auto m = build_esn(c, t);
    CHECK(max_singular_value(m.feedback) == doctest::Approx(0.7).epsilon(1e-9));
    const auto m2 = build_esn(c, t);
    CHECK(m.feedback == m2.feedback);
    CHECK(m.readout == m2.readout);
    CHECK((m.input_weights.array().abs() <= 1.0).all());
    CHECK(m.readout.cols() == 42);
}

TEST_CASE("ESN readout fits representable targets")
{
    BaselineConfig c;
    c.n_nodes = 10;
    auto t = task(100, 2);
    t.targets = t.inputs.row(1);
    const auto m = build_esn(c, t);
    const auto seq = run_reservoir(m, t.inputs);
    const Matrix y = readout(m, seq, t.inputs);
    CHECK((y - t.targets).rightCols(90).norm() < 1e-10);
}

TEST_CASE("SCR ring examples")
{
    BaselineConfig c;
    c.topology = Topology::scr_ring;
    c.n_nodes = 7;
    c.ring_weight = 0.6;
    const auto t = task(100, 3);
    const auto m = build_scr(c, t);
    for (Index i = 0; i < 7; ++i) {
        CHECK((m.feedback.row(i).array() != 0.0).count() == 1);
        CHECK(m.feedback(i, (i + 6) % 7) == 0.6);
    }
    Eigen::EigenSolver<Matrix> es(m.feedback);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(spectral_radius(m.feedback, RadiusEstimator::eigen) == doctest::Approx(0.6).epsilon(1e-12));

    c.ring_weight = 0.0;
    const auto z = build_scr(c, t);
    const auto seq = run_reservoir(z, t.inputs);
    for (Index n = 0; n < 100; ++n) {
        const Vector expect = (z.input_weights * t.inputs.col(n) + z.biases).array().tanh();
        CHECK((seq.states.col(n) - expect).norm() == 0.0);
    }
}

TEST_CASE("baselines pass the contraction test")
{
    BaselineConfig c;
    c.n_nodes = 30;
    c.sparsity = 0.1;
    c.esp_alpha = 0.95;
    const auto t = task(500, 4);
    const auto esn = build_esn(c, t);
    CHECK(two_trajectory_check(esn, t.inputs, 10, 1e-8, 1).converged);
    c.topology = Topology::scr_ring;
    c.ring_weight = 0.9;
    const auto scr = build_scr(c, t);
    CHECK(two_trajectory_check(scr, t.inputs, 10, 1e-8, 1).converged);
}

TEST_CASE("baseline config validation")
{
    BaselineConfig c;
    c.esp_alpha = 1.0;
    CHECK_THROWS_AS(c.validate(), contract_violation);
    c = {};
    c.topology = Topology::scr_ring;
    c.ring_weight = 1.2;
    CHECK_THROWS_AS(c.validate(), contract_violation);
    c = {};
    CHECK_THROWS_AS(build_scr(c, task(50, 5)), contract_violation);
    CHECK(parse_topology("scr") == Topology::scr_ring);
}
