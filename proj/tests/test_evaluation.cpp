#include "rscn/error.hpp"
#include "rscn/evaluation.hpp"

#include <doctest.h>

#include <cmath>

using namespace rscn;

namespace {

Matrix row(std::initializer_list<double> v)
{
    Matrix m(1, static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) m(0, i++) = x;
    return m;
}

TaskSplits small_mg(std::uint64_t seed = 1)
{
    nlohmann::json j{{"generator", "mg"}, {"variant", "mg"}, {"seed", seed},
                     {"splits", {{"train", 200}, {"validation", 100}}}};
    return build_task(TaskManifest::from_json(j));
}

ModelSpec small_rscn()
{
    BuildConfig c;
    c.n_max = 12;
    c.g_max = 10;
    c.lambda_sequence = {0.5, 1.0};
    c.r_sequence = {0.9, 0.99};
    return ModelSpec::rscn(c);
}

ModelSpec small_esn()
{
    BaselineConfig c;
    c.n_nodes = 20;
    return ModelSpec::esn(c);
}

} // namespace

TEST_CASE("nrmse examples")
{
    CHECK(nrmse(row({1, 2, 3}), row({1, 2, 3})) == 0.0);
    const double mean_pred = nrmse(row({2, 2, 2}), row({1, 2, 3}));
    CHECK(mean_pred == doctest::Approx(1.0));
    CHECK(nrmse(row({1, 2, 4}), row({1, 2, 3})) == doctest::Approx(0.7071067812));
    CHECK_THROWS_AS(nrmse(row({1, 2, 3}), row({5, 5, 5})), undefined_metric);
    CHECK_THROWS_AS(nrmse(row({1}), row({1})), undefined_metric);
    CHECK_THROWS_AS(nrmse(row({1, 2}), row({1, 2, 3})), contract_violation);
}

TEST_CASE("nrmse is invariant to a common affine map")
{
    Rng rng(5);
    Matrix p(2, 50), t(2, 50);
    for (Index i = 0; i < p.size(); ++i) {
        t.data()[i] = uniform_symmetric(rng, 1.0);
        p.data()[i] = t.data()[i] + uniform_symmetric(rng, 0.1);
    }
    const double base = nrmse(p, t);
    for (double a : {0.01, 3.0, -7.0}) {
        const Matrix pa = (a * p.array() + 11.0).matrix();
        const Matrix ta = (a * t.array() + 11.0).matrix();
        CHECK(nrmse(pa, ta) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("mean_std matches a two-pass oracle")
{
    Rng rng(6);
    std::vector<double> v(37);
    for (auto& x : v) x = 1e4 + uniform_symmetric(rng, 1.0);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const auto ms = mean_std(v);
    CHECK(ms.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(ms.std == doctest::Approx(std::sqrt(ss / static_cast<double>(v.size()))).epsilon(1e-9));
    CHECK(mean_std({4.2}).std == 0.0);
}

TEST_CASE("ModelSpec hyperparameters")
{
    const auto s = small_rscn().with("alpha", 0.5).with("n", 30).with_seed(9);
    const auto& c = std::get<BuildConfig>(s.config);
    CHECK(c.esp_alpha == 0.5);
    CHECK(c.n_max == 30);
    CHECK(c.seed == 9);
    const auto e = small_esn().with("n", 40).with("alpha", 0.7);
    CHECK(std::get<BaselineConfig>(e.config).n_nodes == 40);
    CHECK(std::get<BaselineConfig>(e.config).esp_alpha == 0.7);
    CHECK(ModelSpec::scr().with("ring_weight", 0.3).name == "SCR");
    CHECK_THROWS(small_esn().with("bogus", 1.0));
}

TEST_CASE("run_trials is deterministic and worker-count independent")
{
    const auto task = small_mg();
    const auto a = run_trials(task, small_rscn(), 3, 10, 1);
    const auto b = run_trials(task, small_rscn(), 3, 10, 3);
    REQUIRE(a.complete());
    REQUIRE(b.complete());
    CHECK(a.n_trials == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.trials[i].seed == 10 + i);
        CHECK(a.trials[i].test_nrmse == b.trials[i].test_nrmse);
        CHECK(a.trials[i].n_nodes == b.trials[i].n_nodes);
    }
    CHECK(a.test_nrmse.mean == b.test_nrmse.mean);

    const auto one = run_trials(task, small_esn(), 1, 3);
    CHECK(one.test_nrmse.std == 0.0);
    CHECK(one.reservoir_size.mean == 20.0);

    // Trial i equals a single run with seed base + i.
    const auto single = run_trials(task, small_rscn(), 1, 12);
    CHECK(single.trials[0].test_nrmse == a.trials[2].test_nrmse);
}

TEST_CASE("run_trials counts failures instead of throwing")
{
    auto task = small_mg();
    task.test.targets.setConstant(0.5); // zero variance: metric undefined
    const auto r = run_trials(task, small_esn(), 2, 1);
    CHECK(r.failures == 2);
    CHECK_FALSE(r.complete());
    CHECK_FALSE(r.trials[0].error.empty());
}

TEST_CASE("parse_grid")
{
    const auto g = parse_grid("alpha=0.5,0.75,0.99;n=50,100");
    REQUIRE(g.size() == 2);
    CHECK(g[0].first == "alpha");
    CHECK(g[0].second == std::vector<double>{0.5, 0.75, 0.99});
    CHECK(g[1].second == std::vector<double>{50, 100});
    CHECK_THROWS(parse_grid(""));
    CHECK_THROWS(parse_grid("alpha"));
    CHECK_THROWS(parse_grid("alpha=x"));
}

TEST_CASE("grid_search")
{
    const auto task = small_mg();
    const auto single = grid_search(task, small_esn(), parse_grid("alpha=0.8"), 2, 4);
    REQUIRE(single.table.size() == 1);
    CHECK(single.best == 0);
    const auto direct = run_trials(task, small_esn().with("alpha", 0.8), 2, 4);
    CHECK(single.best_point().report.val_nrmse.mean == direct.val_nrmse.mean);

    const auto g = grid_search(task, small_esn(), parse_grid("alpha=0.5,0.9;n=10,20"), 2, 4);
    REQUIRE(g.table.size() == 4);
    CHECK(g.table[1].values[0].second == 0.5);
    CHECK(g.table[1].values[1].second == 20);
    CHECK(g.table[2].values[0].second == 0.9);
    for (const auto& p : g.table)
        CHECK(g.best_point().report.val_nrmse.mean <= p.report.val_nrmse.mean);
}

TEST_CASE("manifest overload builds the task once")
{
    nlohmann::json j{{"generator", "mg"}, {"variant", "mg2"}, {"seed", 2},
                     {"splits", {{"train", 200}, {"validation", 100}}}};
    const auto m = TaskManifest::from_json(j);
    const auto a = run_trials(m, small_esn(), 2, 5);
    const auto b = run_trials(build_task(m), small_esn(), 2, 5);
    CHECK(a.task_name == "MG2");
    CHECK(a.test_nrmse.mean == b.test_nrmse.mean);
}
