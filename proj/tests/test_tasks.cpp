#include "rscn/error.hpp"
#include "rscn/tasks.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace rscn;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name)
{
    const fs::path dir = RSCN_TEST_TMP;
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream(p) << s;
}

std::string synthetic_csv(const std::vector<std::string>& cols, int rows, std::uint64_t seed)
{
    Rng rng(seed);
    std::string s;
    for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
    s += "\n";
    for (int r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            s += (i ? "," : "") + std::to_string(0.5 + 0.3 * std::sin(0.1 * r + static_cast<double>(i))
                                                 + uniform_symmetric(rng, 0.05));
        s += "\n";
    }
    return s;
}

} // namespace

TEST_CASE("Mackey-Glass examples")
{
    MGParams p;
    p.constant_history = 1.0;
    Rng rng(1);
    for (double v : mackey_glass(p, rng)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    MGParams q;
    q.alpha_mg = 0.0;
    q.length = 200;
    const auto decay = mackey_glass(q, rng);
    for (std::size_t i = 1; i < decay.size(); ++i) CHECK(decay[i] < decay[i - 1]);
    CHECK(decay.back() > 0.0);

    MGParams d;
    const auto s = mackey_glass(d, rng);
    CHECK(s.size() == 1177);
    for (double v : s) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
        CHECK(v < 2.0);
    }
    Rng a(7), b(7);
    CHECK(mackey_glass(d, a) == mackey_glass(d, b));

    MGParams bad;
    bad.tau = 0;
    CHECK_THROWS_AS(bad.validate(), contract_violation);
}

TEST_CASE("mg_task windowing")
{
    Rng rng(2);
    const auto s = mackey_glass(MGParams{}, rng);
    const auto t = mg_task(s, MGVariant::mg2);
    CHECK(t.train.inputs.rows() == 2);
    CHECK(mg_task(s, MGVariant::mg1).train.inputs.rows() == 3);
    const auto full = mg_task(s, MGVariant::mg);
    CHECK(full.train.inputs.rows() == 4);
    CHECK(full.train.length() == 500);
    CHECK(full.validation.length() == 300);
    CHECK(full.test.length() == 1177 - 6 - 18 - 800);
    CHECK(full.train.washout == 20);

    // 0-based first time index: n - 18 >= 0 in 0-based terms, i.e. n >= 19 1-based.
    const Index first = mg_first_index();
    CHECK(first - 18 >= 0);
    const std::vector<int> lags{0, 6, 12, 18};
    for (Index col : {Index{0}, Index{17}, Index{499}}) {
        const Index n = first + col;
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(full.train.inputs(static_cast<Index>(c), col) == s[static_cast<std::size_t>(n - lags[c])]);
        CHECK(full.train.targets(0, col) == s[static_cast<std::size_t>(n + 6)]);
    }
    const Index last = full.test.length() - 1;
    CHECK(full.test.targets(0, last) == s.back());
    CHECK(mg_input_lags(MGVariant::mg1) == std::vector<int>{6, 12, 18});

    CHECK_THROWS_AS(mg_task(std::vector<double>(24, 1.0), MGVariant::mg), contract_violation);
}

TEST_CASE("plant examples")
{
    PlantParams p;
    const auto y = plant_response(p, std::vector<double>(10, 0.0));
    CHECK(y[4] == doctest::Approx(0.072));
    CHECK(plant_test_input(300) == 1.0);
    CHECK(plant_test_input(600) == -1.0);
    CHECK(plant_test_input(100) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(plant_test_input(800) == doctest::Approx(0.6 * std::cos(80 * M_PI) + 0.1 * std::cos(800 * M_PI / 32)
                                                   + 0.3 * std::sin(32 * M_PI)));

    Rng rng(3);
    const auto t = plant_task(p, rng);
    CHECK(t.train.length() == 2000);
    CHECK(t.validation.length() == 1000);
    CHECK(t.test.length() == 1000);
    CHECK(t.train.washout == 100);
    CHECK(t.train.inputs.rows() == 2);
    // Target at n is the input y at n + 1.
    for (Index n = 0; n + 1 < 50; ++n) CHECK(t.train.targets(0, n) == t.train.inputs(0, n + 1));
    // Recursion check with the logged inputs.
    const auto& u = t.test.inputs;
    for (Index n = 3; n < 100; ++n) {
        const double expect = 0.72 * u(0, n) + 0.025 * u(0, n - 1) * u(1, n)
                              + 0.01 * u(1, n - 2) * u(1, n - 2) + 0.2 * u(1, n - 3);
        CHECK(t.test.targets(0, n) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("CSV round-trip is value-exact")
{
    Rng rng(4);
    SupervisedSequence s;
    s.inputs.resize(3, 20);
    s.targets.resize(1, 20);
    for (Index i = 0; i < s.inputs.size(); ++i) s.inputs.data()[i] = uniform_symmetric(rng, 1e3);
    for (Index i = 0; i < s.targets.size(); ++i) s.targets.data()[i] = uniform_symmetric(rng, 1e-3);
    const auto p = tmp("roundtrip.csv");
    write_csv(s, p);
    const auto back = read_sequence_csv(p);
    CHECK(back.inputs == s.inputs);
    CHECK(back.targets == s.targets);
}

TEST_CASE("load_csv feature maps")
{
    const auto deb = tmp("debutanizer.csv");
    write_text(deb, synthetic_csv({"u1", "u2", "u3", "u4", "u5", "u6", "u7", "y"}, 60, 5));
    CsvSchema schema{{"u1", "u2", "u3", "u4", "u5", "u6", "u7", "y"}, "y"};
    const auto reduced = load_csv(deb, schema, debutanizer_reduced_features());
    CHECK(reduced.inputs.rows() == 6);
    CHECK(reduced.length() == 59);
    const auto full = load_csv(deb, schema, debutanizer_full_features());
    CHECK(full.inputs.rows() == 13);
    CHECK(full.length() == 56);
    // Feature 8 is (u1 + u2) / 2 and feature 12 is y(n - 4).
    const auto raw = load_csv(deb, schema, {{{"u1"}, 0}, {{"u2"}, 0}, {{"y"}, 0}});
    CHECK(full.inputs(8, 0) == doctest::Approx((raw.inputs(0, 4) + raw.inputs(1, 4)) / 2));
    CHECK(full.inputs(12, 0) == raw.inputs(2, 0));
    CHECK(full.targets(0, 0) == raw.targets(0, 4));

    const auto load = tmp("power.csv");
    write_text(load, synthetic_csv({"u1", "u2", "u3", "u4", "y"}, 40, 6));
    CHECK(load_csv(load, {{"u1", "u2", "u3", "u4", "y"}, "y"}, power_load_features()).inputs.rows() == 5);
}

TEST_CASE("load_csv errors")
{
    const auto p = tmp("broken.csv");
    write_text(p, "u1,y\n1.0,2.0\n0.5,abc\n");
    try {
        load_csv(p, {{"u1", "y"}, "y"}, {{{"u1"}, 0}});
        FAIL("expected a parse error");
    } catch (const schema_error& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    write_text(p, "u1,y\n1.0,2.0\n0.5,1.5\n");
    CHECK_THROWS_AS(load_csv(p, {{"u1", "y"}, "y"}, {{{"u9"}, 0}}), schema_error);
    CHECK_THROWS_AS(load_csv(p, {{"u1", "u2", "y"}, "y"}, {{{"u1"}, 0}}), schema_error);
    CHECK_THROWS_AS(load_csv(tmp("missing.csv"), {{}, "y"}, {{{"u1"}, 0}}), schema_error);
}

TEST_CASE("Gaussian noise")
{
    SupervisedSequence s;
    s.inputs = Matrix::Zero(1, 10000);
    s.targets = Matrix::Zero(1, 10000);
    Rng r0(1);
    CHECK(add_gaussian_noise(s, 0.0, r0).targets == s.targets);
    Rng a(8), b(8);
    const auto na = add_gaussian_noise(s, 0.3, a);
    const auto nb = add_gaussian_noise(s, 0.3, b);
    CHECK(na.targets == nb.targets);
    CHECK(na.inputs == s.inputs);
    const double mean = na.targets.mean();
    double var = 0.0;
    for (Index i = 0; i < na.targets.size(); ++i) var += std::pow(na.targets(0, i) - mean, 2);
    const double sd = std::sqrt(var / (na.targets.size() - 1));
    CHECK(std::abs(sd - 0.3) < 0.05 * 0.3);
    CHECK_THROWS_AS(add_gaussian_noise(s, -1.0, a), contract_violation);
}

TEST_CASE("task manifests")
{
    const auto a = build_task(TaskManifest::from_name("mg1", 3));
    const auto b = build_task(TaskManifest::from_name("mg1", 3));
    CHECK(a.train.inputs == b.train.inputs);
    CHECK(TaskManifest::from_name("mg2", 1).name() == "MG2");
    CHECK(TaskManifest::from_name("plant", 1).name() == "plant");
    CHECK_THROWS_AS(TaskManifest::from_name("lorenz", 1), schema_error);

    const auto p = tmp("power_manifest.csv");
    write_text(p, synthetic_csv({"u1", "u2", "u3", "u4", "y"}, 300, 9));
    nlohmann::json j{{"generator", "csv"}, {"path", p.string()}, {"features", "power_load"},
                     {"splits", {{"train", 200}, {"test", 99}}}, {"washout", 30}, {"seed", 4}};
    const auto t = build_task(TaskManifest::from_json(j));
    CHECK(t.train.inputs.rows() == 5);
    CHECK(t.train.length() == 200);
    CHECK(t.test.length() == 99);
    CHECK(t.validation.inputs == t.test.inputs);
    CHECK(t.validation.targets != t.test.targets);
    CHECK(t.train.washout == 30);
}
