#include "rscn/report.hpp"

#include <doctest.h>

#include <sstream>

using namespace rscn;

namespace {

TrialReport sample(const std::string& name, double n, double test)
{
    TrialReport r;
    r.model_name = name;
    r.task_name = "MG";
    r.reservoir_size = {n, 0.0};
    r.train_time_s = {1.25, 0.0312};
    r.train_nrmse = {0.0081, 0.0004};
    r.test_nrmse = {test, 0.0011};
    r.n_trials = 20;
    return r;
}

} // namespace

TEST_CASE("format_mean_std")
{
    CHECK(format_mean_std({0.01234, 0.0005}) == "0.0123±0.0005");
    CHECK(format_mean_std({2.0, 0.0}) == "2.0000±0.0000");
}

TEST_CASE("single row report")
{
    const auto csv = emit_report({sample("RSCN", 97.4, 0.0099)}, ReportFormat::csv);
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header == "Models,N,Training time,Training NRMSE,Testing NRMSE");
    CHECK(line == "RSCN,97,1.2500±0.0312,0.0081±0.0004,0.0099±0.0011");

    const auto text = emit_report({sample("RSCN", 97.4, 0.0099)}, ReportFormat::text);
    CHECK(text.find("Models") != std::string::npos);
    CHECK(text.find("0.0099±0.0011") != std::string::npos);
    CHECK(text.find("97") != std::string::npos);
}

TEST_CASE("csv and text carry the same numbers")
{
    const std::vector<TrialReport> rs{sample("ESN", 98, 0.0128), sample("SCR", 79, 0.0140),
                                      sample("RSCN", 96.6, 0.0101)};
    const auto csv = emit_report(rs, ReportFormat::csv);
    const auto text = emit_report(rs, ReportFormat::text);
    for (const auto& r : rs) {
        CHECK(text.find(format_mean_std(r.test_nrmse)) != std::string::npos);
        CHECK(csv.find(format_mean_std(r.test_nrmse)) != std::string::npos);
    }
    const auto rows = parse_report_csv(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].model == "ESN");
    CHECK(rows[2].n == 97);
    CHECK(rows[1].test_nrmse.mean == doctest::Approx(0.0140));
    CHECK(rows[1].test_nrmse.std == doctest::Approx(0.0011));
    CHECK(rows[0].train_time.mean == doctest::Approx(1.25));
}

TEST_CASE("report format parsing")
{
    CHECK(parse_report_format("csv") == ReportFormat::csv);
    CHECK(parse_report_format("text") == ReportFormat::text);
    CHECK_THROWS(parse_report_format("xml"));
}
