#include "rscn/report.hpp"

#include "rscn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rscn {

namespace {

constexpr std::string_view pm = "±";

const std::vector<std::string> headers{"Models", "N", "Training time", "Training NRMSE",
                                       "Testing NRMSE"};

std::string fixed4(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<std::string> cells(const TrialReport& r)
{
    return {r.model_name, std::to_string(std::llround(r.reservoir_size.mean)),
            format_mean_std(r.train_time_s), format_mean_std(r.train_nrmse),
            format_mean_std(r.test_nrmse)};
}

MeanStd parse_mean_std(const std::string& cell)
{
    const auto at = cell.find(pm);
    if (at == std::string::npos) throw schema_error("report cell '" + cell + "' is not mean±std");
    try {
        return {std::stod(cell.substr(0, at)), std::stod(cell.substr(at + pm.size()))};
    } catch (const std::exception&) {
        throw schema_error("report cell '" + cell + "' is not numeric");
    }
}

} // namespace

ReportFormat parse_report_format(std::string_view s)
{
    if (s == "csv") return ReportFormat::csv;
    if (s == "text") return ReportFormat::text;
    throw schema_error("unknown report format '" + std::string(s) + "'");
}

std::string format_mean_std(const MeanStd& v)
{
    return fixed4(v.mean) + std::string(pm) + fixed4(v.std);
}

std::string emit_report(const std::vector<TrialReport>& reports, ReportFormat format)
{
    if (reports.empty()) throw contract_violation("no reports to emit");
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) rows.push_back(cells(r));

    std::string out;
    if (format == ReportFormat::csv) {
        for (std::size_t i = 0; i < headers.size(); ++i) out += (i ? "," : "") + headers[i];
        out += "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
            out += "\n";
        }
        return out;
    }

    // Display width counts the two-byte plus-minus sign as one column.
    auto width = [](const std::string& s) {
        std::size_t w = s.size();
        for (std::size_t p = s.find(pm); p != std::string::npos; p = s.find(pm, p + 1)) --w;
        return w;
    };
    std::vector<std::size_t> w(headers.size());
    for (std::size_t i = 0; i < headers.size(); ++i) {
        w[i] = headers[i].size();
        for (const auto& row : rows) w[i] = std::max(w[i], width(row[i]));
    }
    auto line = [&](const std::vector<std::string>& row) {
        std::string s;
        for (std::size_t i = 0; i < row.size(); ++i) {
            s += row[i] + std::string(w[i] - width(row[i]) + (i + 1 < row.size() ? 2 : 0), ' ');
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s + "\n";
    };
    out += line(headers);
    std::size_t total = 0;
    for (auto x : w) total += x + 2;
    out += std::string(total - 2, '-') + "\n";
    for (const auto& row : rows) out += line(row);
    return out;
}

std::vector<ReportRow> parse_report_csv(const std::string& doc)
{
    std::istringstream in(doc);
    std::string line;
    if (!std::getline(in, line)) throw schema_error("empty report");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != headers.size()) throw schema_error("report row has wrong column count");
        ReportRow r;
        r.model = f[0];
        r.n = std::stod(f[1]);
        r.train_time = parse_mean_std(f[2]);
        r.train_nrmse = parse_mean_std(f[3]);
        r.test_nrmse = parse_mean_std(f[4]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace rscn
