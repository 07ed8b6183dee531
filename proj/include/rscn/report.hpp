#pragma once

// Comparison tables in the column order Models, N, Training time,
// Training NRMSE, Testing NRMSE.

#include "rscn/evaluation.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rscn {

enum class ReportFormat { csv, text };

ReportFormat parse_report_format(std::string_view s);

/// "mean±std" with 4 decimals.
std::string format_mean_std(const MeanStd& v);

std::string emit_report(const std::vector<TrialReport>& reports, ReportFormat format);

struct ReportRow {
    std::string model;
    double n = 0.0;
    MeanStd train_time;
    MeanStd train_nrmse;
    MeanStd test_nrmse;
};

/// Parses a document written by emit_report(..., csv).
std::vector<ReportRow> parse_report_csv(const std::string& doc);

} // namespace rscn
