#pragma once

#include "rscn/reservoir.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace rscn {

/// Current model document version.
inline constexpr int model_format_version = 1;

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const char* field);

nlohmann::json model_to_json(const ReservoirModel& model);
ReservoirModel model_from_json(const nlohmann::json& j);

void save_model(const ReservoirModel& model, const std::filesystem::path& path);
ReservoirModel load_model(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace rscn
