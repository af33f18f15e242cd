#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "core/evaluate.hpp"

namespace synteval {

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);

std::string format_number(double v);

/// Matrix CSV: header row/column of category labels, cells value or NA(n).
std::string matrix_csv(const IntersectionalMatrix& m);
nlohmann::json matrix_json(const IntersectionalMatrix& m);
IntersectionalMatrix matrix_from_json(const nlohmann::json& doc);

}  // namespace synteval
