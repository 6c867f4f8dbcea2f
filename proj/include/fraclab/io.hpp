#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fraclab/geometry.hpp"
#include "fraclab/grid_measure.hpp"

namespace fraclab {

using Json = nlohmann::ordered_json;

/// Shortest round-trip text for a double ("%.17g").
std::string format_double(double x);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// One point per row, comma separated, with a header row x0,x1,...
void write_points_csv(const std::filesystem::path& path, const PointCloud& points);
/// Rows that do not parse as numbers are skipped. The separation recorded in
/// the cloud is the measured minimum pairwise distance unless given.
PointCloud read_points_csv(const std::filesystem::path& path, double separation = -1.0);

/// {d, n, basis: [[...] per direction], offset: [...]}
Json plane_to_json(const AffinePlane& plane);
AffinePlane plane_from_json(const Json& j);

/// {separation, planes: [records]}; a bare array of records is also read.
Json family_to_json(const PlaneFamily& family);
PlaneFamily family_from_json(const Json& j);
void write_planes_json(const std::filesystem::path& path, const PlaneFamily& family);
PlaneFamily read_planes_json(const std::filesystem::path& path);

/// Planar lines as rows dir_x,dir_y,offset_x,offset_y.
void write_lines_csv(const std::filesystem::path& path, const PlaneFamily& lines);
PlaneFamily read_lines_csv(const std::filesystem::path& path, double separation = 0.0);

/// Either format, chosen by extension (.csv or .json).
PlaneFamily read_planes_any(const std::filesystem::path& path);

/// First line: JSON header {d, h or spacing, origin, shape}; then one value
/// per line in row-major order.
void write_grid_measure(const std::filesystem::path& path, const GridMeasure& mu);
GridMeasure read_grid_measure(const std::filesystem::path& path);

}  // namespace fraclab
