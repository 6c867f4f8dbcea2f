#include "fraclab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fraclab/error.hpp"

namespace fraclab {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
  out << text;
  require(static_cast<bool>(out), "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

// Parses a comma separated row of doubles; false if any field is not numeric.
bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto end = line.find(',', pos);
    if (end == std::string::npos) end = line.size();
    const std::string field = line.substr(pos, end - pos);
    char* stop = nullptr;
    const double v = std::strtod(field.c_str(), &stop);
    if (stop == field.c_str()) return false;
    while (*stop == ' ' || *stop == '\r' || *stop == '\t') ++stop;
    if (*stop != '\0') return false;
    out.push_back(v);
    pos = end + 1;
  }
  return !out.empty();
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> row;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (parse_row(line, row)) rows.push_back(row);
  }
  return rows;
}

}  // namespace

void write_points_csv(const std::filesystem::path& path, const PointCloud& points) {
  std::string s;
  for (int a = 0; a < points.dim(); ++a) s += (a ? ",x" : "x") + std::to_string(a);
  s += '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = points.point(i);
    for (int a = 0; a < points.dim(); ++a) {
      if (a) s += ',';
      s += format_double(p[a]);
    }
    s += '\n';
  }
  write_text(path, s);
}

PointCloud read_points_csv(const std::filesystem::path& path, double separation) {
  const auto rows = read_rows(path);
  require(!rows.empty(), "no points in " + path.string());
  const auto d = rows.front().size();
  std::vector<double> coords;
  for (const auto& r : rows) {
    require(r.size() == d, "ragged point file " + path.string());
    coords.insert(coords.end(), r.begin(), r.end());
  }
  if (separation < 0.0) {
    const PointCloud probe(static_cast<int>(d), coords);
    separation = rows.size() > 1 ? probe.min_pairwise_distance() : 0.0;
  }
  return PointCloud(static_cast<int>(d), std::move(coords), separation);
}

Json plane_to_json(const AffinePlane& plane) {
  Json j;
  j["d"] = plane.ambient_dim();
  j["n"] = plane.plane_dim();
  Json basis = Json::array();
  for (int i = 0; i < plane.plane_dim(); ++i) {
    Json col = Json::array();
    for (int a = 0; a < plane.ambient_dim(); ++a) col.push_back(plane.basis()(a, i));
    basis.push_back(col);
  }
  j["basis"] = basis;
  Json off = Json::array();
  for (int a = 0; a < plane.ambient_dim(); ++a) off.push_back(plane.offset()(a));
  j["offset"] = off;
  return j;
}

AffinePlane plane_from_json(const Json& j) {
  const int d = j.at("d").get<int>();
  const int n = j.at("n").get<int>();
  const auto& basis = j.at("basis");
  require(static_cast<int>(basis.size()) == n, "basis has the wrong number of vectors");
  Mat b(d, n);
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(basis[i].size()) == d, "basis vector has the wrong dimension");
    for (int a = 0; a < d; ++a) b(a, i) = basis[i][a].get<double>();
  }
  Vec off = Vec::Zero(d);
  if (j.contains("offset")) {
    require(static_cast<int>(j["offset"].size()) == d, "offset has the wrong dimension");
    for (int a = 0; a < d; ++a) off(a) = j["offset"][a].get<double>();
  }
  return AffinePlane(b, off);
}

Json family_to_json(const PlaneFamily& family) {
  Json j;
  j["separation"] = family.separation;
  Json arr = Json::array();
  for (const auto& p : family.planes) arr.push_back(plane_to_json(p));
  j["planes"] = arr;
  return j;
}

PlaneFamily family_from_json(const Json& j) {
  PlaneFamily f;
  const Json& arr = j.is_array() ? j : j.at("planes");
  if (j.is_object() && j.contains("separation")) f.separation = j["separation"].get<double>();
  for (const auto& rec : arr) f.planes.push_back(plane_from_json(rec));
  return f;
}

void write_planes_json(const std::filesystem::path& path, const PlaneFamily& family) {
  write_text(path, family_to_json(family).dump(1) + "\n");
}

PlaneFamily read_planes_json(const std::filesystem::path& path) {
  return family_from_json(Json::parse(read_text(path)));
}

void write_lines_csv(const std::filesystem::path& path, const PlaneFamily& lines) {
  std::string s = "dir_x,dir_y,offset_x,offset_y\n";
  for (const auto& l : lines.planes) {
    require(l.ambient_dim() == 2 && l.plane_dim() == 1, "lines.csv holds planar lines only");
    s += format_double(l.basis()(0, 0)) + ',' + format_double(l.basis()(1, 0)) + ',' +
         format_double(l.offset()(0)) + ',' + format_double(l.offset()(1)) + '\n';
  }
  write_text(path, s);
}

PlaneFamily read_lines_csv(const std::filesystem::path& path, double separation) {
  PlaneFamily f;
  f.separation = separation;
  for (const auto& r : read_rows(path)) {
    require(r.size() == 4, "line rows need dir_x,dir_y,offset_x,offset_y");
    Vec p(2);
    p << r[2], r[3];
    Mat dir(2, 1);
    dir << r[0], r[1];
    f.planes.push_back(AffinePlane::through(p, dir));
  }
  return f;
}

PlaneFamily read_planes_any(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_lines_csv(path);
  return read_planes_json(path);
}

void write_grid_measure(const std::filesystem::path& path, const GridMeasure& mu) {
  Json head;
  head["d"] = mu.dim();
  if (mu.isotropic())
    head["h"] = mu.spacing().front();
  else
    head["spacing"] = mu.spacing();
  head["origin"] = mu.origin();
  head["shape"] = mu.shape();
  std::string s = head.dump() + "\n";
  s.reserve(s.size() + mu.size() * 24);
  for (double v : mu.values()) {
    s += format_double(v);
    s += '\n';
  }
  write_text(path, s);
}

GridMeasure read_grid_measure(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty measure file");
  const Json head = Json::parse(line);
  const int d = head.at("d").get<int>();
  std::vector<double> spacing;
  if (head.contains("spacing"))
    spacing = head["spacing"].get<std::vector<double>>();
  else
    spacing.assign(d, head.at("h").get<double>());
  auto origin = head.at("origin").get<std::vector<double>>();
  auto shape = head.at("shape").get<std::vector<std::size_t>>();
  require(static_cast<int>(shape.size()) == d, "measure header dimension mismatch");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.push_back(std::strtod(line.c_str(), nullptr));
  }
  return GridMeasure(std::move(spacing), std::move(origin), std::move(shape), std::move(values));
}

}  // namespace fraclab
