#include "ibf/io.hpp"

#include <cmath>
#include <cstdio>

#include "ibf/errors.hpp"

namespace ibf {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

JsonLinesWriter::JsonLinesWriter(const std::filesystem::path& path)
    : path_(path), out_(open_for_write(path)) {}

void JsonLinesWriter::write(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(open_for_write(path)) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    out_ << (i ? "," : "") << format_number(values[i]);
  out_ << '\n';
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out = open_for_write(path);
  out << value.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Vec2> boundary_cells(const SweptGrid& grid, double t) {
  std::vector<Vec2> out;
  const int w = grid.width(), h = grid.height();
  auto on = [&](int ix, int iy) {
    return ix >= 0 && iy >= 0 && ix < w && iy < h && grid.time_at(ix, iy) <= t;
  };
  for (int iy = 0; iy < h; ++iy)
    for (int ix = 0; ix < w; ++ix)
      if (on(ix, iy) &&
          (!on(ix - 1, iy) || !on(ix + 1, iy) || !on(ix, iy - 1) || !on(ix, iy + 1)))
        out.push_back(grid.center_at(ix, iy));
  return out;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
  CsvWriter csv(path, {"time", "point", "x", "y"});
  for (const auto& s : trajectory.snapshots)
    for (Eigen::Index i = 0; i < s.points.cols(); ++i)
      csv.row({s.time, static_cast<double>(i), s.points(0, i), s.points(1, i)});
}

std::vector<std::filesystem::path> emit_plot_data(const PlotData& data,
                                                  const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (std::size_t r = 0; r < data.shape_boundaries.size(); ++r) {
    const auto path = dir / ("shape_boundary_" + std::to_string(r) + ".csv");
    CsvWriter csv(path, {"x", "y"});
    for (const Vec2& p : data.shape_boundaries[r]) csv.row({p.x(), p.y()});
    written.push_back(path);
  }
  {
    const auto path = dir / "fitted_disk.csv";
    std::ofstream out = open_for_write(path);
    out << "label,radius,angle,x,y\n";
    for (const auto& d : data.disks)
      for (int k = 0; k < 64; ++k) {
        const double a = 6.283185307179586476925 * k / 64.0;
        out << d.label << ',' << format_number(d.radius) << ',' << format_number(a) << ','
            << format_number(d.radius * std::cos(a)) << ','
            << format_number(d.radius * std::sin(a)) << '\n';
      }
    written.push_back(path);
  }
  {
    const auto path = dir / "diameter_vs_time.csv";
    CsvWriter csv(path, {"replica", "time", "diameter"});
    for (const auto& d : data.diameters) csv.row({static_cast<double>(d.replica), d.time, d.diameter});
    written.push_back(path);
  }
  {
    const auto path = dir / "survival.csv";
    CsvWriter csv(path, {"x", "survival"});
    for (const auto& s : data.survival) csv.row({s.x, s.survival});
    written.push_back(path);
  }
  return written;
}

}  // namespace ibf
