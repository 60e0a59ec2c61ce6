#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibf/flow.hpp"
#include "ibf/shape.hpp"
#include "ibf/swept_grid.hpp"

namespace ibf {

// 9 significant digits, as used by every CSV file.
std::string format_number(double value);

class JsonLinesWriter {
 public:
  explicit JsonLinesWriter(const std::filesystem::path& path);
  void write(const nlohmann::json& record);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

// Centres of covered cells (first cover <= t) with an uncovered 4-neighbour.
std::vector<Vec2> boundary_cells(const SweptGrid& grid, double t);

struct DiskRow {
  std::string label;
  double radius = 0.0;
};

struct DiameterRow {
  int replica = 0;
  double time = 0.0;
  double diameter = 0.0;
};

struct PlotData {
  std::vector<std::vector<Vec2>> shape_boundaries;  // one list per replica
  std::vector<DiskRow> disks;
  std::vector<DiameterRow> diameters;
  std::vector<SurvivalPoint> survival;
};

// time,point,x,y for every snapshot.
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);

// Writes shape_boundary_<replica>.csv (x,y), fitted_disk.csv
// (label,radius,angle,x,y; 64 points per circle), diameter_vs_time.csv
// (replica,time,diameter) and survival.csv (x,survival). Returns the paths.
std::vector<std::filesystem::path> emit_plot_data(const PlotData& data,
                                                  const std::filesystem::path& dir);

}  // namespace ibf
