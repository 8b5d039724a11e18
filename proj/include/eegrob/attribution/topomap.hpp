#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegrob/core/trial.hpp"

namespace eegrob {

struct TopoMap {
  std::vector<std::string> channel_names;
  std::vector<double> values;
  std::string method;
  std::string task;
  std::string label;  // class name or "average"
  std::string condition;
};

/// "channel,value" lines.
std::string topomap_csv(const TopoMap& map);

/// Montage positions, falling back to standard 10-20 positions per label.
/// Throws ValidationError listing every channel without a position.
std::vector<Point2> topomap_positions(const Montage& montage);

struct TopomapGrid {
  int size = 0;
  std::vector<std::optional<double>> cells;  // row-major, row 0 at the top (+y)

  std::optional<double> at(int row, int col) const { return cells[static_cast<std::size_t>(row * size + col)]; }
};

/// Inverse-distance weighting (power 2, 8 nearest sensors) on a size x size
/// grid over [-1, 1]^2; cells outside the unit disc are empty.
TopomapGrid interpolate_topomap(std::span<const double> values, std::span<const Point2> positions, int size = 128);

/// Deterministic SVG: the interpolated disc, head outline and electrode
/// markers. A uniform map renders in the middle colour of the scale.
std::string render_topomap_svg(const TopoMap& map, std::span<const Point2> positions, int size = 128);

}  // namespace eegrob
