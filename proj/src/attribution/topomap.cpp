#include "eegrob/attribution/topomap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "eegrob/core/error.hpp"
#include "eegrob/regions/regions.hpp"

namespace eegrob {

namespace {

constexpr std::size_t kNeighbours = 8;

struct Rgb {
  double r, g, b;
};

// Perceptually ordered dark-blue -> green -> yellow scale.
constexpr std::array<Rgb, 5> kAnchors{{{0x44, 0x01, 0x54},
                                       {0x3b, 0x52, 0x8b},
                                       {0x21, 0x91, 0x8c},
                                       {0x5e, 0xc9, 0x62},
                                       {0xfd, 0xe7, 0x25}}};

std::string colour(double t) {
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(kAnchors.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), kAnchors.size() - 2);
  const double f = t - static_cast<double>(i);
  const auto mix = [&](double a, double b) { return static_cast<int>(std::lround(a + f * (b - a))); };
  const auto& a = kAnchors[i];
  const auto& b = kAnchors[i + 1];
  return fmt::format("#{:02x}{:02x}{:02x}", mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b));
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string topomap_csv(const TopoMap& map) {
  if (map.channel_names.size() != map.values.size()) {
    throw ValidationError("values", "one value per channel is required");
  }
  std::string out = "channel,value\n";
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    out += fmt::format("{},{:.9g}\n", map.channel_names[i], map.values[i]);
  }
  return out;
}

std::vector<Point2> topomap_positions(const Montage& montage) {
  if (montage.positions_2d) return *montage.positions_2d;
  std::vector<Point2> out;
  std::string missing;
  for (const auto& label : montage.channel_names) {
    if (auto p = standard_position(label)) {
      out.push_back(*p);
    } else {
      missing += (missing.empty() ? "" : ", ") + label;
    }
  }
  if (!missing.empty()) throw ValidationError("montage.positions_2d", "no scalp position for " + missing);
  return out;
}

TopomapGrid interpolate_topomap(std::span<const double> values, std::span<const Point2> positions, int size) {
  if (values.size() != positions.size()) throw ValidationError("positions", "one position per value is required");
  if (values.empty()) throw ValidationError("values", "empty map");
  if (size < 2) throw ValidationError("size", "grid needs at least 2 cells per side");
  TopomapGrid grid;
  grid.size = size;
  grid.cells.resize(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
  std::vector<std::size_t> order(values.size());
  std::vector<double> dist(values.size());
  const std::size_t k = std::min(kNeighbours, values.size());
  for (int row = 0; row < size; ++row) {
    const double y = 1.0 - (2.0 * row + 1.0) / size;
    for (int col = 0; col < size; ++col) {
      const double x = -1.0 + (2.0 * col + 1.0) / size;
      if (x * x + y * y > 1.0) continue;
      for (std::size_t i = 0; i < values.size(); ++i) {
        dist[i] = std::hypot(x - positions[i].x, y - positions[i].y);
      }
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
      double num = 0.0, den = 0.0;
      std::optional<double> exact;
      for (std::size_t j = 0; j < k; ++j) {
        const auto i = order[j];
        if (dist[i] < 1e-12) {
          exact = values[i];
          break;
        }
        const double w = 1.0 / (dist[i] * dist[i]);
        num += w * values[i];
        den += w;
      }
      grid.cells[static_cast<std::size_t>(row * size + col)] = exact ? *exact : num / den;
    }
  }
  return grid;
}

std::string render_topomap_svg(const TopoMap& map, std::span<const Point2> positions, int size) {
  const auto grid = interpolate_topomap(map.values, positions, size);
  // The colour scale spans what is drawn, so the hottest cell is always the
  // top colour; the data range goes into <desc>.
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& c : grid.cells) {
    if (c) lo = std::min(lo, *c), hi = std::max(hi, *c);
  }
  const auto [data_lo, data_hi] = std::minmax_element(map.values.begin(), map.values.end());
  // IDW of equal values can wobble in the last bit; treat that as flat.
  const bool flat = hi - lo <= 1e-12 * std::max({std::abs(hi), std::abs(lo), 1e-300});
  const auto scale = [&](double v) { return flat ? 0.5 : (v - lo) / (hi - lo); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\" "
      "shape-rendering=\"crispEdges\">\n",
      size);
  out += fmt::format("<title>{} {} {} {}</title>\n", xml_escape(map.method), xml_escape(map.task),
                     xml_escape(map.label), xml_escape(map.condition));
  out += fmt::format("<desc>min={:.6g} max={:.6g}</desc>\n", *data_lo, *data_hi);
  for (int row = 0; row < size; ++row) {
    int col = 0;
    while (col < size) {
      const auto cell = grid.at(row, col);
      if (!cell) {
        ++col;
        continue;
      }
      const auto fill = colour(scale(*cell));
      int end = col + 1;
      while (end < size && grid.at(row, end) && colour(scale(*grid.at(row, end))) == fill) ++end;
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"1\" fill=\"{}\"/>\n", col, row, end - col, fill);
      col = end;
    }
  }
  const double half = size / 2.0;
  out += fmt::format("<circle cx=\"{0:.2f}\" cy=\"{0:.2f}\" r=\"{1:.2f}\" fill=\"none\" stroke=\"#000\"/>\n", half,
                     half - 0.5);
  out += fmt::format("<polyline points=\"{:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f}\" fill=\"none\" stroke=\"#000\"/>\n",
                     half - 0.06 * size, 0.015 * size, half, 0.0, half + 0.06 * size, 0.015 * size);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double px = (positions[i].x + 1.0) / 2.0 * size;
    const double py = (1.0 - positions[i].y) / 2.0 * size;
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1\" fill=\"#000\"><title>{}</title></circle>\n", px,
                       py, i < map.channel_names.size() ? xml_escape(map.channel_names[i]) : std::to_string(i));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace eegrob
