#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arealmix {

using Ring = std::vector<std::pair<double, double>>;

/// Polygon rings per area id, parsed from JSON {"id": [[[x, y], ...], ...]}.
using PolygonSet = std::map<std::string, std::vector<Ring>>;

PolygonSet parse_polygons(std::string_view json_text);

struct ChoroplethValue {
  std::string id;
  double value = 0.0;
  bool flagged = false;
};

struct RenderOptions {
  std::optional<double> midpoint;  // diverging ramp around this value
  std::string title;
  double width = 800.0;
  int legend_steps = 5;
};

/// Standalone SVG with one filled path per value row, a legend and a star on
/// each flagged area. Throws InputError listing ids without a polygon.
std::string render_choropleth(const std::vector<ChoroplethValue>& values, const PolygonSet& polygons,
                              const RenderOptions& options = {});

/// Fill colour of a value: linear white-yellow-red ramp over [lo, hi], or a
/// blue-white-red ramp with white at the midpoint.
std::string ramp_colour(double value, double lo, double hi, std::optional<double> midpoint);

}  // namespace arealmix
