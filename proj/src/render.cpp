#include "arealmix/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "arealmix/error.hpp"

namespace arealmix {

namespace {

struct Rgb {
  double r, g, b;
};

Rgb mix(Rgb a, Rgb b, double t) {
  t = std::clamp(t, 0.0, 1.0);
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(c.r)), static_cast<int>(std::lround(c.g)),
                static_cast<int>(std::lround(c.b)));
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr Rgb kWhite{255, 255, 255}, kYellow{255, 237, 160}, kRed{189, 0, 38}, kBlue{33, 102, 172};

}  // namespace

PolygonSet parse_polygons(std::string_view json_text) {
  PolygonSet out;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("polygons: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("polygons: expected an object keyed by area id");
  for (const auto& [id, rings] : doc.items()) {
    if (!rings.is_array()) throw InputError("polygons: area '" + id + "' is not a list of rings");
    std::vector<Ring> parsed;
    for (const auto& ring : rings) {
      Ring r;
      if (!ring.is_array()) throw InputError("polygons: area '" + id + "' has a ring that is not a list");
      for (const auto& pt : ring) {
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
          throw InputError("polygons: area '" + id + "' has a point that is not [x, y]");
        r.emplace_back(pt[0].get<double>(), pt[1].get<double>());
      }
      if (r.size() < 3) throw InputError("polygons: area '" + id + "' has a ring with fewer than 3 points");
      parsed.push_back(std::move(r));
    }
    out.emplace(id, std::move(parsed));
  }
  return out;
}

std::string ramp_colour(double value, double lo, double hi, std::optional<double> midpoint) {
  if (!std::isfinite(value)) return "#cccccc";
  if (midpoint) {
    const double m = *midpoint;
    if (value >= m) return hex(mix(kWhite, kRed, hi > m ? (value - m) / (hi - m) : 0.0));
    return hex(mix(kWhite, kBlue, lo < m ? (m - value) / (m - lo) : 0.0));
  }
  const double t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
  return t < 0.5 ? hex(mix(kWhite, kYellow, 2.0 * t)) : hex(mix(kYellow, kRed, 2.0 * t - 1.0));
}

std::string render_choropleth(const std::vector<ChoroplethValue>& values, const PolygonSet& polygons,
                              const RenderOptions& options) {
  std::vector<std::string> missing;
  for (const auto& v : values)
    if (!polygons.count(v.id)) missing.push_back(v.id);
  if (!missing.empty()) {
    std::string msg = "no polygon for id(s):";
    for (const auto& id : missing) msg += " " + id;
    throw InputError(msg);
  }
  if (values.empty()) throw InputError("nothing to render");

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& v : values)
    for (const auto& ring : polygons.at(v.id))
      for (const auto& [x, y] : ring) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& v : values)
    if (std::isfinite(v.value)) {
      lo = std::min(lo, v.value);
      hi = std::max(hi, v.value);
    }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (options.midpoint) {
    lo = std::min(lo, *options.midpoint);
    hi = std::max(hi, *options.midpoint);
  }

  const double margin = 10.0, legend_w = 120.0, title_h = options.title.empty() ? 0.0 : 30.0;
  const double map_w = options.width - legend_w - 2 * margin;
  const double span_x = std::max(xmax - xmin, 1e-12), span_y = std::max(ymax - ymin, 1e-12);
  const double scale = map_w / span_x;
  const double map_h = span_y * scale;
  const double height = std::max(map_h, 40.0 + 20.0 * options.legend_steps) + 2 * margin + title_h;
  auto px = [&](double x) { return margin + (x - xmin) * scale; };
  auto py = [&](double y) { return margin + title_h + (ymax - y) * scale; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(options.width) << "\" height=\"" << num(height)
     << "\" viewBox=\"0 0 " << num(options.width) << ' ' << num(height) << "\">\n";
  if (!options.title.empty())
    os << "<text x=\"" << num(margin) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"16\">" << escape(options.title)
       << "</text>\n";
  os << "<g id=\"areas\" stroke=\"#444444\" stroke-width=\"0.5\">\n";
  for (const auto& v : values) {
    os << "<path id=\"area-" << escape(v.id) << "\" fill=\"" << ramp_colour(v.value, lo, hi, options.midpoint)
       << "\" fill-rule=\"evenodd\" d=\"";
    for (const auto& ring : polygons.at(v.id)) {
      for (std::size_t k = 0; k < ring.size(); ++k)
        os << (k ? " L" : "M") << num(px(ring[k].first)) << ',' << num(py(ring[k].second));
      os << " Z ";
    }
    os << "\"><title>" << escape(v.id) << ": " << v.value << "</title></path>\n";
  }
  os << "</g>\n";

  bool any_flag = false;
  for (const auto& v : values) any_flag = any_flag || v.flagged;
  if (any_flag) {
    os << "<g id=\"markers\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"0.7\">\n";
    for (const auto& v : values) {
      if (!v.flagged) continue;
      const Ring& ring = polygons.at(v.id).front();
      double cx = 0.0, cy = 0.0;
      for (const auto& [x, y] : ring) {
        cx += x;
        cy += y;
      }
      cx = px(cx / static_cast<double>(ring.size()));
      cy = py(cy / static_cast<double>(ring.size()));
      os << "<polygon class=\"star\" points=\"";
      for (int k = 0; k < 10; ++k) {
        const double r = k % 2 == 0 ? 7.0 : 3.0;
        const double a = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
        os << (k ? " " : "") << num(cx + r * std::cos(a)) << ',' << num(cy + r * std::sin(a));
      }
      os << "\"/>\n";
    }
    os << "</g>\n";
  }

  const double lx = options.width - legend_w + margin, ly0 = margin + title_h;
  os << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  const int steps = std::max(options.legend_steps, 2);
  for (int k = 0; k < steps; ++k) {
    const double v = hi - (hi - lo) * k / (steps - 1);
    const double y = ly0 + 20.0 * k;
    os << "<rect x=\"" << num(lx) << "\" y=\"" << num(y) << "\" width=\"18\" height=\"18\" fill=\""
       << ramp_colour(v, lo, hi, options.midpoint) << "\" stroke=\"#444444\" stroke-width=\"0.5\"/>";
    os << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(y + 13) << "\">" << num(v) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace arealmix
