#include "ivg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ivg/document.hpp"
#include "ivg/geometry.hpp"

namespace ivg {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
  return buf;
}

std::string gray(int level) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", level, level, level);
  return buf;
}

const char* kBubbleFills[] = {"#e8eef4", "#f4ebe4", "#e6f2ec", "#f2e8f1", "#f3f1e1", "#e4eff2"};

PointSet convex_hull(PointSet pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  PointSet hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

struct NodeBox {
  double x, y, w, h;
};

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters other than tab/newline are not allowed in XML 1.0.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') {
          out += ' ';
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string render_svg(const json& doc, const SvgOptions& options) {
  if (!doc.is_object() || doc.value("schema", "") != kLayoutSchema) {
    throw std::invalid_argument("not a layout document");
  }
  const double width = doc.at("viewport").at("width").get<double>();
  const double height = doc.at("viewport").at("height").get<double>();

  std::map<std::string, NodeBox> boxes;
  for (const auto& n : doc.at("nodes")) {
    boxes[n.at("id").get<std::string>()] = {n.at("x").get<double>(), n.at("y").get<double>(),
                                            n.at("width").get<double>(), n.at("height").get<double>()};
  }

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" width=\""
      << num(width) << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height)
      << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"#ffffff\"/>\n";

  out << "  <g class=\"bubbles\">\n";
  for (const auto& b : doc.at("bubbles")) {
    PointSet corners;
    const double pad = options.bubble_padding;
    for (const auto& id : b.at("members")) {
      const auto it = boxes.find(id.get<std::string>());
      if (it == boxes.end()) continue;
      const NodeBox& nb = it->second;
      const double hw = nb.w / 2 + pad, hh = nb.h / 2 + pad;
      corners.push_back({nb.x - hw, nb.y - hh});
      corners.push_back({nb.x + hw, nb.y - hh});
      corners.push_back({nb.x + hw, nb.y + hh});
      corners.push_back({nb.x - hw, nb.y + hh});
    }
    if (corners.empty()) continue;
    const PointSet hull = convex_hull(corners);
    const bool dashed = b.at("dashed").get<bool>();
    const int group = b.at("group").get<int>();
    out << "    <polygon class=\"bubble " << xml_escape(b.at("kind").get<std::string>()) << "\" points=\"";
    for (std::size_t i = 0; i < hull.size(); ++i) out << (i ? " " : "") << num(hull[i].x) << ',' << num(hull[i].y);
    out << "\" stroke-linejoin=\"round\" stroke-width=\"" << (dashed ? "1.5" : "8") << "\"";
    if (dashed) {
      out << " fill=\"none\" stroke=\"#777777\" stroke-dasharray=\"6 4\"";
    } else {
      const char* fill = kBubbleFills[static_cast<std::size_t>(std::abs(group)) % std::size(kBubbleFills)];
      out << " fill=\"" << fill << "\" stroke=\"" << fill << "\"";
    }
    out << "/>\n";
  }
  out << "  </g>\n";

  double max_weight = 0.0;
  for (const auto& e : doc.at("merged_edges")) {
    if (e.at("visible").get<bool>()) max_weight = std::max(max_weight, e.at("weight").get<double>());
  }
  out << "  <g class=\"edges\">\n";
  for (const auto& e : doc.at("merged_edges")) {
    if (!e.at("visible").get<bool>()) continue;
    const auto s = boxes.find(e.at("source").get<std::string>());
    const auto t = boxes.find(e.at("target").get<std::string>());
    if (s == boxes.end() || t == boxes.end()) continue;
    const Point2 a{s->second.x, s->second.y}, b{t->second.x, t->second.y};
    const double len = distance(a, b);
    if (len <= 0) continue;
    // Tapered: wide at the source, a point at the target.
    const double w = max_weight > 0 ? 1.0 + 5.0 * e.at("weight").get<double>() / max_weight : 1.0;
    const Point2 normal{-(b.y - a.y) / len * w / 2, (b.x - a.x) / len * w / 2};
    const Point2 p1 = a + normal, p2 = a - normal;
    const auto& mods = e.at("modifications");
    const std::string color = e.at("merged").get<bool>() || mods.size() != 1
                                  ? std::string("#7a7a7a")
                                  : mods[0].at("color").get<std::string>();
    out << "    <polygon class=\"edge\" points=\"" << num(p1.x) << ',' << num(p1.y) << ' ' << num(b.x) << ','
        << num(b.y) << ' ' << num(p2.x) << ',' << num(p2.y) << "\" fill=\"" << xml_escape(color)
        << "\" fill-opacity=\"0.6\"/>\n";
  }
  out << "  </g>\n";

  out << "  <g class=\"nodes\">\n";
  for (const auto& n : doc.at("nodes")) {
    const NodeBox& nb = boxes.at(n.at("id").get<std::string>());
    const std::string shade = gray(n.at("shade").get<int>());
    const double x = nb.x - nb.w / 2, y = nb.y - nb.h / 2;
    if (n.at("mode").get<std::string>() == "thumbnail") {
      if (options.embed_thumbnails) {
        out << "    <image x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(nb.w) << "\" height=\""
            << num(nb.h) << "\" xlink:href=\""
            << xml_escape(options.asset_prefix + n.at("asset").get<std::string>()) << "\"/>\n";
      }
      out << "    <rect class=\"node thumbnail\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
          << num(nb.w) << "\" height=\"" << num(nb.h) << "\" fill=\"none\" stroke=\"" << shade
          << "\" stroke-width=\"3\"/>\n";
    } else {
      out << "    <rect class=\"node rect\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(nb.w)
          << "\" height=\"" << num(nb.h) << "\" fill=\"" << shade << "\"/>\n";
    }
  }
  out << "  </g>\n";

  out << "  <g class=\"glyphs\">\n";
  for (const auto& g : doc.at("glyphs")) {
    const double cx = g.at("x").get<double>(), cy = g.at("y").get<double>();
    out << "    <g class=\"glyph\">\n";
    out << "      <circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(options.glyph_radius)
        << "\" fill=\"#ffffff\" fill-opacity=\"0.8\" stroke=\"#bbbbbb\"/>\n";
    double start = -std::numbers::pi / 2;
    for (const auto& s : g.at("slices")) {
      const double sweep = 2 * std::numbers::pi * s.at("angle_fraction").get<double>();
      const double r = options.glyph_radius * s.at("radius_fraction").get<double>();
      const std::string color = xml_escape(s.at("color").get<std::string>());
      const char* opacity = s.at("low_opacity").get<bool>() ? "0.35" : "0.9";
      if (sweep >= 2 * std::numbers::pi - 1e-9) {
        out << "      <circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" fill=\""
            << color << "\" fill-opacity=\"" << opacity << "\"/>\n";
      } else {
        const double end = start + sweep;
        out << "      <path d=\"M " << num(cx) << ' ' << num(cy) << " L " << num(cx + r * std::cos(start)) << ' '
            << num(cy + r * std::sin(start)) << " A " << num(r) << ' ' << num(r) << " 0 "
            << (sweep > std::numbers::pi ? 1 : 0) << " 1 " << num(cx + r * std::cos(end)) << ' '
            << num(cy + r * std::sin(end)) << " Z\" fill=\"" << color << "\" fill-opacity=\"" << opacity
            << "\"/>\n";
      }
      start += sweep;
    }
    std::string label;
    for (const auto& word : g.at("labels")) label += (label.empty() ? "" : " ") + word.get<std::string>();
    out << "      <text x=\"" << num(cx) << "\" y=\"" << num(cy + options.glyph_radius + 12)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << xml_escape(label)
        << "</text>\n";
    out << "    </g>\n";
  }
  out << "  </g>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace ivg
