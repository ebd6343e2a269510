#include "pilid/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pilid/error.hpp"

namespace pilid {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
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

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw Error("failed writing '" + path.string() + "'");
}

std::string shapes_csv(const ShapeSet& shapes, const std::vector<FeatureSpec>& specs) {
  std::string out = "feature,point_index,x,u\n";
  for (const auto& shape : shapes.shapes) {
    const std::string name = csv_field(specs.at(shape.feature).name);
    for (std::size_t k = 0; k < shape.xs.size(); ++k) {
      out += name + "," + std::to_string(k) + "," + num(shape.xs[k]) + "," + num(shape.us[k]) + "\n";
    }
  }
  return out;
}

std::string shape_svg(const FeatureShape& shape, const std::string& name) {
  constexpr double kW = 480, kH = 320, kLeft = 60, kRight = 20, kTop = 36, kBottom = 44;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  double x0 = shape.xs.front(), x1 = shape.xs.back();
  if (x1 <= x0) x1 = x0 + 1.0;
  double u0 = *std::min_element(shape.us.begin(), shape.us.end());
  double u1 = *std::max_element(shape.us.begin(), shape.us.end());
  if (u1 - u0 <= 1e-12 * std::max(1.0, std::abs(u0))) {
    // Flat curve: centre it vertically.
    u0 -= 1.0;
    u1 += 1.0;
  }
  const auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double u) { return kTop + (u1 - u) / (u1 - u0) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"320\" viewBox=\"0 0 480 320\">\n";
  s += "<rect width=\"480\" height=\"320\" fill=\"white\"/>\n";
  s += "<text x=\"240\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       xml_escape(name) + "</text>\n";
  // axes
  s += "<path d=\"M" + short_num(kLeft) + " " + short_num(kTop) + " V" + short_num(kTop + ph) + " H" +
       short_num(kLeft + pw) + "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0;
    const double fu = u0 + (u1 - u0) * t / 4.0;
    s += "<text x=\"" + short_num(px(fx)) + "\" y=\"" + short_num(kTop + ph + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + short_num(fx) + "</text>\n";
    s += "<text x=\"" + short_num(kLeft - 6) + "\" y=\"" + short_num(py(fu) + 3) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + short_num(fu) + "</text>\n";
  }
  s += "<text x=\"240\" y=\"" + short_num(kH - 8) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(name) + "</text>\n";
  s += "<text x=\"14\" y=\"" + short_num(kTop + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"12\" transform=\"rotate(-90 14 " + short_num(kTop + ph / 2) + ")\">u</text>\n";
  std::string d;
  for (std::size_t k = 0; k < shape.xs.size(); ++k) {
    d += (k == 0 ? "M" : " L") + short_num(px(shape.xs[k])) + " " + short_num(py(shape.us[k]));
  }
  if (shape.xs.size() == 1) d += " L" + short_num(kLeft + pw) + " " + short_num(py(shape.us[0]));
  s += "<path d=\"" + d + "\" stroke=\"#1f4e9c\" stroke-width=\"2\" fill=\"none\"/>\n";
  s += "</svg>\n";
  return s;
}

ShapeExport export_shapes(const AnyModel& model, const std::filesystem::path& out_dir, bool svg,
                          ShapeAnchor anchor, const Matrix* reference_encoded) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create directory '" + out_dir.string() + "': " + ec.message());
  const ShapeSet shapes = extract_shapes(model_linear(model), model_points(model), anchor, reference_encoded);
  const auto& specs = model_specs(model);
  ShapeExport result;
  result.csv = out_dir / "shapes.csv";
  write_text(result.csv, shapes_csv(shapes, specs));
  if (svg) {
    for (const auto& shape : shapes.shapes) {
      const auto path = out_dir / ("shape_" + std::to_string(shape.feature + 1) + ".svg");
      write_text(path, shape_svg(shape, specs.at(shape.feature).name));
      result.svgs.push_back(path);
    }
  }
  return result;
}

std::string interaction_csv(const InteractionSurface& surface, const std::vector<FeatureSpec>& specs) {
  std::string out = "# a=" + specs.at(surface.feature_a).name + " b=" + specs.at(surface.feature_b).name + " blocks=";
  for (std::size_t i = 0; i < surface.blocks.size(); ++i) out += (i ? ";" : "") + std::to_string(surface.blocks[i]);
  out += "\nx_a,x_b,value\n";
  for (std::size_t p = 0; p < surface.xs_a.size(); ++p) {
    for (std::size_t q = 0; q < surface.xs_b.size(); ++q) {
      out += num(surface.xs_a[p]) + "," + num(surface.xs_b[q]) + "," + num(surface.values(p, q)) + "\n";
    }
  }
  return out;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace,
                      std::span<const double> phase2) {
  if (phase2.empty()) {
    std::string out = "epoch,loss\n";
    for (std::size_t e = 0; e < trace.size(); ++e) out += std::to_string(e + 1) + "," + num(trace[e]) + "\n";
    write_text(path, out);
    return;
  }
  std::string out = "phase,epoch,loss\n";
  for (std::size_t e = 0; e < trace.size(); ++e) out += "1," + std::to_string(e + 1) + "," + num(trace[e]) + "\n";
  for (std::size_t e = 0; e < phase2.size(); ++e) out += "2," + std::to_string(e + 1) + "," + num(phase2[e]) + "\n";
  write_text(path, out);
}

void write_block_diagnostics(const std::filesystem::path& path, const PilibResult& result) {
  std::string out = "block,order,active\n";
  const auto& specs = result.model.specs;
  for (std::size_t b = 0; b < result.orders.size(); ++b) {
    std::string names;
    for (std::size_t j : result.active_sets[b]) names += (names.empty() ? "" : ";") + specs.at(j).name;
    out += std::to_string(b) + "," + num(result.orders[b]) + "," + csv_field(names) + "\n";
  }
  write_text(path, out);
}

}  // namespace pilid
