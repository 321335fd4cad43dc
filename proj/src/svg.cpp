#include "thermo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace thermo::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish(bool from_zero) {
    if (!std::isfinite(lo)) lo = hi = 0.0;
    if (from_zero) lo = std::min(lo, 0.0);
    if (hi - lo < 1e-12) hi = lo + 1.0;
  }
};

}  // namespace

std::string plot(const std::vector<Panel>& panels, const std::string& x_label, int width, int panel_height) {
  constexpr int kLeft = 70, kRight = 20, kTop = 30, kBottom = 40;
  const int height = int(panels.size()) * panel_height + kBottom;

  Range xr;
  for (const auto& p : panels)
    for (const auto& s : p.series)
      for (double v : s.x) xr.add(v);
  xr.finish(false);

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height, width, height);

  const double plot_w = width - kLeft - kRight;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& panel = panels[pi];
    const int top = int(pi) * panel_height + kTop;
    const double plot_h = panel_height - kTop - 10;
    Range yr;
    for (const auto& s : panel.series)
      for (double v : s.y) yr.add(v);
    yr.finish(true);
    auto py = [&](double y) { return top + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h; };

    out += fmt::format("<text x=\"{}\" y=\"{}\" font-weight=\"bold\">{}</text>\n", kLeft, top - 8, escape(panel.title));
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#888\"/>\n",
                       kLeft, top, plot_w, plot_h);
    for (int tick = 0; tick <= 4; ++tick) {
      const double v = yr.lo + (yr.hi - yr.lo) * tick / 4.0;
      out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6, py(v) + 4, v);
    }
    out += fmt::format(
        "<text transform=\"translate(14,{:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
        top + plot_h / 2, escape(panel.y_label));

    int legend_y = top + 14;
    for (const auto& s : panel.series) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (s.step && i > 0) pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i - 1]));
        pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
      }
      out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n", s.color, pts);
      out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" fill=\"{}\" text-anchor=\"end\">{}</text>\n",
                         kLeft + plot_w - 6, legend_y, s.color, escape(s.label));
      legend_y += 14;
    }
  }

  const double axis_y = double(panels.size()) * panel_height;
  for (int tick = 0; tick <= 5; ++tick) {
    const double v = xr.lo + (xr.hi - xr.lo) * tick / 5.0;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", px(v), axis_y + 4, v);
  }
  out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + plot_w / 2,
                     height - 6, escape(x_label));
  out += "</svg>\n";
  return out;
}

}  // namespace thermo::svg
