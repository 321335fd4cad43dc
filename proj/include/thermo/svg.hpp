#pragma once

#include <string>
#include <vector>

namespace thermo::svg {

struct Series {
  std::string label;
  std::string color;  // any SVG color
  std::vector<double> x;
  std::vector<double> y;
  bool step = false;  // hold each value until the next x
};

struct Panel {
  std::string title;
  std::string y_label;
  std::vector<Series> series;
};

// Stacked panels sharing the x axis, one per row. Self-contained SVG text.
std::string plot(const std::vector<Panel>& panels, const std::string& x_label, int width = 900,
                 int panel_height = 220);

}  // namespace thermo::svg
