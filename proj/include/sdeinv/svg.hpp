#pragma once

// Minimal deterministic SVG line charts (polyline per series, axes, labels).

#include <string>
#include <vector>

#include "sdeinv/core.hpp"

namespace sdeinv::svg {

struct Series {
  std::string label;
  Vector values;
};

struct Chart {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  Vector x;
  std::vector<Series> series;
  int width = 640;
  int height = 400;
};

std::string render(const Chart& chart);
void write(const std::string& path, const Chart& chart);

}  // namespace sdeinv::svg
