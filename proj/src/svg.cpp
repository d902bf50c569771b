#include "sdeinv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sdeinv::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 120;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 48;

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo;
  double hi;
};

Range padded(Range r) {
  if (!(r.hi > r.lo)) {
    const double pad = std::max(1.0, std::fabs(r.lo)) * 0.5;
    return {r.lo - pad, r.hi + pad};
  }
  const double pad = 0.05 * (r.hi - r.lo);
  return {r.lo - pad, r.hi + pad};
}

}  // namespace

std::string render(const Chart& chart) {
  Range xr{kInf, -kInf};
  for (double v : chart.x) xr = {std::min(xr.lo, v), std::max(xr.hi, v)};
  Range yr{kInf, -kInf};
  for (const auto& s : chart.series)
    for (double v : s.values)
      if (std::isfinite(v)) yr = {std::min(yr.lo, v), std::max(yr.hi, v)};
  if (!std::isfinite(xr.lo)) xr = {0.0, 1.0};
  if (!std::isfinite(yr.lo)) yr = {0.0, 1.0};
  if (!(xr.hi > xr.lo)) xr.hi = xr.lo + 1.0;
  yr = padded(yr);

  const double plot_w = chart.width - kMarginLeft - kMarginRight;
  const double plot_h = chart.height - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) { return kMarginTop + (yr.hi - y) / (yr.hi - yr.lo) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\"" << chart.height
     << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << chart.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"15\">" << escape(chart.title) << "</text>\n";

  // Axes and ticks.
  const double x0 = kMarginLeft, x1 = kMarginLeft + plot_w, y0 = kMarginTop, y1 = kMarginTop + plot_h;
  os << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  os << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(y1) << "\"/>\n";
  os << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(y1) << "\"/>\n";
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  constexpr int kTicks = 5;
  for (int k = 0; k <= kTicks; ++k) {
    const double xv = xr.lo + (xr.hi - xr.lo) * k / kTicks;
    const double yv = yr.lo + (yr.hi - yr.lo) * k / kTicks;
    os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(y1 + 16) << "\" text-anchor=\"middle\">" << fmt(xv, 1)
       << "</text>\n";
    os << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">" << fmt(yv, 2)
       << "</text>\n";
  }
  os << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << chart.height - 10 << "\" text-anchor=\"middle\">"
     << escape(chart.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << fmt((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fmt((y0 + y1) / 2) << ")\">" << escape(chart.y_label) << "</text>\n</g>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
    const std::size_t n = std::min(series.values.size(), chart.x.size());
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(series.values[i])) continue;
      os << (first ? "" : " ") << fmt(px(chart.x[i])) << ',' << fmt(py(series.values[i]));
      first = false;
    }
    os << "\"/>\n";
    const double ly = y0 + 14 + 16.0 * static_cast<double>(s);
    os << "<line x1=\"" << fmt(x1 + 10) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(x1 + 30) << "\" y2=\""
       << fmt(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(x1 + 36) << "\" y=\"" << fmt(ly) << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << escape(series.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write(const std::string& path, const Chart& chart) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << render(chart);
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace sdeinv::svg
