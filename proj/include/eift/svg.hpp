#pragma once
// Minimal static SVG charts for metrics and coverage reports.

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace eift::svg {

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
  return palette[i % 6];
}

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 70;

inline std::string frame(const std::string& title, const std::string& y_label) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
  const double y0 = kHeight - kBottom, h = kHeight - kTop - kBottom;
  for (int k = 0; k <= 4; ++k) {
    const double y = y0 - h * k / 4.0;
    s += "<line x1=\"" + fmt(kLeft) + "\" x2=\"" + fmt(kWidth - kRight) + "\" y1=\"" + fmt(y) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + fmt(k / 4.0) + "</text>\n";
  }
  s += "<text transform=\"translate(14," + fmt(kTop + h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" + escape(y_label) +
       "</text>\n";
  return s;
}

}  // namespace detail

struct Bar {
  std::string label;
  double mean = 0.0;
  double half_width = 0.0;
};

/// Bars on a [0, 1] axis with +-half_width error bars.
inline std::string bar_chart(const std::string& title, const std::vector<Bar>& bars, const std::string& y_label = "rate") {
  using namespace detail;
  std::string s = frame(title, y_label);
  const double y0 = kHeight - kBottom, h = kHeight - kTop - kBottom;
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(bars.size(), 1));
  const auto y_of = [&](double v) { return y0 - h * std::clamp(v, 0.0, 1.0); };
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.2, w = slot * 0.6, cx = x + w / 2;
    s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y_of(b.mean)) + "\" width=\"" + fmt(w) + "\" height=\"" +
         fmt(y0 - y_of(b.mean)) + "\" fill=\"" + color(i) + "\"/>\n";
    const double lo = y_of(b.mean - b.half_width), hi = y_of(b.mean + b.half_width);
    s += "<path d=\"M" + fmt(cx) + " " + fmt(lo) + "V" + fmt(hi) + "M" + fmt(cx - 6) + " " + fmt(lo) + "h12M" + fmt(cx - 6) +
         " " + fmt(hi) + "h12\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(y0 + 16) + "\" text-anchor=\"middle\">" + escape(b.label) + "</text>\n";
    s += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(hi - 4) + "\" text-anchor=\"middle\" font-size=\"10\">" + fmt(b.mean) + "</text>\n";
  }
  return s + "</svg>\n";
}

struct Series {
  std::string name;
  /// (x, F(x)) points of a right-continuous step function, x ascending.
  std::vector<std::pair<double, double>> points;
};

/// Step-plot of CDFs over x in [0, x_max].
inline std::string cdf_plot(const std::string& title, const std::vector<Series>& series, const std::string& x_label) {
  using namespace detail;
  double x_max = 0.0;
  for (const auto& se : series)
    for (const auto& p : se.points) x_max = std::max(x_max, p.first);
  if (x_max <= 0.0) x_max = 1.0;
  std::string s = frame(title, "fraction of traces");
  const double y0 = kHeight - kBottom, h = kHeight - kTop - kBottom, w = kWidth - kLeft - kRight;
  const auto X = [&](double x) { return kLeft + w * x / x_max; };
  const auto Y = [&](double f) { return y0 - h * f; };
  for (int k = 0; k <= 4; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x_max * k / 4.0);
    s += "<text x=\"" + fmt(X(x_max * k / 4.0)) + "\" y=\"" + fmt(y0 + 16) + "\" text-anchor=\"middle\">" + buf + "</text>\n";
  }
  s += "<text x=\"" + fmt(kLeft + w / 2) + "\" y=\"" + fmt(kHeight - 30) + "\" text-anchor=\"middle\">" + escape(x_label) +
       "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string d = "M" + fmt(X(0)) + " " + fmt(Y(0));
    for (const auto& [x, F] : series[i].points) {
      d += "H" + fmt(X(x)) + "V" + fmt(Y(F));
    }
    d += "H" + fmt(X(x_max));
    s += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color(i) + "\" stroke-width=\"2\"/>\n";
    const double ly = kTop + 14 + 16 * static_cast<double>(i);
    s += "<rect x=\"" + fmt(kWidth - 170) + "\" y=\"" + fmt(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" + color(i) + "\"/>\n";
    s += "<text x=\"" + fmt(kWidth - 155) + "\" y=\"" + fmt(ly) + "\">" + escape(series[i].name) + "</text>\n";
  }
  return s + "</svg>\n";
}

}  // namespace eift::svg
