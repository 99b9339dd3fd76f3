#pragma once

// Minimal static SVG writer for (Ca, Na) overlays and voltage time courses.
// Canvas 800 x 600 user units; plot area x in [70, 780], y in [20, 540];
// both axes map linearly, the vertical one increasing upward.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "burstlab/model.hpp"

namespace burstlab {

namespace svg_colors {
inline constexpr const char* kSnic = "#2ca02c";
inline constexpr const char* kHopf = "#000000";
inline constexpr const char* kContour = "#999999";
inline constexpr const char* kBlue = "#1f77b4";
inline constexpr const char* kPurple = "#9467bd";
inline constexpr const char* kRed = "#d62728";
}  // namespace svg_colors

class SvgPlot {
 public:
  static constexpr double kWidth = 800, kHeight = 600;
  static constexpr double kLeft = 70, kRight = 780, kTop = 20, kBottom = 540;

  SvgPlot(double x_min, double x_max, double y_min, double y_max, std::string x_label,
          std::string y_label)
      : x0_(x_min), x1_(x_max), y0_(y_min), y1_(y_max), xl_(std::move(x_label)), yl_(std::move(y_label)) {}

  double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kRight - kLeft); }
  double py(double y) const { return kBottom - (y - y0_) / (y1_ - y0_) * (kBottom - kTop); }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                double width = 1.0, const std::string& dash = "") {
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << '"';
    if (!dash.empty()) os << " stroke-dasharray=\"" << dash << '"';
    os << " points=\"";
    for (std::size_t k = 0; k < xs.size() && k < ys.size(); ++k) {
      if (!std::isfinite(xs[k]) || !std::isfinite(ys[k])) continue;
      os << num(px(xs[k])) << ',' << num(py(ys[k])) << ' ';
    }
    os << "\"/>";
    body_.push_back(os.str());
  }

  void polyline(const std::vector<SlowPoint>& pts, const std::string& color, double width = 1.0,
                const std::string& dash = "") {
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
      xs.push_back(p.ca);
      ys.push_back(p.na);
    }
    polyline(xs, ys, color, width, dash);
  }

  void marker(double x, double y, const std::string& color, double r = 4.0) {
    std::ostringstream os;
    os << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"" << r
       << "\" fill=\"" << color << "\"/>";
    body_.push_back(os.str());
  }

  void label(double x, double y, const std::string& text, const std::string& color = "#000000") {
    std::ostringstream os;
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << num(py(y)) << "\" font-size=\"12\" fill=\""
       << color << "\">" << escape(text) << "</text>";
    body_.push_back(os.str());
  }

  void write(std::ostream& os) const {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" "
          "height=\"600\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
    os << "<g clip-path=\"url(#plot)\">\n";
    os << "<clipPath id=\"plot\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
       << kRight - kLeft << "\" height=\"" << kBottom - kTop << "\"/></clipPath>\n";
    for (const auto& e : body_) os << e << '\n';
    os << "</g>\n";
    axes(os);
    os << "</svg>\n";
  }

 private:
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }

  static std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '<') r += "&lt;";
      else if (c == '>') r += "&gt;";
      else if (c == '&') r += "&amp;";
      else r += c;
    }
    return r;
  }

  void axes(std::ostream& os) const {
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kRight - kLeft
       << "\" height=\"" << kBottom - kTop << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    for (int k = 0; k <= 5; ++k) {
      const double x = x0_ + (x1_ - x0_) * k / 5.0;
      const double y = y0_ + (y1_ - y0_) * k / 5.0;
      char bx[32], by[32];
      std::snprintf(bx, sizeof bx, "%.4g", x);
      std::snprintf(by, sizeof by, "%.4g", y);
      os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << kBottom << "\" x2=\"" << num(px(x))
         << "\" y2=\"" << kBottom + 5 << "\" stroke=\"#000000\"/>";
      os << "<text x=\"" << num(px(x)) << "\" y=\"" << kBottom + 18
         << "\" font-size=\"11\" text-anchor=\"middle\">" << bx << "</text>\n";
      os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py(y)) << "\" x2=\"" << kLeft
         << "\" y2=\"" << num(py(y)) << "\" stroke=\"#000000\"/>";
      os << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(y) + 4)
         << "\" font-size=\"11\" text-anchor=\"end\">" << by << "</text>\n";
    }
    os << "<text x=\"" << 0.5 * (kLeft + kRight) << "\" y=\"" << kHeight - 20
       << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(xl_) << "</text>\n";
    os << "<text x=\"16\" y=\"" << 0.5 * (kTop + kBottom)
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << 0.5 * (kTop + kBottom) << ")\">" << escape(yl_) << "</text>\n";
  }

  double x0_, x1_, y0_, y1_;
  std::string xl_, yl_;
  std::vector<std::string> body_;
};

}  // namespace burstlab
