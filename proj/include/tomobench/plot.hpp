// Copyright 2026 The tomobench authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file plot.hpp
/// Tiny static SVG line charts, just enough for the figure outputs: linear
/// or log axes, decade ticks, polyline series with markers, dashed
/// reference lines and a legend.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace tomo::plot {

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    char marker = 'o'; // 'o' circle, 's' square, 0 none
    std::vector<std::pair<double, double>> points;
};

struct ReferenceLine {
    double y = 0.0;
    std::string label;
    std::string color = "#000000";
};

class LineChart {
  public:
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
    std::vector<ReferenceLine> reference_lines;

    std::string render() const {
        constexpr double width = 640.0;
        constexpr double height = 440.0;
        constexpr double left = 78.0;
        constexpr double right = 24.0;
        constexpr double top = 42.0;
        constexpr double bottom = 58.0;
        const double plot_w = width - left - right;
        const double plot_h = height - top - bottom;

        double x_min, x_max, y_min, y_max;
        data_range(x_min, x_max, y_min, y_max);

        const auto px = [&](double x) {
            const double t = axis_fraction(x, x_min, x_max, log_x);
            return left + t * plot_w;
        };
        const auto py = [&](double y) {
            const double t = axis_fraction(y, y_min, y_max, log_y);
            return top + (1.0 - t) * plot_h;
        };

        std::ostringstream svg;
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
            << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
            << height << "\">\n";
        svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        svg << "<text x=\"" << width / 2 << "\" y=\"24\" font-size=\"15\" "
               "text-anchor=\"middle\" font-family=\"sans-serif\">"
            << escape(title) << "</text>\n";

        // grid and ticks
        for (const double xv : ticks(x_min, x_max, log_x)) {
            const double x = px(xv);
            svg << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x
                << "\" y2=\"" << top + plot_h
                << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
            svg << "<text x=\"" << x << "\" y=\"" << top + plot_h + 18
                << "\" font-size=\"11\" text-anchor=\"middle\" "
                   "font-family=\"sans-serif\">"
                << tick_label(xv) << "</text>\n";
        }
        for (const double yv : ticks(y_min, y_max, log_y)) {
            const double y = py(yv);
            svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\""
                << left + plot_w << "\" y2=\"" << y
                << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
            svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
                << "\" font-size=\"11\" text-anchor=\"end\" "
                   "font-family=\"sans-serif\">"
                << tick_label(yv) << "</text>\n";
        }
        svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
            << plot_w << "\" height=\"" << plot_h
            << "\" fill=\"none\" stroke=\"#333333\"/>\n";

        for (const auto& ref : reference_lines) {
            if (!in_range(ref.y, y_min, y_max)) {
                continue;
            }
            const double y = py(ref.y);
            svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\""
                << left + plot_w << "\" y2=\"" << y << "\" stroke=\""
                << ref.color
                << "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
        }

        for (const auto& s : series) {
            std::ostringstream pts;
            for (const auto& [x, y] : s.points) {
                pts << px(x) << "," << py(y) << " ";
            }
            svg << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.8\" points=\"" << pts.str()
                << "\"/>\n";
            if (s.marker == 'o') {
                for (const auto& [x, y] : s.points) {
                    svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y)
                        << "\" r=\"3.4\" fill=\"" << s.color << "\"/>\n";
                }
            } else if (s.marker == 's') {
                for (const auto& [x, y] : s.points) {
                    svg << "<rect x=\"" << px(x) - 3.1 << "\" y=\""
                        << py(y) - 3.1 << "\" width=\"6.2\" height=\"6.2\" "
                        << "fill=\"" << s.color << "\"/>\n";
                }
            }
        }

        // legend
        double legend_y = top + 14.0;
        for (const auto& s : series) {
            svg << "<line x1=\"" << left + plot_w - 150 << "\" y1=\""
                << legend_y - 4 << "\" x2=\"" << left + plot_w - 122
                << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color
                << "\" stroke-width=\"2\"/>\n";
            svg << "<text x=\"" << left + plot_w - 116 << "\" y=\""
                << legend_y << "\" font-size=\"12\" "
                   "font-family=\"sans-serif\">"
                << escape(s.label) << "</text>\n";
            legend_y += 17.0;
        }
        for (const auto& ref : reference_lines) {
            svg << "<line x1=\"" << left + plot_w - 150 << "\" y1=\""
                << legend_y - 4 << "\" x2=\"" << left + plot_w - 122
                << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << ref.color
                << "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
            svg << "<text x=\"" << left + plot_w - 116 << "\" y=\""
                << legend_y << "\" font-size=\"12\" "
                   "font-family=\"sans-serif\">"
                << escape(ref.label) << "</text>\n";
            legend_y += 17.0;
        }

        svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 14
            << "\" font-size=\"13\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\">"
            << escape(x_label) << "</text>\n";
        svg << "<text x=\"20\" y=\"" << top + plot_h / 2
            << "\" font-size=\"13\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\" transform=\"rotate(-90 20 "
            << top + plot_h / 2 << ")\">" << escape(y_label) << "</text>\n";
        svg << "</svg>\n";
        return svg.str();
    }

  private:
    static bool in_range(double v, double lo, double hi) {
        return v >= lo && v <= hi;
    }

    static double axis_fraction(double v, double lo, double hi, bool log) {
        if (log) {
            v = std::log10(std::max(v, 1e-300));
            lo = std::log10(std::max(lo, 1e-300));
            hi = std::log10(std::max(hi, 1e-300));
        }
        return hi > lo ? (v - lo) / (hi - lo) : 0.5;
    }

    void data_range(double& x_min, double& x_max, double& y_min,
                    double& y_max) const {
        x_min = y_min = std::numeric_limits<double>::infinity();
        x_max = y_max = -std::numeric_limits<double>::infinity();
        for (const auto& s : series) {
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(x) || !std::isfinite(y)) {
                    continue;
                }
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        }
        for (const auto& ref : reference_lines) {
            if (std::isfinite(ref.y)) {
                y_min = std::min(y_min, ref.y);
                y_max = std::max(y_max, ref.y);
            }
        }
        if (!std::isfinite(x_min)) {
            x_min = 0.0;
            x_max = 1.0;
        }
        if (!std::isfinite(y_min)) {
            y_min = 0.0;
            y_max = 1.0;
        }
        pad(x_min, x_max, log_x);
        pad(y_min, y_max, log_y);
    }

    static void pad(double& lo, double& hi, bool log) {
        if (log) {
            lo = std::max(lo, 1e-300);
            hi = std::max(hi, lo);
            lo /= 1.3;
            hi *= 1.3;
            return;
        }
        const double span = hi - lo;
        const double margin = span > 0.0 ? 0.06 * span : std::max(1.0, hi);
        lo -= margin;
        hi += margin;
    }

    static std::vector<double> ticks(double lo, double hi, bool log) {
        std::vector<double> out;
        if (log) {
            const int e0 = static_cast<int>(std::ceil(std::log10(lo)));
            const int e1 = static_cast<int>(std::floor(std::log10(hi)));
            for (int e = e0; e <= e1; ++e) {
                out.push_back(std::pow(10.0, e));
            }
            if (out.size() < 2) { // narrow range, fall back to linear ticks
                out.clear();
            } else {
                return out;
            }
        }
        const double span = hi - lo;
        const double raw = span / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        if (raw / mag >= 5.0) {
            step = 5.0 * mag;
        } else if (raw / mag >= 2.0) {
            step = 2.0 * mag;
        }
        for (double v = std::ceil(lo / step) * step; v <= hi;
             v += step) {
            out.push_back(v);
        }
        return out;
    }

    static std::string tick_label(double v) {
        char buf[32];
        if (v != 0.0 && (std::abs(v) >= 1e4 || std::abs(v) < 1e-3)) {
            std::snprintf(buf, sizeof(buf), "%.0e", v);
        } else {
            std::snprintf(buf, sizeof(buf), "%g", v);
        }
        return buf;
    }

    static std::string escape(const std::string& text) {
        std::string out;
        out.reserve(text.size());
        for (const char c : text) {
            switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
            }
        }
        return out;
    }
};

} // namespace tomo::plot
