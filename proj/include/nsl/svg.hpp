#pragma once

// Minimal static SVG plots (decorative output for the CLI --plot flag).
// Log-log or lin-log scatter/line charts with a frame and tick labels.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nsl/io.hpp"

namespace nsl::svg {

struct Series {
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool line = true;
};

struct Axes {
    bool logX = true, logY = true;
    std::string xlabel, ylabel, title;
};

inline std::string plot(const std::vector<Series>& series, const Axes& ax) {
    const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    auto tx = [&](double v) { return ax.logX ? std::log10(v) : v; };
    auto ty = [&](double v) { return ax.logY ? std::log10(v) : v; };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (ax.logX && !(s.x[i] > 0))
                continue;
            if (ax.logY && !(s.y[i] > 0))
                continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    if (!(xmax > xmin)) {
        xmax = xmin + 1;
    }
    if (!(ymax > ymin)) {
        ymax = ymin + 1;
    }
    const double padx = 0.05 * (xmax - xmin), pady = 0.05 * (ymax - ymin);
    xmin -= padx;
    xmax += padx;
    ymin -= pady;
    ymax += pady;
    auto X = [&](double v) { return L + (tx(v) - xmin) / (xmax - xmin) * (W - L - R); };
    auto Y = [&](double v) { return H - B - (ty(v) - ymin) / (ymax - ymin) * (H - T - B); };

    std::string s;
    s += "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string((int)W) + "' height='" +
         std::to_string((int)H) + "'>\n";
    s += "<rect width='100%' height='100%' fill='white'/>\n";
    s += "<rect x='" + std::to_string((int)L) + "' y='" + std::to_string((int)T) + "' width='" +
         std::to_string((int)(W - L - R)) + "' height='" + std::to_string((int)(H - T - B)) +
         "' fill='none' stroke='black'/>\n";
    s += "<text x='" + std::to_string((int)(W / 2)) + "' y='24' text-anchor='middle' font-size='16'>" +
         ax.title + "</text>\n";
    s += "<text x='" + std::to_string((int)(W / 2)) + "' y='" + std::to_string((int)(H - 12)) +
         "' text-anchor='middle' font-size='13'>" + ax.xlabel + "</text>\n";
    s += "<text x='18' y='" + std::to_string((int)(H / 2)) +
         "' text-anchor='middle' font-size='13' transform='rotate(-90 18 " +
         std::to_string((int)(H / 2)) + ")'>" + ax.ylabel + "</text>\n";

    // ticks at integer decades (log) or 5 evenly spaced (linear)
    auto tick_vals = [](double lo, double hi, bool logscale) {
        std::vector<double> v;
        if (logscale) {
            for (int d = (int)std::ceil(lo); d <= (int)std::floor(hi); ++d)
                v.push_back(d);
            if (v.empty())
                v.push_back(0.5 * (lo + hi));
        } else {
            for (int i = 0; i <= 4; ++i)
                v.push_back(lo + (hi - lo) * i / 4.0);
        }
        return v;
    };
    char buf[40];
    for (double vx : tick_vals(xmin, xmax, ax.logX)) {
        const double px = L + (vx - xmin) / (xmax - xmin) * (W - L - R);
        if (ax.logX)
            std::snprintf(buf, sizeof(buf), "1e%d", (int)vx);
        else
            std::snprintf(buf, sizeof(buf), "%.3g", vx);
        s += "<line x1='" + std::to_string(px) + "' y1='" + std::to_string(H - B) + "' x2='" +
             std::to_string(px) + "' y2='" + std::to_string(H - B + 5) + "' stroke='black'/>\n";
        s += "<text x='" + std::to_string(px) + "' y='" + std::to_string(H - B + 18) +
             "' text-anchor='middle' font-size='11'>" + buf + "</text>\n";
    }
    for (double vy : tick_vals(ymin, ymax, ax.logY)) {
        const double py = H - B - (vy - ymin) / (ymax - ymin) * (H - T - B);
        if (ax.logY)
            std::snprintf(buf, sizeof(buf), "1e%d", (int)vy);
        else
            std::snprintf(buf, sizeof(buf), "%.3g", vy);
        s += "<line x1='" + std::to_string(L - 5) + "' y1='" + std::to_string(py) + "' x2='" +
             std::to_string(L) + "' y2='" + std::to_string(py) + "' stroke='black'/>\n";
        s += "<text x='" + std::to_string(L - 8) + "' y='" + std::to_string(py + 4) +
             "' text-anchor='end' font-size='11'>" + buf + "</text>\n";
    }

    for (const auto& ser : series) {
        if (ser.line) {
            s += "<polyline fill='none' stroke='" + ser.color + "' stroke-width='1.5' points='";
            for (std::size_t i = 0; i < ser.x.size(); ++i)
                s += std::to_string(X(ser.x[i])) + "," + std::to_string(Y(ser.y[i])) + " ";
            s += "'/>\n";
        }
        for (std::size_t i = 0; i < ser.x.size(); ++i)
            s += "<circle cx='" + std::to_string(X(ser.x[i])) + "' cy='" + std::to_string(Y(ser.y[i])) +
                 "' r='2.5' fill='" + ser.color + "'/>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace nsl::svg
