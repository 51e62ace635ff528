#include "cppo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cppo {

namespace {

const char* kHeader =
    "iter,env_steps,ep_return_mean,ep_return_std,ep_cost_mean,mode,fwd_kl,solver_iters,lambda";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    double map(double v, double px_lo, double px_hi) const {
        if (hi <= lo) return px_lo;
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

std::string render_plot(const std::vector<double>& x, const std::vector<double>& mean,
                        const std::vector<double>& sd, const std::string& ylabel,
                        const double* hline) {
    const double w = 640, h = 400, ml = 70, mr = 20, mt = 30, mb = 50;
    Axis ax, ay;
    ax.lo = x.front();
    ax.hi = x.back() > x.front() ? x.back() : x.front() + 1;
    double ylo = 1e300, yhi = -1e300;
    for (size_t i = 0; i < mean.size(); ++i) {
        ylo = std::min(ylo, mean[i] - sd[i]);
        yhi = std::max(yhi, mean[i] + sd[i]);
    }
    if (hline) {
        ylo = std::min(ylo, *hline);
        yhi = std::max(yhi, *hline);
    }
    double pad = 0.05 * std::max(yhi - ylo, 1e-9);
    ay.lo = ylo - pad;
    ay.hi = yhi + pad;

    auto px = [&](double v) { return ax.map(v, ml, w - mr); };
    auto py = [&](double v) { return ay.map(v, h - mb, mt); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n";
    svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";

    // std band
    std::string band = "<polygon fill=\"#1f77b4\" fill-opacity=\"0.2\" points=\"";
    for (size_t i = 0; i < x.size(); ++i)
        band += num(px(x[i])) + "," + num(py(mean[i] + sd[i])) + " ";
    for (size_t i = x.size(); i-- > 0;)
        band += num(px(x[i])) + "," + num(py(mean[i] - sd[i])) + " ";
    band += "\"/>\n";
    svg += band;

    // mean curve
    std::string line = "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < x.size(); ++i) line += num(px(x[i])) + "," + num(py(mean[i])) + " ";
    line += "\"/>\n";
    svg += line;

    if (hline) {
        svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(py(*hline)) + "\" x2=\"" + num(w - mr) +
               "\" y2=\"" + num(py(*hline)) +
               "\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
    }

    // frame and labels
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(h - mb) + "\" x2=\"" + num(w - mr) +
           "\" y2=\"" + num(h - mb) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
           num(h - mb) + "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double xv = ax.lo + (ax.hi - ax.lo) * k / 4.0;
        double yv = ay.lo + (ay.hi - ay.lo) * k / 4.0;
        svg += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(h - mb + 18) +
               "\" font-size=\"11\" text-anchor=\"middle\">" + num(xv) + "</text>\n";
        svg += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(py(yv) + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + num(yv) + "</text>\n";
    }
    svg += "<text x=\"" + num((ml + w - mr) / 2) + "\" y=\"" + num(h - 10) +
           "\" font-size=\"13\" text-anchor=\"middle\">environment steps</text>\n";
    svg += "<text x=\"16\" y=\"" + num((mt + h - mb) / 2) +
           "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           num((mt + h - mb) / 2) + ")\">" + ylabel + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace

MetricsTable parse_metrics_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw std::invalid_argument("metrics: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw std::invalid_argument("metrics: mismatched columns, expected '" + std::string(kHeader) +
                                    "'");
    MetricsTable t;
    int line_no = 1;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != 9)
            throw std::invalid_argument("metrics: row " + std::to_string(line_no) +
                                        " has wrong column count");
        t.env_steps.push_back(std::stoll(cells[1]));
        t.ep_return_mean.push_back(std::stod(cells[2]));
        t.ep_cost_mean.push_back(std::stod(cells[4]));
    }
    if (t.env_steps.empty()) throw std::invalid_argument("metrics: no data rows");
    return t;
}

PlotFiles render_learning_curves(const std::vector<MetricsTable>& runs, double cost_limit) {
    if (runs.empty()) throw std::invalid_argument("plot: no runs");
    size_t n = runs.front().env_steps.size();
    for (const auto& r : runs) n = std::min(n, r.env_steps.size());

    std::vector<double> x(n), ret_mean(n), ret_sd(n), cost_mean(n), cost_sd(n);
    const double m = static_cast<double>(runs.size());
    for (size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(runs.front().env_steps[i]);
        double rm = 0.0, cm = 0.0;
        for (const auto& r : runs) {
            rm += r.ep_return_mean[i];
            cm += r.ep_cost_mean[i];
        }
        rm /= m;
        cm /= m;
        double rv = 0.0, cv = 0.0;
        for (const auto& r : runs) {
            rv += (r.ep_return_mean[i] - rm) * (r.ep_return_mean[i] - rm);
            cv += (r.ep_cost_mean[i] - cm) * (r.ep_cost_mean[i] - cm);
        }
        ret_mean[i] = rm;
        cost_mean[i] = cm;
        ret_sd[i] = runs.size() > 1 ? std::sqrt(rv / (m - 1)) : 0.0;
        cost_sd[i] = runs.size() > 1 ? std::sqrt(cv / (m - 1)) : 0.0;
    }

    PlotFiles out;
    out.return_svg = render_plot(x, ret_mean, ret_sd, "episodic return", nullptr);
    out.cost_svg = render_plot(x, cost_mean, cost_sd, "episodic cost", &cost_limit);
    return out;
}

}  // namespace cppo
