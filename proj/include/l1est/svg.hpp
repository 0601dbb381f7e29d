#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "l1est/error.hpp"
#include "l1est/runner.hpp"

namespace l1est::svg {

struct Series {
    std::string label;
    std::vector<double> xs, ys;
    bool dashed = false;
};

struct Chart {
    std::string title;
    std::string xlabel = "k";
    std::string ylabel;
    bool log_y = false;
    std::vector<Series> series;
    std::vector<double> markers; // vertical lines at these x values
};

namespace detail {

inline const char* color(std::size_t i)
{
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[i % 10];
}

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

constexpr double W = 760, H = 420, L = 70, R = 170, T = 40, B = 50;

} // namespace detail

/// Static line chart. Non-finite points (and non-positive ones on a log
/// axis) split the polyline.
inline std::string render(const Chart& c)
{
    using namespace detail;
    bool any = false;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    auto yval = [&](double y) { return c.log_y ? std::log10(y) : y; };
    auto usable = [&](double y) { return std::isfinite(y) && (!c.log_y || y > 0); };
    for (const auto& s : c.series) {
        if (s.xs.size() != s.ys.size()) throw ValidationError("series '" + s.label + "' has mismatched lengths");
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!usable(s.ys[i])) continue;
            any = true;
            x0 = std::min(x0, s.xs[i]);
            x1 = std::max(x1, s.xs[i]);
            y0 = std::min(y0, yval(s.ys[i]));
            y1 = std::max(y1, yval(s.ys[i]));
        }
    }
    if (!any) throw ValidationError("chart '" + c.title + "' has no data");
    if (x1 == x0) x1 = x0 + 1;
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return T + (1 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(c.title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(H - B + 16) << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
        os << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << num(py(yv)) << "\" y2=\"" << num(py(yv))
           << "\" stroke=\"#ddd\"/>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
           << (c.log_y ? "1e" + tick(yv) : tick(yv)) << "</text>\n";
    }
    os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << escape(c.xlabel) << "</text>\n";
    os << "<text x=\"16\" y=\"" << num(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << num(T + ph / 2)
       << ")\">" << escape(c.ylabel) << "</text>\n";
    for (double m : c.markers) {
        if (m < x0 || m > x1) continue;
        os << "<line x1=\"" << num(px(m)) << "\" x2=\"" << num(px(m)) << "\" y1=\"" << T << "\" y2=\"" << T + ph
           << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    }
    for (std::size_t si = 0; si < c.series.size(); ++si) {
        const auto& s = c.series[si];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty()) {
                os << "<polyline fill=\"none\" stroke=\"" << color(si) << "\" stroke-width=\"1.5\""
                   << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"" << pts << "\"/>\n";
            }
            pts.clear();
        };
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!usable(s.ys[i])) {
                flush();
                continue;
            }
            pts += (pts.empty() ? "" : " ") + num(px(s.xs[i])) + "," + num(py(yval(s.ys[i])));
        }
        flush();
        const double ly = T + 14 + 18 * si;
        os << "<line x1=\"" << L + pw + 10 << "\" x2=\"" << L + pw + 34 << "\" y1=\"" << ly << "\" y2=\"" << ly
           << "\" stroke=\"" << color(si) << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "")
           << "/>\n";
        os << "<text x=\"" << L + pw + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Bar chart of values over integer categories (log scale when requested).
inline std::string render_bars(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                               const std::vector<int>& cats, const std::vector<double>& values, bool log_y)
{
    using namespace detail;
    if (cats.empty() || cats.size() != values.size()) throw ValidationError("bar chart needs one value per category");
    auto yv = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
    double y0 = log_y ? 1e300 : 0.0, y1 = -1e300;
    for (double v : values) {
        if (log_y && !(v > 0)) continue;
        y0 = std::min(y0, yv(v));
        y1 = std::max(y1, yv(v));
    }
    if (y1 < y0) throw ValidationError("bar chart has no positive values for a log axis");
    if (log_y) y0 = std::floor(y0) - 1;
    if (y1 - y0 < 1e-12) y1 = y0 + 1;
    const double pw = W - L - R + 100, ph = H - T - B;
    auto py = [&](double y) { return T + (1 - (y - y0) / (y1 - y0)) * ph; };
    const double slot = pw / cats.size();
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">"
           << (log_y ? "1e" + tick(v) : tick(v)) << "</text>\n";
    }
    for (std::size_t i = 0; i < cats.size(); ++i) {
        const double x = L + slot * i + slot * 0.15;
        const double top = (log_y && !(values[i] > 0)) ? py(y0) : py(yv(values[i]));
        os << "<rect x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\"" << num(slot * 0.7) << "\" height=\""
           << num(py(y0) - top) << "\" fill=\"" << color(0) << "\"/>\n";
        os << "<text x=\"" << num(x + slot * 0.35) << "\" y=\"" << num(H - B + 16) << "\" text-anchor=\"middle\">"
           << cats[i] << "</text>\n";
    }
    os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
    os << "<text x=\"16\" y=\"" << num(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << num(T + ph / 2)
       << ")\">" << escape(ylabel) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

/// k values where the leader mode changes.
inline std::vector<double> mode_markers(const std::vector<int>& modes)
{
    std::vector<double> out;
    for (std::size_t k = 1; k < modes.size(); ++k) {
        if (modes[k] != modes[k - 1]) out.push_back(static_cast<double>(k));
    }
    return out;
}

struct NamedChart {
    std::string file;
    std::string content;
};

/// State trajectories (first coordinate of each node), fault signals on the
/// most active coordinate, and the per-step l2 error of every estimator.
inline std::vector<NamedChart> run_charts(const std::string& name, const RunResult& r)
{
    if (r.traces.empty() && r.distributed.empty()) throw ValidationError("no traces to plot");
    for (const auto& t : r.traces) {
        if (t.rows.empty()) throw ValidationError("cannot plot an empty trace");
    }
    std::vector<NamedChart> out;
    const auto markers = mode_markers(r.leader_modes);
    std::vector<double> ks;
    for (std::size_t k = 0; k < r.leader_modes.size(); ++k) ks.push_back(static_cast<double>(k));

    if (!r.traces.empty()) {
        const auto& base = r.traces.front().rows;
        const Eigen::Index q = base.front().x.size();
        const Eigen::Index shown = std::min<Eigen::Index>(q, 3);

        Chart states{name + ": states", "k", "state", false, {}, markers};
        for (Eigen::Index c = 0; c < shown; ++c) {
            Series s{"x_" + std::to_string(c) + " true", ks, {}, false};
            for (const auto& row : base) s.ys.push_back(row.x(c));
            states.series.push_back(std::move(s));
            for (const auto& t : r.traces) {
                Series e{"x_" + std::to_string(c) + " " + to_string(t.kind), ks, {}, true};
                for (const auto& row : t.rows) e.ys.push_back(row.xhat(c));
                states.series.push_back(std::move(e));
            }
        }
        out.push_back({"states.svg", render(states)});

        Eigen::Index busiest = 0;
        double best = -1;
        for (Eigen::Index c = 0; c < q; ++c) {
            double tot = 0;
            for (const auto& row : base) tot += std::abs(row.f(c));
            if (tot > best) {
                best = tot;
                busiest = c;
            }
        }
        Chart faults{name + ": fault on coordinate " + std::to_string(busiest), "k", "fault", false, {}, markers};
        Series truth{"f true", ks, {}, false};
        for (const auto& row : base) truth.ys.push_back(row.f(busiest));
        faults.series.push_back(std::move(truth));
        for (const auto& t : r.traces) {
            Series e{"f " + to_string(t.kind), ks, {}, true};
            for (const auto& row : t.rows) e.ys.push_back(row.fhat(busiest));
            faults.series.push_back(std::move(e));
        }
        out.push_back({"faults.svg", render(faults)});
    }

    Chart err{name + ": state error", "k", "||x - xhat||_2", true, {}, markers};
    for (const auto& t : r.traces) {
        Series e{to_string(t.kind), ks, {}, false};
        for (const auto& row : t.rows) e.ys.push_back(row.err_x_l2);
        err.series.push_back(std::move(e));
    }
    if (!r.distributed.empty()) {
        Series e{"distributed (node 1)", {}, {}, true};
        for (const auto& d : r.distributed) {
            if (d.node != 1) continue;
            e.xs.push_back(d.k);
            e.ys.push_back(d.err_x_l2);
        }
        err.series.push_back(std::move(e));
    }
    out.push_back({"error.svg", render(err)});
    return out;
}

/// Error-vs-k chart from a trace CSV (centralized or distributed).
inline std::string csv_error_chart(const std::string& title, const CsvTable& t)
{
    if (t.rows.empty()) throw ValidationError("trace has no rows");
    const int kc = t.column("k"), ec = t.column("err_x_l2"), ac = t.column("a1"), nc = t.column("node_id");
    if (kc < 0 || ec < 0) throw ValidationError("trace lacks k or err_x_l2 columns");
    Chart c{title, "k", "||x - xhat||_2", true, {}, {}};
    std::vector<Series> per_node;
    double prev_mode = -1;
    for (const auto& row : t.rows) {
        const int node = nc >= 0 ? static_cast<int>(row[nc]) : 1;
        if (node < 1) throw ValidationError("trace has a bad node id");
        if (static_cast<int>(per_node.size()) < node) per_node.resize(node);
        auto& s = per_node[node - 1];
        s.xs.push_back(row[kc]);
        s.ys.push_back(row[ec]);
        if (ac >= 0 && node == 1) {
            if (prev_mode >= 0 && row[ac] != prev_mode) c.markers.push_back(row[kc]);
            prev_mode = row[ac];
        }
    }
    for (std::size_t i = 0; i < per_node.size(); ++i) {
        per_node[i].label = nc >= 0 ? "node " + std::to_string(i + 1) : "error";
        c.series.push_back(std::move(per_node[i]));
    }
    return render(c);
}

inline std::string sweep_chart(const std::vector<SweepRow>& rows)
{
    std::vector<int> cats;
    std::vector<double> vals;
    for (const auto& r : rows) {
        cats.push_back(r.mf);
        vals.push_back(r.cumulative);
    }
    return render_bars("cumulative state error vs faulty agents", "M_f", "sum ||x - xhat||_2", cats, vals, true);
}

} // namespace l1est::svg
