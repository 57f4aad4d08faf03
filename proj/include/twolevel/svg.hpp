#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "io.hpp"
#include "state.hpp"

namespace twolevel {

namespace detail_svg {

inline std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

// Affine map from data coordinates to pixel coordinates.
struct Axis {
    double data_lo = 0.0, data_hi = 1.0;
    double px_lo = 0.0, px_hi = 1.0;

    double operator()(double x) const {
        return px_lo + (x - data_lo) / (data_hi - data_lo) * (px_hi - px_lo);
    }
    bool contains(double x) const {
        return x >= std::min(data_lo, data_hi) && x <= std::max(data_lo, data_hi);
    }
};

inline std::string px(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v;
    return s.str();
}

inline std::string tick_label(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
}

inline void polyline(std::ostream& out, const std::vector<std::pair<double, double>>& pts,
                     const char* color, double width, const char* dash = nullptr) {
    out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << width << "\"";
    if (dash)
        out << " stroke-dasharray=\"" << dash << "\"";
    out << " points=\"";
    for (const auto& [x, y] : pts)
        out << px(x) << ',' << px(y) << ' ';
    out << "\"/>\n";
}

inline void line(std::ostream& out, double x1, double y1, double x2, double y2,
                 const char* color, double width, const char* dash = nullptr) {
    out << "  <line x1=\"" << px(x1) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(x2)
        << "\" y2=\"" << px(y2) << "\" stroke=\"" << color << "\" stroke-width=\""
        << width << "\"";
    if (dash)
        out << " stroke-dasharray=\"" << dash << "\"";
    out << "/>\n";
}

inline void text(std::ostream& out, double x, double y, const std::string& content,
                 const char* anchor = "start", int size = 13,
                 const char* extra = "") {
    out << "  <text x=\"" << px(x) << "\" y=\"" << px(y) << "\" text-anchor=\""
        << anchor << "\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\""
        << size << "\" " << extra << ">" << escape_xml(content) << "</text>\n";
}

inline void marker(std::ostream& out, double x, double y, const char* color,
                   bool filled) {
    out << "  <circle cx=\"" << px(x) << "\" cy=\"" << px(y)
        << "\" r=\"5\" stroke=\"" << color << "\" stroke-width=\"1.6\" fill=\""
        << (filled ? color : "#ffffff") << "\"/>\n";
}

} // namespace detail_svg

// Two stacked panels over shared time: the drive envelopes on top, the
// Bloch components below.
inline void emit_timeseries(const std::filesystem::path& path, const Trajectory& traj,
                            const std::string& title = "") {
    if (traj.empty())
        throw std::invalid_argument("emit_timeseries: empty trajectory");
    namespace sv = detail_svg;

    const double width = 760, height = 560;
    const double left = 72, right = width - 18;
    const sv::Axis time_axis{traj.front().t, traj.back().t, left, right};

    double drive_lo = 0.0, drive_hi = 0.0;
    for (const auto& s : traj.samples) {
        drive_lo = std::min({drive_lo, s.omega, s.delta});
        drive_hi = std::max({drive_hi, s.omega, s.delta});
    }
    if (drive_hi == drive_lo) {
        drive_lo -= 1.0;
        drive_hi += 1.0;
    }
    const double pad = 0.08 * (drive_hi - drive_lo);
    sv::Axis drive_axis{drive_lo - pad, drive_hi + pad, 248.0, 48.0};
    sv::Axis bloch_axis{-1.12, 1.12, 496.0, 296.0};

    auto out = detail::open_for_write(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
        sv::text(out, width / 2, 24, title, "middle", 15, "font-weight=\"bold\"");

    const struct {
        const sv::Axis& axis;
    } panels[2] = {{drive_axis}, {bloch_axis}};
    for (const auto& p : panels) {
        const double top = std::min(p.axis.px_lo, p.axis.px_hi);
        const double bottom = std::max(p.axis.px_lo, p.axis.px_hi);
        out << "  <rect x=\"" << sv::px(left) << "\" y=\"" << sv::px(top)
            << "\" width=\"" << sv::px(right - left) << "\" height=\""
            << sv::px(bottom - top) << "\" fill=\"none\" stroke=\"#444444\""
            << " stroke-width=\"1\"/>\n";
        if (p.axis.contains(0.0))
            sv::line(out, left, p.axis(0.0), right, p.axis(0.0), "#bbbbbb", 0.8, "3 4");
        if (time_axis.contains(0.0)) {
            const double x0 = time_axis(0.0);
            sv::line(out, x0, top, x0, bottom, "#dddddd", 0.8, "3 4");
        }
        sv::text(out, left - 6, p.axis(p.axis.data_lo) + 4, sv::tick_label(p.axis.data_lo),
                 "end", 11);
        sv::text(out, left - 6, p.axis(p.axis.data_hi) + 4, sv::tick_label(p.axis.data_hi),
                 "end", 11);
        if (p.axis.contains(0.0))
            sv::text(out, left - 6, p.axis(0.0) + 4, "0", "end", 11);
    }

    auto curve = [&](auto pick, const sv::Axis& axis) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(traj.size());
        for (const auto& s : traj.samples)
            pts.emplace_back(time_axis(s.t), axis(pick(s)));
        return pts;
    };
    sv::polyline(out, curve([](const TrajectorySample& s) { return s.omega; }, drive_axis),
                 "#1f77b4", 1.7);
    sv::polyline(out, curve([](const TrajectorySample& s) { return s.delta; }, drive_axis),
                 "#d62728", 1.7, "7 4");
    sv::polyline(out, curve([](const TrajectorySample& s) { return s.u; }, bloch_axis),
                 "#2ca02c", 1.6);
    sv::polyline(out, curve([](const TrajectorySample& s) { return s.v; }, bloch_axis),
                 "#9467bd", 1.6);
    sv::polyline(out, curve([](const TrajectorySample& s) { return s.w; }, bloch_axis),
                 "#ff7f0e", 1.8);

    sv::line(out, right - 150, 60, right - 126, 60, "#1f77b4", 1.7);
    sv::text(out, right - 120, 64, "Ω (rabi)", "start", 12);
    sv::line(out, right - 150, 78, right - 126, 78, "#d62728", 1.7, "7 4");
    sv::text(out, right - 120, 82, "Δ (detuning)", "start", 12);
    sv::line(out, right - 150, 308, right - 126, 308, "#2ca02c", 1.6);
    sv::text(out, right - 120, 312, "u", "start", 12);
    sv::line(out, right - 150, 326, right - 126, 326, "#9467bd", 1.6);
    sv::text(out, right - 120, 330, "v", "start", 12);
    sv::line(out, right - 150, 344, right - 126, 344, "#ff7f0e", 1.8);
    sv::text(out, right - 120, 348, "w", "start", 12);

    sv::text(out, 20, 148, "drive  [1/T]", "middle", 12,
             "transform=\"rotate(-90 20 148)\"");
    sv::text(out, 20, 396, "Bloch components", "middle", 12,
             "transform=\"rotate(-90 20 396)\"");
    for (double t : {traj.front().t, 0.0, traj.back().t}) {
        if (!time_axis.contains(t))
            continue;
        sv::text(out, time_axis(t), 514, sv::tick_label(t), "middle", 11);
    }
    sv::text(out, (left + right) / 2, 540, "t / T", "middle", 13);

    out << "</svg>\n";
    detail::finish_write(out, path);
}

// Projection of the trajectory onto the (u, w) plane together with the
// normalized torque curve (omega, delta)/peak.  The initial Bloch vector
// is drawn hollow, the final one filled.  With an identically-zero drive
// the torque curve is omitted and the file stays valid.
inline void emit_bloch_plane(const std::filesystem::path& path, const Trajectory& traj,
                             const std::string& title = "") {
    if (traj.empty())
        throw std::invalid_argument("emit_bloch_plane: empty trajectory");
    namespace sv = detail_svg;

    const double size = 560;
    const sv::Axis x_axis{-1.15, 1.15, 64.0, 504.0};
    const sv::Axis y_axis{-1.15, 1.15, 500.0, 60.0};

    double torque_peak = 0.0;
    for (const auto& s : traj.samples)
        torque_peak = std::max(torque_peak, std::hypot(s.omega, s.delta));

    auto out = detail::open_for_write(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
        << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << ' ' << size
        << "\">\n";
    out << "  <rect width=\"" << size << "\" height=\"" << size
        << "\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
        sv::text(out, size / 2, 28, title, "middle", 15, "font-weight=\"bold\"");

    sv::line(out, x_axis(-1.15), y_axis(0.0), x_axis(1.15), y_axis(0.0), "#999999", 1.0);
    sv::line(out, x_axis(0.0), y_axis(-1.15), x_axis(0.0), y_axis(1.15), "#999999", 1.0);
    out << "  <circle cx=\"" << sv::px(x_axis(0.0)) << "\" cy=\"" << sv::px(y_axis(0.0))
        << "\" r=\"" << sv::px(x_axis(1.0) - x_axis(0.0))
        << "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\""
        << " stroke-dasharray=\"4 4\"/>\n";
    for (double v : {-1.0, 1.0}) {
        sv::line(out, x_axis(v), y_axis(0.0) - 4, x_axis(v), y_axis(0.0) + 4, "#999999", 1.0);
        sv::line(out, x_axis(0.0) - 4, y_axis(v), x_axis(0.0) + 4, y_axis(v), "#999999", 1.0);
        sv::text(out, x_axis(v), y_axis(0.0) + 18, sv::tick_label(v), "middle", 11);
        sv::text(out, x_axis(0.0) - 8, y_axis(v) + 4, sv::tick_label(v), "end", 11);
    }
    sv::text(out, x_axis(1.15) + 4, y_axis(0.0) + 4, "u", "start", 14);
    sv::text(out, x_axis(0.0), y_axis(1.15) - 8, "w", "middle", 14);

    if (torque_peak > 0.0) {
        std::vector<std::pair<double, double>> torque;
        torque.reserve(traj.size());
        for (const auto& s : traj.samples)
            torque.emplace_back(x_axis(s.omega / torque_peak), y_axis(s.delta / torque_peak));
        sv::polyline(out, torque, "#1f77b4", 1.6);
    }
    std::vector<std::pair<double, double>> bloch;
    bloch.reserve(traj.size());
    for (const auto& s : traj.samples)
        bloch.emplace_back(x_axis(s.u), y_axis(s.w));
    sv::polyline(out, bloch, "#d62728", 1.6, "6 3");

    sv::marker(out, x_axis(traj.front().u), y_axis(traj.front().w), "#d62728", false);
    sv::marker(out, x_axis(traj.back().u), y_axis(traj.back().w), "#d62728", true);

    sv::line(out, 70, 530, 94, 530, "#d62728", 1.6, "6 3");
    sv::text(out, 100, 534, "Bloch (u, w): start hollow, end filled", "start", 12);
    if (torque_peak > 0.0) {
        sv::line(out, 330, 530, 354, 530, "#1f77b4", 1.6);
        sv::text(out, 360, 534, "torque (Ω, Δ) / peak", "start", 12);
    }

    out << "</svg>\n";
    detail::finish_write(out, path);
}

} // namespace twolevel
