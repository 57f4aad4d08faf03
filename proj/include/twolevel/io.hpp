#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "spectral.hpp"
#include "state.hpp"

namespace twolevel {

// Full-precision decimal formatting; values round-trip exactly through
// strtod.
inline std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out)
        throw io_error("write failed for '" + path.string() + "'");
}

} // namespace detail

inline constexpr const char* trajectory_csv_header =
    "t,omega,delta,eps_minus,eps_plus,theta,u,v,w,p1,p2,a0";

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const Trajectory& traj) {
    auto out = detail::open_for_write(path);
    out << trajectory_csv_header << '\n';
    for (const auto& s : traj.samples) {
        out << format_full(s.t) << ',' << format_full(s.omega) << ','
            << format_full(s.delta) << ',' << format_full(s.eps_minus) << ','
            << format_full(s.eps_plus) << ',' << format_full(s.theta) << ','
            << format_full(s.u) << ',' << format_full(s.v) << ','
            << format_full(s.w) << ',' << format_full(s.p1) << ','
            << format_full(s.p2) << ',' << format_full(s.a0) << '\n';
    }
    detail::finish_write(out, path);
}

inline constexpr const char* spectrum_csv_header =
    "detuning,re_amplitude,im_amplitude,magnitude";

inline void write_spectrum_csv(const std::filesystem::path& path,
                               const Spectrum& spec) {
    auto out = detail::open_for_write(path);
    out << spectrum_csv_header << '\n';
    for (const auto& p : spec.points) {
        out << format_full(p.detuning) << ',' << format_full(p.amplitude.real())
            << ',' << format_full(p.amplitude.imag()) << ','
            << format_full(p.magnitude()) << '\n';
    }
    detail::finish_write(out, path);
}

// Two-column CSV (time, value) for tabulated envelopes.  A single header
// line is permitted; any later non-numeric row is an error.  Times are in
// units of T.
inline std::pair<std::vector<double>, std::vector<double>>
read_envelope_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open '" + path.string() + "' for reading");

    std::vector<double> times, values;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = line;
        if (!trimmed.empty() && trimmed.back() == '\r')
            trimmed.pop_back();
        if (trimmed.find_first_not_of(" \t") == std::string::npos)
            continue;

        std::replace(trimmed.begin(), trimmed.end(), ',', ' ');
        std::istringstream row(trimmed);
        double t = 0.0, v = 0.0;
        if (row >> t >> v) {
            double extra;
            if (row >> extra)
                throw config_error("'" + path.string() + "' line " +
                                   std::to_string(line_no) +
                                   ": expected exactly two columns");
            times.push_back(t);
            values.push_back(v);
            first_data_seen = true;
        } else if (!first_data_seen && line_no == 1) {
            continue; // header line
        } else {
            throw config_error("'" + path.string() + "' line " +
                               std::to_string(line_no) + ": cannot parse two numbers");
        }
    }
    if (times.size() < 2)
        throw config_error("'" + path.string() +
                           "': need at least two (time, value) rows");
    return {std::move(times), std::move(values)};
}

} // namespace twolevel
