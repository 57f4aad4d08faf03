#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace twolevel {

// Output grid and accuracy settings for one propagation window.
// Times are measured in units of the pulse duration scale T.
// The integrator steps adaptively; n_output only controls where the
// trajectory is sampled (via dense output), not the step size.
struct TimeGrid {
    double t_start = -10.0;
    double t_end = 10.0;
    int n_output = 2001;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;

    double length() const { return t_end - t_start; }

    void validate() const {
        if (!std::isfinite(t_start) || !std::isfinite(t_end))
            throw config_error("time grid: t_start and t_end must be finite");
        if (!(t_start < t_end))
            throw config_error("time grid: t_start must be strictly less than t_end (got [" +
                               std::to_string(t_start) + ", " + std::to_string(t_end) + "])");
        if (n_output < 2)
            throw config_error("time grid: n_output must be at least 2");
        if (!(rel_tol > 0.0) || !(rel_tol <= 1e-3))
            throw config_error("time grid: rel_tol must lie in (0, 1e-3]");
        if (!(abs_tol > 0.0) || !(abs_tol <= 1e-3))
            throw config_error("time grid: abs_tol must lie in (0, 1e-3]");
    }

    // Evenly spaced sample times with exact endpoints.
    std::vector<double> sample_times() const {
        std::vector<double> t(static_cast<std::size_t>(n_output));
        const double h = length() / static_cast<double>(n_output - 1);
        for (int k = 0; k < n_output; ++k)
            t[static_cast<std::size_t>(k)] = t_start + h * static_cast<double>(k);
        t.front() = t_start;
        t.back() = t_end;
        return t;
    }
};

} // namespace twolevel
