#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "detail/dop853_coefficients.hpp"
#include "errors.hpp"

namespace twolevel {

template <std::size_t N>
using StateVec = std::array<double, N>;

// Adaptive Dormand-Prince 8(5,3) integrator (DOP853) with 7th-order
// continuous output.  The solution advances with error-controlled steps;
// requested output times are filled from the interpolant of each accepted
// step, so output density never influences the step size.  The high order
// keeps the accumulated global error close to the per-step tolerance even
// for strongly driven problems.
//
// rhs(t, y, dydt) evaluates the derivative; observe(i, t, y) receives the
// solution at output_times[i].  output_times must be nondecreasing and lie
// within [t_begin, t_end].  Throws numerical_error on step-size underflow.
template <std::size_t N, class Rhs, class Observer>
void integrate_dop853(Rhs&& rhs, StateVec<N> y, double t_begin, double t_end,
                      double rel_tol, double abs_tol,
                      std::span<const double> output_times, Observer&& observe) {
    static_assert(N > 0);
    if (!(t_end > t_begin))
        throw std::invalid_argument("integrate_dop853: t_end must exceed t_begin");

    namespace tab = detail::dop853;

    const double span = t_end - t_begin;
    const double h_max = span / 100.0;
    const double t_eps = 1e-14 * std::max({1.0, std::abs(t_begin), std::abs(t_end)});

    std::array<StateVec<N>, 16> k;
    StateVec<N> y_stage, y_new;

    double t = t_begin;
    double h = std::min(h_max, span * 1e-4);
    rhs(t, y, k[0]);

    std::size_t out = 0;
    const std::size_t n_out = output_times.size();
    while (out < n_out && output_times[out] <= t_begin + t_eps) {
        observe(out, output_times[out], y);
        ++out;
    }

    bool last_rejected = false;
    std::size_t steps = 0;
    constexpr std::size_t max_steps = 20'000'000;

    while (out < n_out && t < t_end - t_eps) {
        if (++steps > max_steps)
            throw numerical_error("integrate_dop853: step limit exceeded at t = " +
                                  std::to_string(t));
        bool clipped = false;
        if (t + h >= t_end) {
            h = t_end - t;
            clipped = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw numerical_error("integrate_dop853: step size underflow at t = " +
                                  std::to_string(t));

        for (int s = 1; s < tab::n_stages; ++s) {
            for (std::size_t i = 0; i < N; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j)
                    acc += tab::a[s][j] * k[static_cast<std::size_t>(j)][i];
                y_stage[i] = y[i] + h * acc;
            }
            rhs(t + tab::c[s] * h, y_stage, k[static_cast<std::size_t>(s)]);
        }
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int j = 0; j < tab::n_stages; ++j)
                acc += tab::b[j] * k[static_cast<std::size_t>(j)][i];
            y_new[i] = y[i] + h * acc;
        }
        rhs(t + h, y_new, k[12]);

        // Hairer's combined 5th/3rd-order error estimate.
        double err5_sq = 0.0, err3_sq = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double scale =
                abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            double e5 = 0.0, e3 = 0.0;
            for (int j = 0; j < 13; ++j) {
                e5 += tab::e5[j] * k[static_cast<std::size_t>(j)][i];
                e3 += tab::e3[j] * k[static_cast<std::size_t>(j)][i];
            }
            err5_sq += (e5 / scale) * (e5 / scale);
            err3_sq += (e3 / scale) * (e3 / scale);
        }
        double err = 0.0;
        if (err5_sq != 0.0 || err3_sq != 0.0)
            err = h * err5_sq /
                  std::sqrt((err5_sq + 0.01 * err3_sq) * static_cast<double>(N));

        if (err <= 1.0) {
            const double t_new = clipped ? t_end : t + h;
            if (out < n_out && output_times[out] <= t_new + t_eps) {
                // Three extra stages complete the continuous extension.
                for (int s = 13; s < tab::n_stages_extended; ++s) {
                    for (std::size_t i = 0; i < N; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < s; ++j)
                            acc += tab::a[s][j] * k[static_cast<std::size_t>(j)][i];
                        y_stage[i] = y[i] + h * acc;
                    }
                    rhs(t + tab::c[s] * h, y_stage, k[static_cast<std::size_t>(s)]);
                }
                std::array<StateVec<N>, 7> f;
                for (std::size_t i = 0; i < N; ++i) {
                    const double dy = y_new[i] - y[i];
                    f[0][i] = dy;
                    f[1][i] = h * k[0][i] - dy;
                    f[2][i] = 2.0 * dy - h * (k[12][i] + k[0][i]);
                }
                for (int r = 0; r < 4; ++r)
                    for (std::size_t i = 0; i < N; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < tab::n_stages_extended; ++j)
                            acc += tab::d[r][j] * k[static_cast<std::size_t>(j)][i];
                        f[static_cast<std::size_t>(r) + 3][i] = h * acc;
                    }
                StateVec<N> y_out;
                while (out < n_out && output_times[out] <= t_new + t_eps) {
                    double x = (output_times[out] - t) / h;
                    x = std::min(1.0, std::max(0.0, x));
                    const double omx = 1.0 - x;
                    for (std::size_t i = 0; i < N; ++i) {
                        double acc = f[5][i] + x * f[6][i];
                        acc = f[4][i] + omx * acc;
                        acc = f[3][i] + x * acc;
                        acc = f[2][i] + omx * acc;
                        acc = f[1][i] + x * acc;
                        acc = f[0][i] + omx * acc;
                        y_out[i] = y[i] + x * acc;
                    }
                    observe(out, output_times[out], y_out);
                    ++out;
                }
            }
            y = y_new;
            k[0] = k[12];
            t = t_new;
            double factor =
                (err == 0.0) ? 10.0 : std::min(10.0, std::max(0.2, 0.9 * std::pow(err, -0.125)));
            if (last_rejected)
                factor = std::min(1.0, factor);
            h = std::min(h_max, h * factor);
            last_rejected = false;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.125));
            last_rejected = true;
        }
    }
}

} // namespace twolevel
