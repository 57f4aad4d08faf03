#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "envelope.hpp"
#include "errors.hpp"
#include "ode.hpp"
#include "state.hpp"
#include "time_grid.hpp"

namespace twolevel {

// Rotating-frame Hamiltonian in units of hbar/T:
//   H = (1/2) [ [-delta, omega], [omega, delta] ].
// Real and symmetric for the phase convention used here.
inline std::array<std::array<double, 2>, 2> rwa_hamiltonian(double omega, double delta) {
    return {{{-0.5 * delta, 0.5 * omega}, {0.5 * omega, 0.5 * delta}}};
}

namespace detail {

// The grid's rel_tol/abs_tol describe the accuracy of the returned
// trajectory.  Per-step error control only bounds local errors, so the
// stepper runs with a fixed margin below the requested tolerances to keep
// the accumulated (global) error at the requested scale even for strongly
// driven profiles.
inline constexpr double step_tol_margin = 20.0;

// Shared column fill: drive values, adiabatic energies, mixing angle and
// dark-state component for every output sample.
inline void fill_drive_columns(Trajectory& traj, const DriveProfile& profile,
                               const MixingAngleSeries& angle) {
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        auto& s = traj.samples[k];
        s.omega = profile.rabi(s.t);
        s.delta = profile.detuning(s.t);
        const auto [lower, upper] = adiabatic_energies(s.omega, s.delta);
        s.eps_minus = lower;
        s.eps_plus = upper;
        s.theta = angle.theta[k];
        s.a0 = dark_component(s.bloch(), s.theta);
    }
}

} // namespace detail

// Integrate the rotating-frame Schroedinger equation i dC/dt = H C for the
// amplitude pair C = (c1, c2).  This is the reference picture.
inline Trajectory propagate_amplitudes(const DriveProfile& profile, const TimeGrid& grid,
                                       const AmplitudeState& initial = ground_state()) {
    grid.validate();
    if (std::abs(norm_squared(initial) - 1.0) > 1e-12)
        throw config_error("propagate_amplitudes: initial state must be normalized "
                           "within 1e-12");

    const auto times = grid.sample_times();
    const auto angle = detail::mixing_angle_over(profile, times);

    Trajectory traj;
    traj.samples.resize(times.size());

    const auto rhs = [&profile](double t, const StateVec<4>& y, StateVec<4>& dydt) {
        const auto h = rwa_hamiltonian(profile.rabi(t), profile.detuning(t));
        // dC/dt = -i H C with C = (y0 + i y1, y2 + i y3) and real H.
        dydt[0] = h[0][0] * y[1] + h[0][1] * y[3];
        dydt[1] = -h[0][0] * y[0] - h[0][1] * y[2];
        dydt[2] = h[1][0] * y[1] + h[1][1] * y[3];
        dydt[3] = -h[1][0] * y[0] - h[1][1] * y[2];
    };

    StateVec<4> y0{initial.c1.real(), initial.c1.imag(),
                   initial.c2.real(), initial.c2.imag()};
    integrate_dop853<4>(rhs, y0, grid.t_start, grid.t_end,
                        grid.rel_tol / detail::step_tol_margin,
                        grid.abs_tol / detail::step_tol_margin,
                        times,
                        [&traj](std::size_t k, double t, const StateVec<4>& y) {
                            auto& s = traj.samples[k];
                            s.t = t;
                            const AmplitudeState state{{y[0], y[1]}, {y[2], y[3]}};
                            const BlochVector b = bloch_from_amplitudes(state);
                            s.u = b.u;
                            s.v = b.v;
                            s.w = b.w;
                            s.p1 = std::norm(state.c1);
                            s.p2 = std::norm(state.c2);
                        });

    detail::fill_drive_columns(traj, profile, angle);
    return traj;
}

// Integrate the torque equation dB/dt = B x Q with Q = (omega, 0, delta):
//   du/dt = delta v,  dv/dt = omega w - delta u,  dw/dt = -omega v.
// Equivalent to the amplitude picture under the mapping of
// bloch_from_amplitudes.
inline Trajectory propagate_bloch(const DriveProfile& profile, const TimeGrid& grid,
                                  const BlochVector& initial = BlochVector{}) {
    grid.validate();
    if (std::abs(norm(initial) - 1.0) > 1e-12)
        throw config_error("propagate_bloch: initial Bloch vector must be unit "
                           "length within 1e-12");

    const auto times = grid.sample_times();
    const auto angle = detail::mixing_angle_over(profile, times);

    Trajectory traj;
    traj.samples.resize(times.size());

    const auto rhs = [&profile](double t, const StateVec<3>& y, StateVec<3>& dydt) {
        const double omega = profile.rabi(t);
        const double delta = profile.detuning(t);
        dydt[0] = delta * y[1];
        dydt[1] = omega * y[2] - delta * y[0];
        dydt[2] = -omega * y[1];
    };

    StateVec<3> y0{initial.u, initial.v, initial.w};
    integrate_dop853<3>(rhs, y0, grid.t_start, grid.t_end,
                        grid.rel_tol / detail::step_tol_margin,
                        grid.abs_tol / detail::step_tol_margin,
                        times,
                        [&traj](std::size_t k, double t, const StateVec<3>& y) {
                            auto& s = traj.samples[k];
                            s.t = t;
                            s.u = y[0];
                            s.v = y[1];
                            s.w = y[2];
                            s.p1 = 0.5 * (1.0 - y[2]);
                            s.p2 = 0.5 * (1.0 + y[2]);
                        });

    detail::fill_drive_columns(traj, profile, angle);
    return traj;
}

// Largest componentwise (u, v, w) difference between two trajectories on
// the same grid; used to check amplitude/Bloch picture agreement.
inline double picture_residual(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("picture_residual: trajectories differ in length");
    double residual = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        residual = std::max(residual, std::abs(a.samples[k].u - b.samples[k].u));
        residual = std::max(residual, std::abs(a.samples[k].v - b.samples[k].v));
        residual = std::max(residual, std::abs(a.samples[k].w - b.samples[k].w));
    }
    return residual;
}

} // namespace twolevel
