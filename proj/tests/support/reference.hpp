#pragma once

// Cross-check integrator for the test suite: Runge-Kutta-Fehlberg 7(8)
// from boost.odeint at tight tolerances.  Deliberately independent of the
// library's own stepper (different method, different codebase, RHS written
// out by hand here) so that numerical expectations are confirmed by two
// separate routes.

#include <array>
#include <complex>

#include <boost/numeric/odeint.hpp>

#include "twolevel/envelope.hpp"
#include "twolevel/state.hpp"

namespace twolevel::testing {

inline AmplitudeState reference_final_amplitudes(const DriveProfile& profile,
                                                 double t_begin, double t_end,
                                                 AmplitudeState initial = ground_state(),
                                                 double tol = 1e-13) {
    namespace ode = boost::numeric::odeint;
    using state_type = std::array<double, 4>;

    state_type y{initial.c1.real(), initial.c1.imag(),
                 initial.c2.real(), initial.c2.imag()};
    auto rhs = [&profile](const state_type& s, state_type& dsdt, double t) {
        const double half_omega = 0.5 * profile.rabi(t);
        const double half_delta = 0.5 * profile.detuning(t);
        // i d/dt (c1, c2) = ((-half_delta, half_omega), (half_omega, half_delta)) (c1, c2)
        dsdt[0] = -half_delta * s[1] + half_omega * s[3];
        dsdt[1] = half_delta * s[0] - half_omega * s[2];
        dsdt[2] = half_omega * s[1] + half_delta * s[3];
        dsdt[3] = -half_omega * s[0] - half_delta * s[2];
    };
    ode::runge_kutta_fehlberg78<state_type> stepper;
    ode::integrate_adaptive(ode::make_controlled(tol, tol, stepper), rhs, y, t_begin,
                            t_end, (t_end - t_begin) * 1e-4);
    return {{y[0], y[1]}, {y[2], y[3]}};
}

inline BlochVector reference_final_bloch(const DriveProfile& profile, double t_begin,
                                         double t_end,
                                         BlochVector initial = BlochVector{},
                                         double tol = 1e-13) {
    namespace ode = boost::numeric::odeint;
    using state_type = std::array<double, 3>;

    state_type y{initial.u, initial.v, initial.w};
    auto rhs = [&profile](const state_type& s, state_type& dsdt, double t) {
        const double omega = profile.rabi(t);
        const double delta = profile.detuning(t);
        dsdt[0] = delta * s[1];
        dsdt[1] = omega * s[2] - delta * s[0];
        dsdt[2] = -omega * s[1];
    };
    ode::runge_kutta_fehlberg78<state_type> stepper;
    ode::integrate_adaptive(ode::make_controlled(tol, tol, stepper), rhs, y, t_begin,
                            t_end, (t_end - t_begin) * 1e-4);
    return {y[0], y[1], y[2]};
}

} // namespace twolevel::testing
