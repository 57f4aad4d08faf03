#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "envelope.hpp"
#include "errors.hpp"
#include "state.hpp"
#include "time_grid.hpp"

namespace twolevel {

// Instantaneous eigenenergies of the rotating-frame Hamiltonian,
// (eps_minus, eps_plus) = -/+ (1/2) sqrt(omega^2 + delta^2), units hbar/T.
inline std::pair<double, double> adiabatic_energies(double omega, double delta) {
    const double half_split = 0.5 * std::hypot(omega, delta);
    return {-half_split, half_split};
}

// Generalized Rabi frequency sqrt(omega^2 + delta^2): the magnitude of the
// torque vector Q = (omega, 0, delta) and the adiabatic energy splitting.
inline double generalized_rabi(double omega, double delta) {
    return std::hypot(omega, delta);
}

// Mixing angle theta(t) with tan(theta) = omega/delta, continued across
// branch cuts.  Samples where the torque magnitude falls below
// 1e-12 x its peak are marked invalid and carry the nearest valid value.
struct MixingAngleSeries {
    std::vector<double> times;
    std::vector<double> theta;
    std::vector<char> valid;
    std::size_t valid_count = 0;
};

namespace detail {

// Non-throwing worker: valid_count == 0 means the drive is identically
// zero on the sample times (theta is left at 0 everywhere).
inline MixingAngleSeries mixing_angle_over(const DriveProfile& profile,
                                           std::span<const double> times) {
    const std::size_t n = times.size();
    MixingAngleSeries series;
    series.times.assign(times.begin(), times.end());
    series.theta.assign(n, 0.0);
    series.valid.assign(n, 0);

    std::vector<double> torque(n, 0.0);
    std::vector<double> raw(n, 0.0);
    double peak = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double omega = profile.rabi(times[k]);
        const double delta = profile.detuning(times[k]);
        torque[k] = generalized_rabi(omega, delta);
        raw[k] = std::atan2(omega, delta);
        peak = std::max(peak, torque[k]);
    }
    if (peak == 0.0)
        return series;

    const double floor = 1e-12 * peak;
    constexpr double pi = std::numbers::pi;

    // Unwrap modulo pi (the branch period of tan theta = omega/delta):
    // pick the branch nearest the previous valid sample, anchoring the
    // first valid sample inside [0, pi).
    bool have_prev = false;
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (torque[k] < floor)
            continue;
        double angle = raw[k];
        if (!have_prev) {
            while (angle < 0.0) angle += pi;
            while (angle >= pi) angle -= pi;
            have_prev = true;
        } else {
            angle += pi * std::round((prev - angle) / pi);
        }
        series.theta[k] = angle;
        series.valid[k] = 1;
        prev = angle;
        ++series.valid_count;
    }

    // Degenerate samples carry the nearest valid value (earlier sample on
    // ties), so the series stays defined on the full grid.
    std::vector<std::ptrdiff_t> prev_valid(n, -1), next_valid(n, -1);
    std::ptrdiff_t last = -1;
    for (std::size_t k = 0; k < n; ++k) {
        if (series.valid[k]) last = static_cast<std::ptrdiff_t>(k);
        prev_valid[k] = last;
    }
    last = -1;
    for (std::size_t k = n; k-- > 0;) {
        if (series.valid[k]) last = static_cast<std::ptrdiff_t>(k);
        next_valid[k] = last;
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (series.valid[k])
            continue;
        const std::ptrdiff_t before = prev_valid[k], after = next_valid[k];
        std::ptrdiff_t pick;
        if (before < 0)
            pick = after;
        else if (after < 0)
            pick = before;
        else
            pick = (static_cast<std::ptrdiff_t>(k) - before <=
                    after - static_cast<std::ptrdiff_t>(k))
                       ? before
                       : after;
        series.theta[k] = series.theta[static_cast<std::size_t>(pick)];
    }
    return series;
}

} // namespace detail

// Throws numerical_error when the drive is identically zero on the grid
// (no valid sample exists to anchor the angle).
inline MixingAngleSeries mixing_angle_series(const DriveProfile& profile,
                                             const TimeGrid& grid) {
    grid.validate();
    const auto times = grid.sample_times();
    auto series = detail::mixing_angle_over(profile, times);
    if (series.valid_count == 0)
        throw numerical_error(
            "mixing_angle_series: drive is identically zero on the grid; "
            "the mixing angle is undefined");
    return series;
}

// Component of the Bloch vector along the instantaneous dark direction
// (sin theta, 0, cos theta).
inline double dark_component(const BlochVector& b, double theta) {
    return b.u * std::sin(theta) + b.w * std::cos(theta);
}

// max |dtheta/dt| / generalized Rabi frequency over the grid; small values
// indicate adiabatic following.  dtheta/dt uses centered differences of the
// unwrapped series; samples below the degeneracy floor are excluded.
inline double adiabaticity_metric(const DriveProfile& profile, const TimeGrid& grid) {
    grid.validate();
    const auto times = grid.sample_times();
    const auto series = detail::mixing_angle_over(profile, times);
    if (series.valid_count == 0)
        throw numerical_error(
            "adiabaticity_metric: drive is identically zero on the grid");

    double metric = 0.0;
    for (std::size_t k = 1; k + 1 < series.times.size(); ++k) {
        if (!series.valid[k])
            continue;
        const double rate = std::abs(series.theta[k + 1] - series.theta[k - 1]) /
                            (series.times[k + 1] - series.times[k - 1]);
        const double torque = generalized_rabi(profile.rabi(series.times[k]),
                                               profile.detuning(series.times[k]));
        metric = std::max(metric, rate / torque);
    }
    return metric;
}

// Final-state verdict of a completed scenario.
enum class OutcomeKind { cpi, cpr, partial };

struct OutcomeClass {
    OutcomeKind kind = OutcomeKind::partial;
    double p2_final = 0.0;
};

inline const char* outcome_name(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::cpi: return "CPI";
        case OutcomeKind::cpr: return "CPR";
        case OutcomeKind::partial: return "partial";
    }
    return "unknown";
}

// Complete population inversion (P2 ~ 1), complete population return
// (P1 ~ 1), or partial transfer, judged at the final trajectory sample.
inline OutcomeClass classify_outcome(const Trajectory& traj, double tol_outcome = 1e-2) {
    if (traj.empty())
        throw std::invalid_argument("classify_outcome: empty trajectory");
    if (!(tol_outcome > 0.0) || !(tol_outcome < 0.5))
        throw config_error("classify_outcome: tol_outcome must lie in (0, 0.5)");
    const auto& last = traj.back();
    if (last.p2 >= 1.0 - tol_outcome)
        return {OutcomeKind::cpi, last.p2};
    if (last.p1 >= 1.0 - tol_outcome)
        return {OutcomeKind::cpr, last.p2};
    return {OutcomeKind::partial, last.p2};
}

// Outcome predicted from the envelope symmetries alone: opposite parities
// of rabi and detuning envelopes give inversion, equal parities give
// return, and any non-{even,odd} envelope leaves the outcome open.
enum class PredictedOutcome { cpi, cpr, undetermined };

inline const char* predicted_name(PredictedOutcome p) {
    switch (p) {
        case PredictedOutcome::cpi: return "CPI";
        case PredictedOutcome::cpr: return "CPR";
        case PredictedOutcome::undetermined: return "undetermined";
    }
    return "unknown";
}

inline PredictedOutcome predict_from_symmetry(SymmetryClass rabi_symmetry,
                                              SymmetryClass detuning_symmetry) {
    if (rabi_symmetry == SymmetryClass::neither ||
        detuning_symmetry == SymmetryClass::neither)
        return PredictedOutcome::undetermined;
    return (rabi_symmetry == detuning_symmetry) ? PredictedOutcome::cpr
                                                : PredictedOutcome::cpi;
}

} // namespace twolevel
