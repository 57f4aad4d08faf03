#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "envelope.hpp"
#include "errors.hpp"
#include "time_grid.hpp"

namespace twolevel {

// One Fourier coefficient of an envelope at a given detuning.
struct SpectrumPoint {
    double detuning = 0.0;
    std::complex<double> amplitude;

    double magnitude() const { return std::abs(amplitude); }
};

struct Spectrum {
    std::vector<SpectrumPoint> points;
};

// Fourier spectrum F(delta) = (1/2pi) integral of exp(i delta t) f(t) dt
// over the window, evaluated by adaptive Gauss-Kronrod quadrature at each
// requested detuning.  Detunings must be finite and nondecreasing.  Throws
// numerical_error if the quadrature error estimate exceeds
// 1e-8 x peak |f| x window length (before the 1/2pi factor).
inline Spectrum spectrum(const Envelope& env, std::span<const double> detunings,
                         const TimeGrid& window) {
    if (!std::isfinite(window.t_start) || !std::isfinite(window.t_end) ||
        !(window.t_start < window.t_end))
        throw config_error("spectrum: window must satisfy t_start < t_end");
    if (detunings.empty())
        throw config_error("spectrum: at least one detuning value is required");
    for (std::size_t i = 0; i < detunings.size(); ++i) {
        if (!std::isfinite(detunings[i]))
            throw config_error("spectrum: detunings must be finite");
        if (i > 0 && detunings[i] < detunings[i - 1])
            throw config_error("spectrum: detunings must be nondecreasing");
    }

    double peak = 0.0;
    const int n_scan = 4097;
    const double h = window.length() / static_cast<double>(n_scan - 1);
    for (int k = 0; k < n_scan; ++k)
        peak = std::max(peak, std::abs(env(window.t_start + h * static_cast<double>(k))));
    const double target = 1e-8 * peak * window.length();

    constexpr double two_pi = 2.0 * std::numbers::pi;
    Spectrum result;
    result.points.reserve(detunings.size());
    for (const double delta : detunings) {
        double err_cos = 0.0, err_sin = 0.0, l1 = 0.0;
        const double part_cos = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            [&env, delta](double t) { return std::cos(delta * t) * env(t); },
            window.t_start, window.t_end, 15, 1e-10, &err_cos, &l1);
        const double part_sin = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            [&env, delta](double t) { return std::sin(delta * t) * env(t); },
            window.t_start, window.t_end, 15, 1e-10, &err_sin, &l1);
        if (err_cos > target || err_sin > target)
            throw numerical_error("spectrum: quadrature error estimate " +
                                  std::to_string(std::max(err_cos, err_sin)) +
                                  " exceeds tolerance " + std::to_string(target) +
                                  " at detuning " + std::to_string(delta));
        result.points.push_back(
            {delta, std::complex<double>(part_cos, part_sin) / two_pi});
    }
    return result;
}

// Pulse area recovered from the spectrum: 2pi Re F(0).  The detuning grid
// must contain delta = 0.  A significant imaginary part at delta = 0
// (relative to the spectrum's peak magnitude) is flagged; it indicates an
// asymmetric envelope whose area bookkeeping needs care.
struct SpectralArea {
    double area = 0.0;
    bool imaginary_flagged = false;
};

inline SpectralArea area_from_spectrum(const Spectrum& spec) {
    const SpectrumPoint* at_zero = nullptr;
    double peak_magnitude = 0.0;
    for (const auto& p : spec.points) {
        peak_magnitude = std::max(peak_magnitude, p.magnitude());
        if (std::abs(p.detuning) <= 1e-12)
            at_zero = &p;
    }
    if (at_zero == nullptr)
        throw config_error("area_from_spectrum: detuning grid does not include 0");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    SpectralArea result;
    result.area = two_pi * at_zero->amplitude.real();
    result.imaginary_flagged =
        std::abs(at_zero->amplitude.imag()) > 1e-8 * peak_magnitude;
    return result;
}

} // namespace twolevel
