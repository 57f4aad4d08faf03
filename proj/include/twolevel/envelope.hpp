#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "time_grid.hpp"

namespace twolevel {

inline double sech(double x) { return 1.0 / std::cosh(x); }

enum class EnvelopeFamily {
    zero,
    constant,
    gaussian,
    odd_gaussian,
    sech_pair_even,
    sech_pair_odd,
    recombined,
    tabulated,
    scaled,
    negated,
};

inline const char* family_name(EnvelopeFamily f) {
    switch (f) {
        case EnvelopeFamily::zero: return "zero";
        case EnvelopeFamily::constant: return "constant";
        case EnvelopeFamily::gaussian: return "gaussian";
        case EnvelopeFamily::odd_gaussian: return "odd_gaussian";
        case EnvelopeFamily::sech_pair_even: return "sech_pair_even";
        case EnvelopeFamily::sech_pair_odd: return "sech_pair_odd";
        case EnvelopeFamily::recombined: return "recombined";
        case EnvelopeFamily::tabulated: return "tabulated";
        case EnvelopeFamily::scaled: return "scaled";
        case EnvelopeFamily::negated: return "negated";
    }
    return "unknown";
}

// Immutable pulse envelope, evaluated in units of 1/T over times in units
// of T.  Composite families (recombined, scaled, negated) hold a child
// envelope; copying an Envelope is cheap (shared immutable tree).
class Envelope {
    struct Node {
        EnvelopeFamily family = EnvelopeFamily::zero;
        double amplitude = 0.0;   // constant, gaussian, odd_gaussian, sech pairs
        double width_scale = 1.0; // gaussian, odd_gaussian
        double delay = 0.0;       // sech pairs, recombined
        double factor = 1.0;      // scaled
        std::shared_ptr<const Node> child; // recombined / scaled / negated
        // tabulated: natural cubic spline through (knot_t, knot_value),
        // knot_m holds the spline's second derivatives.
        std::vector<double> knot_t, knot_value, knot_m;
    };

    std::shared_ptr<const Node> node_;

    explicit Envelope(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static void require_finite(double x, const char* what) {
        if (!std::isfinite(x))
            throw config_error(std::string("envelope: ") + what + " must be finite");
    }

    static double eval_node(const Node& n, double t) {
        switch (n.family) {
            case EnvelopeFamily::zero:
                return 0.0;
            case EnvelopeFamily::constant:
                return n.amplitude;
            case EnvelopeFamily::gaussian: {
                const double x = t / n.width_scale;
                return n.amplitude * std::exp(-x * x);
            }
            case EnvelopeFamily::odd_gaussian: {
                const double x = t / n.width_scale;
                return n.amplitude * t * std::exp(-x * x);
            }
            case EnvelopeFamily::sech_pair_even:
                return n.amplitude * t * t * (sech(t + n.delay) + sech(t - n.delay));
            case EnvelopeFamily::sech_pair_odd:
                return n.amplitude * t * t * (sech(t - n.delay) - sech(t + n.delay));
            case EnvelopeFamily::recombined:
                return eval_node(*n.child, t - n.delay) - eval_node(*n.child, t);
            case EnvelopeFamily::scaled:
                return n.factor * eval_node(*n.child, t);
            case EnvelopeFamily::negated:
                return -eval_node(*n.child, t);
            case EnvelopeFamily::tabulated:
                return eval_spline(n, t);
        }
        return 0.0;
    }

    static double eval_spline(const Node& n, double t) {
        const auto& xs = n.knot_t;
        if (t < xs.front() || t > xs.back())
            return 0.0;
        // interval [lo, hi] with xs[lo] <= t <= xs[hi]
        auto it = std::upper_bound(xs.begin(), xs.end(), t);
        std::size_t hi = (it == xs.end()) ? xs.size() - 1
                                          : static_cast<std::size_t>(it - xs.begin());
        if (hi == 0) hi = 1;
        const std::size_t lo = hi - 1;
        const double h = xs[hi] - xs[lo];
        const double a = (xs[hi] - t) / h;
        const double b = (t - xs[lo]) / h;
        return a * n.knot_value[lo] + b * n.knot_value[hi] +
               ((a * a * a - a) * n.knot_m[lo] + (b * b * b - b) * n.knot_m[hi]) *
                   (h * h) / 6.0;
    }

    // Natural cubic spline second derivatives (tridiagonal solve).
    static std::vector<double> spline_second_derivatives(const std::vector<double>& x,
                                                         const std::vector<double>& y) {
        const std::size_t n = x.size();
        std::vector<double> m(n, 0.0), u(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
            const double p = sig * m[i - 1] + 2.0;
            m[i] = (sig - 1.0) / p;
            const double slope_hi = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
            const double slope_lo = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
            u[i] = (6.0 * (slope_hi - slope_lo) / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
        }
        m[n - 1] = 0.0;
        for (std::size_t k = n - 1; k-- > 1;)
            m[k] = m[k] * m[k + 1] + u[k];
        m[0] = 0.0;
        return m;
    }

public:
    Envelope() : node_(std::make_shared<Node>()) {}

    static Envelope zero() { return Envelope{}; }

    static Envelope constant(double amplitude) {
        require_finite(amplitude, "amplitude");
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::constant;
        n->amplitude = amplitude;
        return Envelope{std::move(n)};
    }

    static Envelope gaussian(double amplitude, double width_scale) {
        require_finite(amplitude, "amplitude");
        require_finite(width_scale, "width_scale");
        if (!(width_scale > 0.0))
            throw config_error("envelope: gaussian width_scale must be positive");
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::gaussian;
        n->amplitude = amplitude;
        n->width_scale = width_scale;
        return Envelope{std::move(n)};
    }

    static Envelope odd_gaussian(double amplitude, double width_scale) {
        require_finite(amplitude, "amplitude");
        require_finite(width_scale, "width_scale");
        if (!(width_scale > 0.0))
            throw config_error("envelope: odd_gaussian width_scale must be positive");
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::odd_gaussian;
        n->amplitude = amplitude;
        n->width_scale = width_scale;
        return Envelope{std::move(n)};
    }

    static Envelope sech_pair_even(double amplitude, double delay) {
        require_finite(amplitude, "amplitude");
        require_finite(delay, "delay");
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::sech_pair_even;
        n->amplitude = amplitude;
        n->delay = delay;
        return Envelope{std::move(n)};
    }

    static Envelope sech_pair_odd(double amplitude, double delay) {
        require_finite(amplitude, "amplitude");
        require_finite(delay, "delay");
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::sech_pair_odd;
        n->amplitude = amplitude;
        n->delay = delay;
        return Envelope{std::move(n)};
    }

    static Envelope recombined(const Envelope& base, double delay) {
        require_finite(delay, "delay");
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::recombined;
        n->delay = delay;
        n->child = base.node_;
        return Envelope{std::move(n)};
    }

    static Envelope scaled(const Envelope& inner, double factor) {
        require_finite(factor, "factor");
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::scaled;
        n->factor = factor;
        n->child = inner.node_;
        return Envelope{std::move(n)};
    }

    static Envelope negated(const Envelope& inner) {
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::negated;
        n->child = inner.node_;
        return Envelope{std::move(n)};
    }

    // Cubic-spline interpolation through (times, values); zero outside the
    // sampled range.  Times must be strictly increasing, at least two points.
    static Envelope tabulated(std::vector<double> times, std::vector<double> values) {
        if (times.size() != values.size())
            throw config_error("envelope: tabulated times/values length mismatch");
        if (times.size() < 2)
            throw config_error("envelope: tabulated needs at least two samples");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
                throw config_error("envelope: tabulated samples must be finite");
            if (i > 0 && !(times[i] > times[i - 1]))
                throw config_error("envelope: tabulated times must be strictly increasing");
        }
        auto n = std::make_shared<Node>();
        n->family = EnvelopeFamily::tabulated;
        n->knot_m = spline_second_derivatives(times, values);
        n->knot_t = std::move(times);
        n->knot_value = std::move(values);
        return Envelope{std::move(n)};
    }

    double operator()(double t) const { return eval_node(*node_, t); }

    EnvelopeFamily family() const { return node_->family; }

    double amplitude() const { return node_->amplitude; }
    double width_scale() const { return node_->width_scale; }
    double delay() const { return node_->delay; }
    double factor() const { return node_->factor; }

    bool has_inner() const { return node_->child != nullptr; }

    Envelope inner() const {
        if (!node_->child)
            throw std::logic_error("envelope: no inner envelope for this family");
        return Envelope{node_->child};
    }

    const std::vector<double>& sample_times() const { return node_->knot_t; }
    const std::vector<double>& sample_values() const { return node_->knot_value; }

    // Rebuild the tree with every delay-bearing node (sech pairs,
    // recombined) set to the given delay.  Used by sweep axes.
    Envelope with_delay(double delay) const {
        require_finite(delay, "delay");
        switch (family()) {
            case EnvelopeFamily::sech_pair_even:
                return sech_pair_even(amplitude(), delay);
            case EnvelopeFamily::sech_pair_odd:
                return sech_pair_odd(amplitude(), delay);
            case EnvelopeFamily::recombined:
                return recombined(inner().with_delay(delay), delay);
            case EnvelopeFamily::scaled:
                return scaled(inner().with_delay(delay), factor());
            case EnvelopeFamily::negated:
                return negated(inner().with_delay(delay));
            default:
                return *this;
        }
    }
};

// Paired Rabi-frequency and detuning envelopes driving one scenario.
struct DriveProfile {
    Envelope rabi;
    Envelope detuning;
    double time_unit_T = 1.0;
};

enum class SymmetryClass { even, odd, neither };

inline const char* symmetry_name(SymmetryClass s) {
    switch (s) {
        case SymmetryClass::even: return "even";
        case SymmetryClass::odd: return "odd";
        case SymmetryClass::neither: return "neither";
    }
    return "unknown";
}

// Classify an envelope as even, odd, or neither about t = 0 by sampling
// the window.  The window must be symmetric.  The identically-zero
// envelope classifies as even.  tol is relative to the peak magnitude.
inline SymmetryClass classify_symmetry(const Envelope& env, const TimeGrid& window,
                                       double tol = 1e-9) {
    window.validate();
    if (!(tol > 0.0) || !(tol < 1.0))
        throw config_error("classify_symmetry: tol must lie in (0, 1)");
    const double span = std::max({1.0, std::abs(window.t_start), std::abs(window.t_end)});
    if (std::abs(window.t_start + window.t_end) > 1e-12 * span)
        throw config_error("classify_symmetry: window must be symmetric about t = 0");

    double peak = 0.0, residual_even = 0.0, residual_odd = 0.0;
    for (double t : window.sample_times()) {
        const double fwd = env(t);
        const double mir = env(-t);
        peak = std::max(peak, std::abs(fwd));
        residual_even = std::max(residual_even, std::abs(fwd - mir));
        residual_odd = std::max(residual_odd, std::abs(fwd + mir));
    }
    if (residual_even <= tol * peak)
        return SymmetryClass::even;
    if (residual_odd <= tol * peak)
        return SymmetryClass::odd;
    return SymmetryClass::neither;
}

// Integral of the envelope over the window (rad, with T = 1), by adaptive
// Gauss-Kronrod quadrature.  Throws numerical_error if the quadrature
// error estimate exceeds 1e-8 x peak magnitude x window length.
inline double pulse_area(const Envelope& env, const TimeGrid& window) {
    if (!std::isfinite(window.t_start) || !std::isfinite(window.t_end) ||
        !(window.t_start < window.t_end))
        throw config_error("pulse_area: window must satisfy t_start < t_end");

    double peak = 0.0;
    const int n_scan = 4097;
    const double h = window.length() / static_cast<double>(n_scan - 1);
    for (int k = 0; k < n_scan; ++k)
        peak = std::max(peak, std::abs(env(window.t_start + h * static_cast<double>(k))));

    double error_estimate = 0.0, l1 = 0.0;
    const double result = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&env](double t) { return env(t); }, window.t_start, window.t_end,
        15, 1e-10, &error_estimate, &l1);

    const double target = 1e-8 * peak * window.length();
    if (error_estimate > target)
        throw numerical_error("pulse_area: quadrature error estimate " +
                              std::to_string(error_estimate) +
                              " exceeds tolerance " + std::to_string(target));
    return result;
}

} // namespace twolevel
