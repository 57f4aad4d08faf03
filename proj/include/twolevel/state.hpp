#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace twolevel {

// Probability amplitudes (c1, c2) of the bare states in the rotating frame.
struct AmplitudeState {
    std::complex<double> c1{1.0, 0.0};
    std::complex<double> c2{0.0, 0.0};
};

inline AmplitudeState ground_state() { return {{1.0, 0.0}, {0.0, 0.0}}; }
inline AmplitudeState excited_state() { return {{0.0, 0.0}, {1.0, 0.0}}; }

inline double norm_squared(const AmplitudeState& s) {
    return std::norm(s.c1) + std::norm(s.c2);
}

// Bloch vector (u, v, w); w = -1 is the ground state, w = +1 the excited.
struct BlochVector {
    double u = 0.0;
    double v = 0.0;
    double w = -1.0;
};

inline double norm(const BlochVector& b) {
    return std::sqrt(b.u * b.u + b.v * b.v + b.w * b.w);
}

// Density-matrix mapping from amplitudes to the Bloch vector:
// u = 2 Re(c1* c2), v = 2 Im(c1* c2), w = |c2|^2 - |c1|^2.
inline BlochVector bloch_from_amplitudes(const AmplitudeState& s) {
    const std::complex<double> coherence = std::conj(s.c1) * s.c2;
    return {2.0 * coherence.real(), 2.0 * coherence.imag(),
            std::norm(s.c2) - std::norm(s.c1)};
}

// One output record of a propagation.  Populations p1/p2, the adiabatic
// energies eps_minus/eps_plus, the mixing angle theta and the dark-state
// component a0 are filled alongside the dynamical variables.
struct TrajectorySample {
    double t = 0.0;
    double omega = 0.0;
    double delta = 0.0;
    double eps_minus = 0.0;
    double eps_plus = 0.0;
    double theta = 0.0;
    double u = 0.0;
    double v = 0.0;
    double w = -1.0;
    double p1 = 1.0;
    double p2 = 0.0;
    double a0 = 0.0;

    BlochVector bloch() const { return {u, v, w}; }
};

struct Trajectory {
    std::vector<TrajectorySample> samples;

    const TrajectorySample& front() const { return samples.front(); }
    const TrajectorySample& back() const { return samples.back(); }
    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// Largest deviation of the Bloch-vector length from 1 across the
// trajectory.  For amplitude-picture trajectories this equals the
// population-sum drift |p1 + p2 - 1|.
inline double max_norm_drift(const Trajectory& traj) {
    if (traj.empty())
        throw std::invalid_argument("max_norm_drift: empty trajectory");
    double drift = 0.0;
    for (const auto& s : traj.samples)
        drift = std::max(drift, std::abs(norm(s.bloch()) - 1.0));
    return drift;
}

} // namespace twolevel
