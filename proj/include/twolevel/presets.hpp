#pragma once

#include <array>
#include <string>

#include "envelope.hpp"
#include "errors.hpp"
#include "time_grid.hpp"

namespace twolevel {

// Built-in drive profiles, one per flagship scenario.  Amplitudes are in
// units of 1/T, delays and widths in units of T.
//
//   fig1_left   even rabi + odd detuning    -> complete inversion
//   fig1_right  odd rabi + odd detuning     -> complete return
//   fig2_left   odd rabi + even detuning    -> complete inversion
//   fig2_right  even rabi + even detuning   -> complete return
inline const std::array<std::string, 4>& preset_names() {
    static const std::array<std::string, 4> names{
        "fig1_left", "fig1_right", "fig2_left", "fig2_right"};
    return names;
}

inline DriveProfile preset_profile(const std::string& name) {
    if (name == "fig1_left")
        return {Envelope::gaussian(30.0, 1.0), Envelope::odd_gaussian(-40.0, 1.5)};
    if (name == "fig1_right")
        return {Envelope::odd_gaussian(-80.0, 1.0), Envelope::sech_pair_odd(-25.0, 3.0)};
    if (name == "fig2_left")
        return {Envelope::odd_gaussian(-40.0, 2.5), Envelope::sech_pair_even(4.0, 3.0)};
    if (name == "fig2_right")
        return {Envelope::gaussian(40.0, 2.5), Envelope::sech_pair_even(4.0, 3.0)};
    throw config_error("unknown preset '" + name +
                       "' (expected fig1_left, fig1_right, fig2_left or fig2_right)");
}

// Default propagation window shared by the presets.
inline TimeGrid default_grid() { return TimeGrid{}; }

} // namespace twolevel
