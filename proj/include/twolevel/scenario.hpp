#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "envelope.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "presets.hpp"
#include "propagator.hpp"
#include "spectral.hpp"
#include "state.hpp"
#include "svg.hpp"
#include "time_grid.hpp"

namespace twolevel {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON serialization of envelopes, profiles and grids
// ---------------------------------------------------------------------------

inline json envelope_to_json(const Envelope& env) {
    json j;
    j["family"] = family_name(env.family());
    switch (env.family()) {
        case EnvelopeFamily::zero:
            break;
        case EnvelopeFamily::constant:
            j["amplitude"] = env.amplitude();
            break;
        case EnvelopeFamily::gaussian:
        case EnvelopeFamily::odd_gaussian:
            j["amplitude"] = env.amplitude();
            j["width_scale"] = env.width_scale();
            break;
        case EnvelopeFamily::sech_pair_even:
        case EnvelopeFamily::sech_pair_odd:
            j["amplitude"] = env.amplitude();
            j["delay"] = env.delay();
            break;
        case EnvelopeFamily::recombined:
            j["delay"] = env.delay();
            j["base"] = envelope_to_json(env.inner());
            break;
        case EnvelopeFamily::scaled:
            j["factor"] = env.factor();
            j["inner"] = envelope_to_json(env.inner());
            break;
        case EnvelopeFamily::negated:
            j["inner"] = envelope_to_json(env.inner());
            break;
        case EnvelopeFamily::tabulated: {
            json samples = json::array();
            for (std::size_t i = 0; i < env.sample_times().size(); ++i)
                samples.push_back({env.sample_times()[i], env.sample_values()[i]});
            j["samples"] = std::move(samples);
            break;
        }
    }
    return j;
}

namespace detail {

inline double json_number(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key))
        throw config_error(ctx + ": missing required key '" + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number())
        throw config_error(ctx + ": key '" + key + "' must be a number");
    return v.get<double>();
}

inline double json_number_or(const json& j, const char* key, double fallback,
                             const std::string& ctx) {
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (!v.is_number())
        throw config_error(ctx + ": key '" + key + "' must be a number");
    return v.get<double>();
}

inline int json_int_or(const json& j, const char* key, int fallback,
                       const std::string& ctx) {
    if (!j.contains(key))
        return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer())
        throw config_error(ctx + ": key '" + key + "' must be an integer");
    return v.get<int>();
}

inline std::string json_string(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key))
        throw config_error(ctx + ": missing required key '" + key + "'");
    const auto& v = j.at(key);
    if (!v.is_string())
        throw config_error(ctx + ": key '" + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace detail

// base_dir resolves relative sample-file paths of tabulated envelopes
// (usually the directory of the config file).
inline Envelope envelope_from_json(const json& j,
                                   const std::filesystem::path& base_dir = {}) {
    if (!j.is_object())
        throw config_error("envelope: expected a JSON object");
    const std::string family = detail::json_string(j, "family", "envelope");
    const std::string ctx = "envelope '" + family + "'";

    if (family == "zero")
        return Envelope::zero();
    if (family == "constant")
        return Envelope::constant(detail::json_number(j, "amplitude", ctx));
    if (family == "gaussian")
        return Envelope::gaussian(detail::json_number(j, "amplitude", ctx),
                                  detail::json_number(j, "width_scale", ctx));
    if (family == "odd_gaussian")
        return Envelope::odd_gaussian(detail::json_number(j, "amplitude", ctx),
                                      detail::json_number(j, "width_scale", ctx));
    if (family == "sech_pair_even")
        return Envelope::sech_pair_even(detail::json_number(j, "amplitude", ctx),
                                        detail::json_number(j, "delay", ctx));
    if (family == "sech_pair_odd")
        return Envelope::sech_pair_odd(detail::json_number(j, "amplitude", ctx),
                                       detail::json_number(j, "delay", ctx));
    if (family == "recombined") {
        if (!j.contains("base"))
            throw config_error(ctx + ": missing required key 'base'");
        return Envelope::recombined(envelope_from_json(j.at("base"), base_dir),
                                    detail::json_number(j, "delay", ctx));
    }
    if (family == "scaled") {
        if (!j.contains("inner"))
            throw config_error(ctx + ": missing required key 'inner'");
        return Envelope::scaled(envelope_from_json(j.at("inner"), base_dir),
                                detail::json_number(j, "factor", ctx));
    }
    if (family == "negated") {
        if (!j.contains("inner"))
            throw config_error(ctx + ": missing required key 'inner'");
        return Envelope::negated(envelope_from_json(j.at("inner"), base_dir));
    }
    if (family == "tabulated") {
        if (j.contains("samples") == j.contains("path"))
            throw config_error(ctx + ": provide exactly one of 'samples' or 'path'");
        if (j.contains("path")) {
            std::filesystem::path p = detail::json_string(j, "path", ctx);
            if (p.is_relative() && !base_dir.empty())
                p = base_dir / p;
            auto [times, values] = read_envelope_samples_csv(p);
            return Envelope::tabulated(std::move(times), std::move(values));
        }
        const auto& samples = j.at("samples");
        if (!samples.is_array())
            throw config_error(ctx + ": 'samples' must be an array of [t, value] pairs");
        std::vector<double> times, values;
        for (const auto& row : samples) {
            if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
                !row[1].is_number())
                throw config_error(ctx + ": each sample must be a [t, value] number pair");
            times.push_back(row[0].get<double>());
            values.push_back(row[1].get<double>());
        }
        return Envelope::tabulated(std::move(times), std::move(values));
    }
    throw config_error(
        "envelope: unknown family '" + family +
        "' (expected zero, constant, gaussian, odd_gaussian, sech_pair_even, "
        "sech_pair_odd, recombined, tabulated, scaled or negated)");
}

inline json profile_to_json(const DriveProfile& profile) {
    json j;
    j["rabi"] = envelope_to_json(profile.rabi);
    j["detuning"] = envelope_to_json(profile.detuning);
    j["time_unit_T"] = profile.time_unit_T;
    return j;
}

inline DriveProfile profile_from_json(const json& j,
                                      const std::filesystem::path& base_dir = {}) {
    if (!j.is_object())
        throw config_error("profile: expected a JSON object");
    if (!j.contains("rabi") || !j.contains("detuning"))
        throw config_error("profile: keys 'rabi' and 'detuning' are required");
    DriveProfile profile;
    profile.rabi = envelope_from_json(j.at("rabi"), base_dir);
    profile.detuning = envelope_from_json(j.at("detuning"), base_dir);
    profile.time_unit_T = detail::json_number_or(j, "time_unit_T", 1.0, "profile");
    if (!(profile.time_unit_T > 0.0))
        throw config_error("profile: time_unit_T must be positive");
    return profile;
}

inline json time_grid_to_json(const TimeGrid& grid) {
    json j;
    j["t_start"] = grid.t_start;
    j["t_end"] = grid.t_end;
    j["n_output"] = grid.n_output;
    j["rel_tol"] = grid.rel_tol;
    j["abs_tol"] = grid.abs_tol;
    return j;
}

inline TimeGrid time_grid_from_json(const json& j) {
    if (!j.is_object())
        throw config_error("grid: expected a JSON object");
    TimeGrid grid;
    grid.t_start = detail::json_number_or(j, "t_start", grid.t_start, "grid");
    grid.t_end = detail::json_number_or(j, "t_end", grid.t_end, "grid");
    grid.n_output = detail::json_int_or(j, "n_output", grid.n_output, "grid");
    grid.rel_tol = detail::json_number_or(j, "rel_tol", grid.rel_tol, "grid");
    grid.abs_tol = detail::json_number_or(j, "abs_tol", grid.abs_tol, "grid");
    grid.validate();
    return grid;
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

enum class OutputKind { trajectory_csv, timeseries_svg, bloch_plane_svg, summary_json };

inline const char* output_kind_name(OutputKind k) {
    switch (k) {
        case OutputKind::trajectory_csv: return "trajectory_csv";
        case OutputKind::timeseries_svg: return "timeseries_svg";
        case OutputKind::bloch_plane_svg: return "bloch_plane_svg";
        case OutputKind::summary_json: return "summary_json";
    }
    return "unknown";
}

inline OutputKind output_kind_from_name(const std::string& name) {
    if (name == "trajectory_csv") return OutputKind::trajectory_csv;
    if (name == "timeseries_svg") return OutputKind::timeseries_svg;
    if (name == "bloch_plane_svg") return OutputKind::bloch_plane_svg;
    if (name == "summary_json") return OutputKind::summary_json;
    throw config_error("outputs: unknown kind '" + name +
                       "' (expected trajectory_csv, timeseries_svg, "
                       "bloch_plane_svg or summary_json)");
}

enum class InitialStateKind { ground, excited, custom };

struct ScenarioConfig {
    std::string name = "scenario";
    DriveProfile profile;
    TimeGrid grid;
    InitialStateKind initial_kind = InitialStateKind::ground;
    AmplitudeState custom_initial;
    std::set<OutputKind> outputs = {OutputKind::trajectory_csv, OutputKind::timeseries_svg,
                                    OutputKind::bloch_plane_svg, OutputKind::summary_json};
    double tol_outcome = 1e-2;
    double symmetry_tol = 1e-9;

    void validate() const {
        if (name.empty() || name.find('/') != std::string::npos ||
            name.find('\\') != std::string::npos || name.find("..") != std::string::npos)
            throw config_error("scenario: name must be non-empty and free of path "
                               "separators");
        grid.validate();
        if (!(tol_outcome > 0.0) || !(tol_outcome < 0.5))
            throw config_error("scenario: tol_outcome must lie in (0, 0.5)");
        if (!(symmetry_tol > 0.0) || !(symmetry_tol < 1.0))
            throw config_error("scenario: symmetry_tol must lie in (0, 1)");
        if (initial_kind == InitialStateKind::custom &&
            std::abs(norm_squared(custom_initial) - 1.0) > 1e-9)
            throw config_error("scenario: custom initial state must be normalized "
                               "within 1e-9");
    }

    // Initial amplitudes, renormalized exactly for the propagator.
    AmplitudeState initial_state() const {
        switch (initial_kind) {
            case InitialStateKind::ground: return ground_state();
            case InitialStateKind::excited: return excited_state();
            case InitialStateKind::custom: {
                const double n = std::sqrt(norm_squared(custom_initial));
                return {custom_initial.c1 / n, custom_initial.c2 / n};
            }
        }
        return ground_state();
    }
};

inline json scenario_to_json(const ScenarioConfig& config) {
    json j;
    j["name"] = config.name;
    j["profile"] = profile_to_json(config.profile);
    j["grid"] = time_grid_to_json(config.grid);
    switch (config.initial_kind) {
        case InitialStateKind::ground: j["initial_state"] = "ground"; break;
        case InitialStateKind::excited: j["initial_state"] = "excited"; break;
        case InitialStateKind::custom:
            j["initial_state"] = {
                {"c1", {config.custom_initial.c1.real(), config.custom_initial.c1.imag()}},
                {"c2", {config.custom_initial.c2.real(), config.custom_initial.c2.imag()}}};
            break;
    }
    json outputs = json::array();
    for (OutputKind k : config.outputs)
        outputs.push_back(output_kind_name(k));
    j["outputs"] = std::move(outputs);
    j["tol_outcome"] = config.tol_outcome;
    j["symmetry_tol"] = config.symmetry_tol;
    return j;
}

inline ScenarioConfig scenario_from_json(const json& j,
                                         const std::filesystem::path& base_dir = {}) {
    if (!j.is_object())
        throw config_error("scenario: expected a JSON object");
    ScenarioConfig config;
    if (j.contains("name"))
        config.name = detail::json_string(j, "name", "scenario");
    if (!j.contains("profile"))
        throw config_error("scenario: missing required key 'profile'");
    config.profile = profile_from_json(j.at("profile"), base_dir);
    if (j.contains("grid"))
        config.grid = time_grid_from_json(j.at("grid"));
    if (j.contains("initial_state")) {
        const auto& init = j.at("initial_state");
        if (init.is_string()) {
            const std::string kind = init.get<std::string>();
            if (kind == "ground")
                config.initial_kind = InitialStateKind::ground;
            else if (kind == "excited")
                config.initial_kind = InitialStateKind::excited;
            else
                throw config_error("scenario: initial_state string must be 'ground' "
                                   "or 'excited', got '" + kind + "'");
        } else if (init.is_object()) {
            auto read_pair = [&](const char* key) {
                if (!init.contains(key) || !init.at(key).is_array() ||
                    init.at(key).size() != 2 || !init.at(key)[0].is_number() ||
                    !init.at(key)[1].is_number())
                    throw config_error(
                        "scenario: custom initial_state needs '" + std::string(key) +
                        "' as a [re, im] number pair");
                return std::complex<double>(init.at(key)[0].get<double>(),
                                            init.at(key)[1].get<double>());
            };
            config.initial_kind = InitialStateKind::custom;
            config.custom_initial = {read_pair("c1"), read_pair("c2")};
        } else {
            throw config_error("scenario: initial_state must be a string or an object");
        }
    }
    if (j.contains("outputs")) {
        const auto& outs = j.at("outputs");
        if (!outs.is_array())
            throw config_error("scenario: 'outputs' must be an array of strings");
        config.outputs.clear();
        for (const auto& o : outs) {
            if (!o.is_string())
                throw config_error("scenario: 'outputs' must be an array of strings");
            config.outputs.insert(output_kind_from_name(o.get<std::string>()));
        }
    }
    config.tol_outcome = detail::json_number_or(j, "tol_outcome", config.tol_outcome,
                                                "scenario");
    config.symmetry_tol = detail::json_number_or(j, "symmetry_tol", config.symmetry_tol,
                                                 "scenario");
    config.validate();
    return config;
}

// Scenario preconfigured from a built-in preset (all outputs enabled).
inline ScenarioConfig scenario_from_preset(const std::string& name) {
    ScenarioConfig config;
    config.name = name;
    config.profile = preset_profile(name);
    config.grid = default_grid();
    return config;
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

struct ScenarioResult {
    std::string name;
    double final_p1 = 0.0;
    double final_p2 = 0.0;
    OutcomeClass outcome;
    PredictedOutcome predicted = PredictedOutcome::undetermined;
    SymmetryClass rabi_symmetry = SymmetryClass::neither;
    SymmetryClass detuning_symmetry = SymmetryClass::neither;
    double pulse_area_rabi = 0.0;
    double pulse_area_detuning = 0.0;
    double adiabaticity = 0.0;
    double norm_drift = 0.0;
    double picture_residual = 0.0;
    double tol_outcome = 1e-2;
    TimeGrid window;
};

inline json result_to_json(const ScenarioResult& r) {
    json j;
    j["name"] = r.name;
    j["final_p1"] = r.final_p1;
    j["final_p2"] = r.final_p2;
    j["outcome"] = outcome_name(r.outcome.kind);
    j["predicted_outcome"] = predicted_name(r.predicted);
    j["rabi_symmetry"] = symmetry_name(r.rabi_symmetry);
    j["detuning_symmetry"] = symmetry_name(r.detuning_symmetry);
    j["pulse_area_rabi"] = r.pulse_area_rabi;
    j["pulse_area_detuning"] = r.pulse_area_detuning;
    j["adiabaticity_metric"] = r.adiabaticity;
    j["norm_drift"] = r.norm_drift;
    j["picture_residual"] = r.picture_residual;
    j["tol_outcome"] = r.tol_outcome;
    j["window"] = time_grid_to_json(r.window);
    return j;
}

struct ScenarioRun {
    ScenarioResult result;
    Trajectory amplitudes; // reference picture
    Trajectory bloch;
};

// Propagate both pictures and assemble all derived quantities.  No files
// are written here.  The amplitude picture is the reference for
// populations and outcome classification.
inline ScenarioRun execute_scenario(const ScenarioConfig& config) {
    config.validate();

    ScenarioRun run;
    const AmplitudeState initial = config.initial_state();
    run.amplitudes = propagate_amplitudes(config.profile, config.grid, initial);
    run.bloch = propagate_bloch(config.profile, config.grid,
                                bloch_from_amplitudes(initial));

    auto& r = run.result;
    r.name = config.name;
    r.tol_outcome = config.tol_outcome;
    r.window = config.grid;
    r.final_p1 = run.amplitudes.back().p1;
    r.final_p2 = run.amplitudes.back().p2;
    r.outcome = classify_outcome(run.amplitudes, config.tol_outcome);
    r.norm_drift = std::max(max_norm_drift(run.amplitudes), max_norm_drift(run.bloch));
    r.picture_residual = picture_residual(run.amplitudes, run.bloch);

    // Symmetry is a statement about t -> -t, so classify over the
    // symmetrized window even if the propagation window is shifted.
    TimeGrid sym = config.grid;
    const double half = std::max(std::abs(config.grid.t_start), std::abs(config.grid.t_end));
    sym.t_start = -half;
    sym.t_end = half;
    r.rabi_symmetry = classify_symmetry(config.profile.rabi, sym, config.symmetry_tol);
    r.detuning_symmetry =
        classify_symmetry(config.profile.detuning, sym, config.symmetry_tol);
    r.predicted = predict_from_symmetry(r.rabi_symmetry, r.detuning_symmetry);

    r.pulse_area_rabi = pulse_area(config.profile.rabi, config.grid);
    r.pulse_area_detuning = pulse_area(config.profile.detuning, config.grid);

    // An identically-zero drive leaves the mixing angle undefined; the
    // scenario reports a zero adiabaticity metric for it instead of
    // failing (theta is filled as 0 by the propagators).
    const auto angle = detail::mixing_angle_over(config.profile, config.grid.sample_times());
    r.adiabaticity = (angle.valid_count == 0)
                         ? 0.0
                         : adiabaticity_metric(config.profile, config.grid);
    return run;
}

// Paths written for one scenario, keyed by output kind.
inline std::vector<std::filesystem::path>
write_scenario_outputs(const ScenarioRun& run, const ScenarioConfig& config,
                       const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw io_error("cannot create output directory '" + out_dir.string() + "': " +
                       ec.message());
    std::vector<std::filesystem::path> written;
    for (OutputKind kind : config.outputs) {
        switch (kind) {
            case OutputKind::trajectory_csv: {
                auto p = out_dir / (config.name + "_trajectory.csv");
                write_trajectory_csv(p, run.amplitudes);
                written.push_back(std::move(p));
                break;
            }
            case OutputKind::timeseries_svg: {
                auto p = out_dir / (config.name + "_timeseries.svg");
                emit_timeseries(p, run.amplitudes, config.name);
                written.push_back(std::move(p));
                break;
            }
            case OutputKind::bloch_plane_svg: {
                auto p = out_dir / (config.name + "_bloch_plane.svg");
                emit_bloch_plane(p, run.amplitudes, config.name);
                written.push_back(std::move(p));
                break;
            }
            case OutputKind::summary_json: {
                auto p = out_dir / (config.name + "_summary.json");
                auto out = detail::open_for_write(p);
                out << result_to_json(run.result).dump(2) << '\n';
                detail::finish_write(out, p);
                written.push_back(std::move(p));
                break;
            }
        }
    }
    return written;
}

inline ScenarioResult run_scenario(const ScenarioConfig& config,
                                   const std::filesystem::path& out_dir) {
    ScenarioRun run = execute_scenario(config);
    write_scenario_outputs(run, config, out_dir);
    return run.result;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

enum class SweepParameter { rabi_scale, detuning_scale, delay, time_scale };
enum class SweepMetric { p2_final, p1_final, adiabaticity };

inline const char* sweep_parameter_name(SweepParameter p) {
    switch (p) {
        case SweepParameter::rabi_scale: return "rabi_scale";
        case SweepParameter::detuning_scale: return "detuning_scale";
        case SweepParameter::delay: return "delay";
        case SweepParameter::time_scale: return "time_scale";
    }
    return "unknown";
}

inline SweepParameter sweep_parameter_from_name(const std::string& name) {
    if (name == "rabi_scale") return SweepParameter::rabi_scale;
    if (name == "detuning_scale") return SweepParameter::detuning_scale;
    if (name == "delay") return SweepParameter::delay;
    if (name == "time_scale") return SweepParameter::time_scale;
    throw config_error("sweep: unknown parameter '" + name +
                       "' (expected rabi_scale, detuning_scale, delay or time_scale)");
}

inline const char* sweep_metric_name(SweepMetric m) {
    switch (m) {
        case SweepMetric::p2_final: return "p2_final";
        case SweepMetric::p1_final: return "p1_final";
        case SweepMetric::adiabaticity: return "adiabaticity";
    }
    return "unknown";
}

inline SweepMetric sweep_metric_from_name(const std::string& name) {
    if (name == "p2_final") return SweepMetric::p2_final;
    if (name == "p1_final") return SweepMetric::p1_final;
    if (name == "adiabaticity") return SweepMetric::adiabaticity;
    throw config_error("sweep: unknown metric '" + name +
                       "' (expected p2_final, p1_final or adiabaticity)");
}

struct SweepAxis {
    SweepParameter parameter = SweepParameter::rabi_scale;
    double min = 1.0;
    double max = 1.0;
    int steps = 2;

    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(steps));
        for (int i = 0; i < steps; ++i)
            v[static_cast<std::size_t>(i)] =
                min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1);
        return v;
    }
};

struct SweepConfig {
    std::string name = "sweep";
    ScenarioConfig base;
    std::vector<SweepAxis> axes;
    SweepMetric metric = SweepMetric::p2_final;

    void validate() const {
        if (name.empty() || name.find('/') != std::string::npos ||
            name.find('\\') != std::string::npos || name.find("..") != std::string::npos)
            throw config_error("sweep: name must be non-empty and free of path "
                               "separators");
        base.validate();
        if (axes.empty() || axes.size() > 2)
            throw config_error("sweep: one or two axes are required");
        for (const auto& axis : axes) {
            if (!std::isfinite(axis.min) || !std::isfinite(axis.max) ||
                !(axis.min < axis.max))
                throw config_error("sweep: axis needs finite min < max");
            if (axis.steps < 2)
                throw config_error("sweep: axis steps must be at least 2");
        }
    }
};

// Apply one axis value to a scenario: amplitude axes multiply the
// respective envelope; delay rewrites every delay-bearing node; the global
// time-scale k uses the change-of-variables identity "stretching time by k
// is equivalent to multiplying both envelopes by k" (populations, areas
// and the adiabaticity metric are invariant under it).
inline void apply_sweep_value(ScenarioConfig& config, SweepParameter parameter,
                              double value) {
    switch (parameter) {
        case SweepParameter::rabi_scale:
            config.profile.rabi = Envelope::scaled(config.profile.rabi, value);
            break;
        case SweepParameter::detuning_scale:
            config.profile.detuning = Envelope::scaled(config.profile.detuning, value);
            break;
        case SweepParameter::delay:
            config.profile.rabi = config.profile.rabi.with_delay(value);
            config.profile.detuning = config.profile.detuning.with_delay(value);
            break;
        case SweepParameter::time_scale:
            config.profile.rabi = Envelope::scaled(config.profile.rabi, value);
            config.profile.detuning = Envelope::scaled(config.profile.detuning, value);
            break;
    }
}

struct SweepCell {
    std::vector<double> values; // one per axis
    double metric = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

struct SweepResult {
    std::string name;
    std::vector<SweepAxis> axes;
    SweepMetric metric = SweepMetric::p2_final;
    std::vector<SweepCell> cells; // row-major: first axis outermost
};

inline json sweep_to_json(const SweepConfig& config) {
    json j;
    j["name"] = config.name;
    j["metric"] = sweep_metric_name(config.metric);
    j["base"] = scenario_to_json(config.base);
    json axes = json::array();
    for (const auto& axis : config.axes)
        axes.push_back({{"parameter", sweep_parameter_name(axis.parameter)},
                        {"min", axis.min},
                        {"max", axis.max},
                        {"steps", axis.steps}});
    j["axes"] = std::move(axes);
    return j;
}

inline SweepConfig sweep_from_json(const json& j,
                                   const std::filesystem::path& base_dir = {}) {
    if (!j.is_object())
        throw config_error("sweep: expected a JSON object");
    SweepConfig config;
    if (j.contains("name"))
        config.name = detail::json_string(j, "name", "sweep");
    if (!j.contains("base"))
        throw config_error("sweep: missing required key 'base'");
    config.base = scenario_from_json(j.at("base"), base_dir);
    if (j.contains("metric"))
        config.metric = sweep_metric_from_name(detail::json_string(j, "metric", "sweep"));
    if (!j.contains("axes") || !j.at("axes").is_array())
        throw config_error("sweep: missing required key 'axes' (array)");
    for (const auto& ja : j.at("axes")) {
        SweepAxis axis;
        axis.parameter =
            sweep_parameter_from_name(detail::json_string(ja, "parameter", "sweep axis"));
        axis.min = detail::json_number(ja, "min", "sweep axis");
        axis.max = detail::json_number(ja, "max", "sweep axis");
        axis.steps = detail::json_int_or(ja, "steps", 2, "sweep axis");
        config.axes.push_back(axis);
    }
    config.validate();
    return config;
}

// Evaluate every cell of the sweep grid.  Cells run concurrently; a
// failing cell records its error message in 'status' and the sweep
// continues.  Results are deterministic (each cell owns its slot).
inline SweepResult run_sweep(const SweepConfig& config) {
    config.validate();

    SweepResult result;
    result.name = config.name;
    result.axes = config.axes;
    result.metric = config.metric;

    std::vector<std::vector<double>> axis_values;
    std::size_t total = 1;
    for (const auto& axis : config.axes) {
        axis_values.push_back(axis.values());
        total *= axis_values.back().size();
    }
    result.cells.resize(total);
    for (std::size_t index = 0; index < total; ++index) {
        std::size_t rest = index;
        std::vector<double> values(config.axes.size());
        for (std::size_t a = config.axes.size(); a-- > 0;) {
            values[a] = axis_values[a][rest % axis_values[a].size()];
            rest /= axis_values[a].size();
        }
        result.cells[index].values = std::move(values);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t index = next.fetch_add(1);
            if (index >= total)
                return;
            auto& cell = result.cells[index];
            try {
                ScenarioConfig cell_config = config.base;
                cell_config.outputs.clear();
                for (std::size_t a = 0; a < config.axes.size(); ++a)
                    apply_sweep_value(cell_config, config.axes[a].parameter,
                                      cell.values[a]);
                const ScenarioRun run = execute_scenario(cell_config);
                switch (config.metric) {
                    case SweepMetric::p2_final: cell.metric = run.result.final_p2; break;
                    case SweepMetric::p1_final: cell.metric = run.result.final_p1; break;
                    case SweepMetric::adiabaticity:
                        cell.metric = run.result.adiabaticity;
                        break;
                }
            } catch (const std::exception& e) {
                cell.status = e.what();
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::size_t>(hw, total));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned i = 0; i < n_workers; ++i)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    return result;
}

// Row-major CSV: one column per axis, then the metric, then the status.
inline void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
    auto out = detail::open_for_write(path);
    for (const auto& axis : result.axes)
        out << sweep_parameter_name(axis.parameter) << ',';
    out << sweep_metric_name(result.metric) << ",status\n";
    for (const auto& cell : result.cells) {
        for (double v : cell.values)
            out << format_full(v) << ',';
        out << format_full(cell.metric) << ',';
        std::string status = cell.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        out << status << '\n';
    }
    detail::finish_write(out, path);
}

inline SweepResult run_sweep(const SweepConfig& config,
                             const std::filesystem::path& out_dir) {
    SweepResult result = run_sweep(config);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw io_error("cannot create output directory '" + out_dir.string() + "': " +
                       ec.message());
    write_sweep_csv(out_dir / (config.name + "_sweep.csv"), result);
    return result;
}

// ---------------------------------------------------------------------------
// Spectrum runs
// ---------------------------------------------------------------------------

struct SpectrumConfig {
    std::string name = "spectrum";
    Envelope envelope;
    std::vector<double> detunings;
    TimeGrid window;

    void validate() const {
        if (name.empty() || name.find('/') != std::string::npos ||
            name.find('\\') != std::string::npos || name.find("..") != std::string::npos)
            throw config_error("spectrum: name must be non-empty and free of path "
                               "separators");
        if (detunings.empty())
            throw config_error("spectrum: detuning grid is empty");
    }
};

inline SpectrumConfig spectrum_config_from_json(const json& j,
                                                const std::filesystem::path& base_dir = {}) {
    if (!j.is_object())
        throw config_error("spectrum: expected a JSON object");
    SpectrumConfig config;
    if (j.contains("name"))
        config.name = detail::json_string(j, "name", "spectrum");
    if (!j.contains("envelope"))
        throw config_error("spectrum: missing required key 'envelope'");
    config.envelope = envelope_from_json(j.at("envelope"), base_dir);
    if (j.contains("window"))
        config.window = time_grid_from_json(j.at("window"));
    if (!j.contains("detunings")) {
        // default grid: [-20, 20] in 401 points (an odd count includes 0)
        for (int i = 0; i < 401; ++i)
            config.detunings.push_back(-20.0 + 40.0 * i / 400.0);
    } else if (j.at("detunings").is_array()) {
        for (const auto& v : j.at("detunings")) {
            if (!v.is_number())
                throw config_error("spectrum: detunings array must contain numbers");
            config.detunings.push_back(v.get<double>());
        }
    } else if (j.at("detunings").is_object()) {
        const auto& d = j.at("detunings");
        const double lo = detail::json_number(d, "min", "spectrum detunings");
        const double hi = detail::json_number(d, "max", "spectrum detunings");
        const int steps = detail::json_int_or(d, "steps", 401, "spectrum detunings");
        if (!(lo < hi) || steps < 2)
            throw config_error("spectrum: detunings need min < max and steps >= 2");
        for (int i = 0; i < steps; ++i)
            config.detunings.push_back(lo + (hi - lo) * i / (steps - 1));
    } else {
        throw config_error("spectrum: 'detunings' must be an array or {min, max, steps}");
    }
    config.validate();
    return config;
}

struct SpectrumRun {
    Spectrum spectrum;
    std::optional<SpectralArea> area; // present when the grid includes 0
};

inline SpectrumRun run_spectrum(const SpectrumConfig& config,
                                const std::filesystem::path& out_dir) {
    config.validate();
    SpectrumRun run;
    run.spectrum = spectrum(config.envelope, config.detunings, config.window);
    const bool has_zero =
        std::any_of(config.detunings.begin(), config.detunings.end(),
                    [](double d) { return std::abs(d) <= 1e-12; });
    if (has_zero)
        run.area = area_from_spectrum(run.spectrum);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw io_error("cannot create output directory '" + out_dir.string() + "': " +
                       ec.message());
    write_spectrum_csv(out_dir / (config.name + "_spectrum.csv"), run.spectrum);
    return run;
}

// ---------------------------------------------------------------------------
// File loading
// ---------------------------------------------------------------------------

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open '" + path.string() + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return j;
}

} // namespace twolevel
