// Command-line harness: run scenarios from JSON configs or built-in
// presets, sweep drive parameters, and compute pulse spectra.
//
// Exit codes: 0 success, 1 invalid config/arguments, 2 numerical failure,
// 3 I/O failure.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twolevel/scenario.hpp"

namespace {

struct CommonOptions {
    std::string out_dir = ".";
    double rel_tol = 0.0;
    std::string window;
    int samples = 0;
    CLI::Option* rel_tol_opt = nullptr;
    CLI::Option* window_opt = nullptr;
    CLI::Option* samples_opt = nullptr;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--out-dir", opts.out_dir, "Directory for generated files")
        ->capture_default_str();
    opts.rel_tol_opt = cmd->add_option("--rel-tol", opts.rel_tol,
                                       "Override the relative integration tolerance");
    opts.window_opt = cmd->add_option(
        "--window", opts.window,
        "Override the propagation window: 'W' for [-W, W] or 'start:end' (units of T)");
    opts.samples_opt =
        cmd->add_option("--samples", opts.samples, "Override the number of output samples");
}

void apply_overrides(twolevel::TimeGrid& grid, const CommonOptions& opts) {
    using twolevel::config_error;
    if (opts.rel_tol_opt->count() > 0)
        grid.rel_tol = opts.rel_tol;
    if (opts.samples_opt->count() > 0)
        grid.n_output = opts.samples;
    if (opts.window_opt->count() > 0) {
        const std::string& text = opts.window;
        try {
            const auto colon = text.find(':');
            if (colon == std::string::npos) {
                const double half = std::stod(text);
                if (!(half > 0.0))
                    throw config_error("--window: half-width must be positive");
                grid.t_start = -half;
                grid.t_end = half;
            } else {
                grid.t_start = std::stod(text.substr(0, colon));
                grid.t_end = std::stod(text.substr(colon + 1));
            }
        } catch (const config_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("--window: cannot parse '" + text +
                               "' (use 'W' or 'start:end')");
        }
    }
    grid.validate();
}

void print_scenario_result(const twolevel::ScenarioResult& r,
                           const std::vector<std::filesystem::path>& written) {
    using namespace twolevel;
    std::printf("scenario '%s'\n", r.name.c_str());
    std::printf("  window            [%g, %g] T, %d samples, rel_tol %g\n",
                r.window.t_start, r.window.t_end, r.window.n_output, r.window.rel_tol);
    std::printf("  symmetry          rabi %s, detuning %s -> predicted %s\n",
                symmetry_name(r.rabi_symmetry), symmetry_name(r.detuning_symmetry),
                predicted_name(r.predicted));
    std::printf("  final populations P1 = %.9g, P2 = %.9g\n", r.final_p1, r.final_p2);
    std::printf("  outcome           %s (tol %g)\n", outcome_name(r.outcome.kind),
                r.tol_outcome);
    std::printf("  pulse areas       rabi %.9g rad, detuning %.9g rad\n",
                r.pulse_area_rabi, r.pulse_area_detuning);
    std::printf("  adiabaticity      %.6g\n", r.adiabaticity);
    std::printf("  norm drift        %.3g, picture residual %.3g\n", r.norm_drift,
                r.picture_residual);
    for (const auto& p : written)
        std::printf("  wrote %s\n", p.string().c_str());
}

int run_scenario_command(twolevel::ScenarioConfig config, const CommonOptions& opts) {
    apply_overrides(config.grid, opts);
    const auto run = twolevel::execute_scenario(config);
    const auto written = twolevel::write_scenario_outputs(run, config, opts.out_dir);
    print_scenario_result(run.result, written);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    using namespace twolevel;

    CLI::App app{"shaped-pulse dynamics of a coherently driven two-state system"};
    app.require_subcommand(1);

    CommonOptions run_opts, preset_opts, sweep_opts, spectrum_opts;
    std::string run_config_path, sweep_config_path, spectrum_config_path, preset_name;

    auto* run_cmd = app.add_subcommand("run", "Run a scenario described by a JSON config");
    run_cmd->add_option("config", run_config_path, "Scenario config file")->required();
    add_common_options(run_cmd, run_opts);

    auto* preset_cmd = app.add_subcommand("preset", "Run one of the built-in scenarios");
    preset_cmd
        ->add_option("name", preset_name,
                     "Preset name: fig1_left, fig1_right, fig2_left, fig2_right")
        ->required();
    add_common_options(preset_cmd, preset_opts);

    auto* sweep_cmd =
        app.add_subcommand("sweep", "Evaluate a metric over a one- or two-axis sweep");
    sweep_cmd->add_option("config", sweep_config_path, "Sweep config file")->required();
    add_common_options(sweep_cmd, sweep_opts);

    auto* spectrum_cmd =
        app.add_subcommand("spectrum", "Fourier spectrum of a pulse envelope");
    spectrum_cmd->add_option("config", spectrum_config_path, "Spectrum config file")
        ->required();
    add_common_options(spectrum_cmd, spectrum_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run_cmd->parsed()) {
            const std::filesystem::path path = run_config_path;
            auto config = scenario_from_json(load_json_file(path),
                                             path.has_parent_path() ? path.parent_path()
                                                                    : std::filesystem::path("."));
            return run_scenario_command(std::move(config), run_opts);
        }
        if (preset_cmd->parsed()) {
            return run_scenario_command(scenario_from_preset(preset_name), preset_opts);
        }
        if (sweep_cmd->parsed()) {
            const std::filesystem::path path = sweep_config_path;
            auto config = sweep_from_json(load_json_file(path),
                                          path.has_parent_path() ? path.parent_path()
                                                                 : std::filesystem::path("."));
            apply_overrides(config.base.grid, sweep_opts);
            const auto result = run_sweep(config, sweep_opts.out_dir);
            std::size_t failed = 0;
            for (const auto& cell : result.cells)
                if (cell.status != "ok")
                    ++failed;
            std::printf("sweep '%s': %zu cells", result.name.c_str(), result.cells.size());
            for (const auto& axis : result.axes)
                std::printf(", %s in [%g, %g] x%d", sweep_parameter_name(axis.parameter),
                            axis.min, axis.max, axis.steps);
            std::printf(", metric %s\n", sweep_metric_name(result.metric));
            if (failed > 0)
                std::printf("  %zu cell(s) failed; see the status column\n", failed);
            std::printf("  wrote %s\n",
                        (std::filesystem::path(sweep_opts.out_dir) /
                         (result.name + "_sweep.csv")).string().c_str());
            return 0;
        }
        if (spectrum_cmd->parsed()) {
            const std::filesystem::path path = spectrum_config_path;
            auto config = spectrum_config_from_json(
                load_json_file(path), path.has_parent_path() ? path.parent_path()
                                                             : std::filesystem::path("."));
            if (spectrum_opts.window_opt->count() > 0 ||
                spectrum_opts.rel_tol_opt->count() > 0 ||
                spectrum_opts.samples_opt->count() > 0)
                apply_overrides(config.window, spectrum_opts);
            const auto run = run_spectrum(config, spectrum_opts.out_dir);
            std::printf("spectrum '%s': %zu detunings over window [%g, %g] T\n",
                        config.name.c_str(), run.spectrum.points.size(),
                        config.window.t_start, config.window.t_end);
            if (run.area) {
                std::printf("  pulse area from spectrum: %.12g rad\n", run.area->area);
                if (run.area->imaginary_flagged)
                    std::printf("  note: significant imaginary part at zero detuning "
                                "(asymmetric envelope)\n");
            }
            std::printf("  wrote %s\n",
                        (std::filesystem::path(spectrum_opts.out_dir) /
                         (config.name + "_spectrum.csv")).string().c_str());
            return 0;
        }
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 2;
    } catch (const io_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
