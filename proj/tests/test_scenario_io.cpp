#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "twolevel/scenario.hpp"

using namespace twolevel;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

// Per-test scratch directory under the system temp root.
fs::path test_dir(const std::string& tag) {
    static const fs::path root =
        fs::temp_directory_path() / ("twolevel_tests_" + std::to_string(::getpid()));
    const fs::path dir = root / tag;
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep))
        out.push_back(field);
    return out;
}

// Endpoint populations computed once with an unrelated integrator and
// frozen (see test_propagator.cpp for the regression guard).
constexpr double frozen_rabi_scale_p2[3] = {
    0.99998194551778907, // fig2_left as configured
    0.99999498191009384, // Rabi envelope doubled
    0.99999600640575315, // Rabi envelope tripled
};

} // namespace

TEST_CASE("scenario configs survive a JSON round trip unchanged") {
    std::vector<ScenarioConfig> configs;
    configs.push_back(scenario_from_preset("fig1_left"));
    configs.push_back(scenario_from_preset("fig2_right"));

    ScenarioConfig fancy;
    fancy.name = "fancy";
    fancy.profile.rabi = Envelope::scaled(
        Envelope::recombined(Envelope::gaussian(25.0, 1.0), 3.0), -0.5);
    fancy.profile.detuning =
        Envelope::negated(Envelope::tabulated({-1.0, 0.0, 1.0}, {0.0, 2.0, 0.0}));
    fancy.profile.time_unit_T = 2.0;
    fancy.grid.t_start = -5.0;
    fancy.grid.t_end = 5.0;
    fancy.grid.n_output = 101;
    fancy.initial_kind = InitialStateKind::custom;
    fancy.custom_initial.c1 = {0.6, 0.0};
    fancy.custom_initial.c2 = {0.0, 0.8};
    fancy.outputs = {OutputKind::summary_json, OutputKind::trajectory_csv};
    fancy.tol_outcome = 0.05;
    configs.push_back(fancy);

    ScenarioConfig excited = scenario_from_preset("fig1_right");
    excited.initial_kind = InitialStateKind::excited;
    configs.push_back(excited);

    for (const auto& config : configs) {
        INFO(config.name);
        const std::string once = scenario_to_json(config).dump(2);
        const ScenarioConfig reparsed = scenario_from_json(json::parse(once));
        const std::string twice = scenario_to_json(reparsed).dump(2);
        REQUIRE(once == twice);
    }
}

TEST_CASE("sweep and spectrum configs survive a JSON round trip") {
    SweepConfig sweep;
    sweep.name = "demo";
    sweep.base = scenario_from_preset("fig2_left");
    sweep.axes.push_back({SweepParameter::rabi_scale, 1.0, 3.0, 3});
    sweep.axes.push_back({SweepParameter::delay, 2.0, 4.0, 3});
    sweep.metric = SweepMetric::adiabaticity;

    const std::string once = sweep_to_json(sweep).dump(2);
    const std::string twice = sweep_to_json(sweep_from_json(json::parse(once))).dump(2);
    REQUIRE(once == twice);

    json sj;
    sj["name"] = "scan";
    sj["envelope"] = envelope_to_json(Envelope::gaussian(30.0, 1.0));
    sj["detunings"] = {{"min", -5.0}, {"max", 5.0}, {"steps", 11}};
    const SpectrumConfig spec = spectrum_config_from_json(sj);
    REQUIRE(spec.detunings.size() == 11);
    CHECK(spec.detunings.front() == -5.0);
    CHECK(spec.detunings.back() == 5.0);
    CHECK(spec.detunings[5] == 0.0);

    json defaulted;
    defaulted["envelope"] = envelope_to_json(Envelope::gaussian(1.0, 1.0));
    const SpectrumConfig def = spectrum_config_from_json(defaulted);
    REQUIRE(def.detunings.size() == 401);
    CHECK(def.detunings.front() == -20.0);
    CHECK(def.detunings[200] == 0.0);
}

TEST_CASE("malformed configuration JSON is rejected") {
    const fs::path dir = test_dir("bad_json");

    json j;
    CHECK_THROWS_AS(scenario_from_json(j), config_error); // not an object... empty object
    j["name"] = "x";
    CHECK_THROWS_AS(scenario_from_json(j), config_error); // missing profile

    json profile;
    profile["rabi"] = {{"family", "gaussian"}, {"amplitude", 1.0}, {"width_scale", 1.0}};
    profile["detuning"] = {{"family", "zero"}};
    j["profile"] = profile;
    CHECK_NOTHROW(scenario_from_json(j));

    j["initial_state"] = "sideways";
    CHECK_THROWS_AS(scenario_from_json(j), config_error);
    j["initial_state"] = "ground";

    j["grid"] = {{"n_output", 1}};
    CHECK_THROWS_AS(scenario_from_json(j), config_error);
    j.erase("grid");

    j["tol_outcome"] = 0.6;
    CHECK_THROWS_AS(scenario_from_json(j), config_error);
    j.erase("tol_outcome");

    j["name"] = "../escape";
    CHECK_THROWS_AS(scenario_from_json(j), config_error);
    j["name"] = "x";

    json bad_env = {{"family", "lorentzian"}, {"amplitude", 1.0}};
    j["profile"]["rabi"] = bad_env;
    CHECK_THROWS_AS(scenario_from_json(j), config_error);

    j["profile"]["rabi"] = {{"family", "gaussian"}, {"amplitude", 1.0}};
    CHECK_THROWS_AS(scenario_from_json(j), config_error); // width_scale missing

    j["profile"]["rabi"] = {{"family", "tabulated"},
                            {"samples", {{0.0, 1.0}, {1.0, 2.0}}},
                            {"path", "x.csv"}};
    CHECK_THROWS_AS(scenario_from_json(j), config_error); // both sources given

    CHECK_THROWS_AS(load_json_file(dir / "missing.json"), io_error);
    {
        std::ofstream out(dir / "broken.json");
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_json_file(dir / "broken.json"), config_error);
}

TEST_CASE("tabulated envelopes load from a CSV path relative to the config") {
    const fs::path dir = test_dir("tabulated_path");
    {
        std::ofstream out(dir / "samples.csv");
        out << "t,value\r\n";
        out << "-2,0\n";
        out << "-1,1.5\n";
        out << "\n";
        out << "0, 3.0\n";
        out << "1,1.5\n";
        out << "2,0\n";
    }
    json j;
    j["profile"] = {
        {"rabi", {{"family", "tabulated"}, {"path", "samples.csv"}}},
        {"detuning", {{"family", "zero"}}},
    };
    const ScenarioConfig config = scenario_from_json(j, dir);
    CHECK(config.profile.rabi(0.0) == 3.0);
    CHECK(config.profile.rabi(-1.0) == 1.5);
    CHECK(config.profile.rabi(5.0) == 0.0);
}

TEST_CASE("envelope sample CSV rejects malformed rows") {
    const fs::path dir = test_dir("bad_csv");

    auto write = [&](const char* name, const char* text) {
        std::ofstream out(dir / name);
        out << text;
        return dir / name;
    };

    const auto ok = write("ok.csv", "time,value\n0,1\n1,2\n");
    const auto [t, v] = read_envelope_samples_csv(ok);
    REQUIRE(t.size() == 2);
    CHECK(v[1] == 2.0);

    CHECK_THROWS_AS(read_envelope_samples_csv(dir / "absent.csv"), io_error);
    CHECK_THROWS_AS(read_envelope_samples_csv(write("short.csv", "0,1\n")), config_error);
    CHECK_THROWS_AS(read_envelope_samples_csv(write("wide.csv", "0,1,2\n1,2,3\n")),
                    config_error);
    CHECK_THROWS_AS(
        read_envelope_samples_csv(write("garbled.csv", "0,1\nbroken,row\n")),
        config_error);
    CHECK_THROWS_AS(
        read_envelope_samples_csv(write("late_header.csv", "0,1\ntime,value\n1,2\n")),
        config_error);
}

TEST_CASE("executing a preset scenario fills every result field") {
    const ScenarioConfig config = scenario_from_preset("fig1_left");
    const ScenarioRun run = execute_scenario(config);
    const ScenarioResult& r = run.result;

    CHECK(r.name == "fig1_left");
    CHECK(r.outcome.kind == OutcomeKind::cpi);
    CHECK(r.predicted == PredictedOutcome::cpi);
    CHECK(r.rabi_symmetry == SymmetryClass::even);
    CHECK(r.detuning_symmetry == SymmetryClass::odd);
    CHECK(r.final_p2 == Approx(1.0).margin(1e-4));
    CHECK(r.final_p1 + r.final_p2 == Approx(1.0).margin(1e-9));
    CHECK(r.pulse_area_rabi ==
          Approx(30.0 * std::sqrt(std::numbers::pi)).margin(1e-6));
    CHECK(std::abs(r.pulse_area_detuning) <= 1e-8);
    CHECK(r.adiabaticity > 0.0);
    CHECK(r.adiabaticity < 0.1);
    CHECK(r.norm_drift <= 1e-9);
    CHECK(r.picture_residual <= 1e-8);

    // deterministic: a second execution serializes identically
    const ScenarioRun again = execute_scenario(config);
    CHECK(result_to_json(run.result).dump() == result_to_json(again.result).dump());
}

TEST_CASE("a drive-free scenario reports a quiet return") {
    ScenarioConfig config;
    config.name = "idle";
    config.profile.rabi = Envelope::zero();
    config.profile.detuning = Envelope::zero();

    const ScenarioRun run = execute_scenario(config);
    CHECK(run.result.final_p1 == 1.0);
    CHECK(run.result.final_p2 == 0.0);
    CHECK(run.result.outcome.kind == OutcomeKind::cpr);
    CHECK(run.result.predicted == PredictedOutcome::cpr);
    CHECK(run.result.pulse_area_rabi == 0.0);
    CHECK(run.result.pulse_area_detuning == 0.0);
    CHECK(run.result.adiabaticity == 0.0);
    CHECK(run.result.norm_drift == 0.0);

    // file outputs still work without any drive
    const fs::path dir = test_dir("idle_outputs");
    const ScenarioResult r = run_scenario(config, dir);
    CHECK(r.outcome.kind == OutcomeKind::cpr);
    for (const char* suffix :
         {"_trajectory.csv", "_timeseries.svg", "_bloch_plane.svg", "_summary.json"})
        CHECK(fs::exists(dir / ("idle" + std::string(suffix))));
}

TEST_CASE("custom initial states are renormalized and validated") {
    ScenarioConfig config;
    config.name = "custom";
    config.profile.rabi = Envelope::zero();
    config.profile.detuning = Envelope::zero();
    config.initial_kind = InitialStateKind::custom;
    config.custom_initial.c1 = {0.6, 0.0};
    config.custom_initial.c2 = {0.0, 0.8};

    const ScenarioRun run = execute_scenario(config);
    CHECK(run.result.final_p2 == Approx(0.64).epsilon(1e-12));

    config.custom_initial.c1 = {1.1, 0.0};
    config.custom_initial.c2 = {0.0, 0.0};
    CHECK_THROWS_AS(execute_scenario(config), config_error);
}

TEST_CASE("scenario outputs write only what was requested") {
    const fs::path dir = test_dir("partial_outputs");
    ScenarioConfig config = scenario_from_preset("fig1_left");
    config.grid.n_output = 41; // keep files small
    config.outputs = {OutputKind::summary_json};
    run_scenario(config, dir);

    CHECK(fs::exists(dir / "fig1_left_summary.json"));
    CHECK_FALSE(fs::exists(dir / "fig1_left_trajectory.csv"));
    CHECK_FALSE(fs::exists(dir / "fig1_left_timeseries.svg"));

    const json summary = load_json_file(dir / "fig1_left_summary.json");
    CHECK(summary.at("name") == "fig1_left");
    CHECK(summary.at("outcome") == "CPI");
    CHECK(summary.at("predicted_outcome") == "CPI");
    CHECK(summary.at("rabi_symmetry") == "even");
    CHECK(summary.at("detuning_symmetry") == "odd");
    CHECK(summary.at("final_p2").get<double>() > 0.99);
    CHECK(summary.at("norm_drift").get<double>() <= 1e-9);
    CHECK(summary.at("window").at("t_start").get<double>() == -10.0);
}

TEST_CASE("trajectory CSV fields round-trip at full precision") {
    const fs::path dir = test_dir("trajectory_csv");
    ScenarioConfig config = scenario_from_preset("fig2_left");
    config.grid.n_output = 7;
    const ScenarioRun run = execute_scenario(config);
    const fs::path path = dir / "traj.csv";
    write_trajectory_csv(path, run.amplitudes);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == trajectory_csv_header);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        REQUIRE(row < run.amplitudes.size());
        const auto fields = split(line, ',');
        REQUIRE(fields.size() == 12);
        const auto& s = run.amplitudes.samples[row];
        const double stored[12] = {s.t, s.omega, s.delta, s.eps_minus,
                                   s.eps_plus, s.theta, s.u, s.v,
                                   s.w, s.p1, s.p2, s.a0};
        for (int k = 0; k < 12; ++k)
            REQUIRE(std::strtod(fields[k].c_str(), nullptr) == stored[k]);
        ++row;
    }
    CHECK(row == run.amplitudes.size());

    CHECK_THROWS_AS(
        write_trajectory_csv(dir / "no_such_dir" / "x.csv", run.amplitudes), io_error);
}

TEST_CASE("rabi-scale sweep reproduces the frozen endpoint populations") {
    SweepConfig sweep;
    sweep.name = "scale";
    sweep.base = scenario_from_preset("fig2_left");
    sweep.axes.push_back({SweepParameter::rabi_scale, 1.0, 3.0, 3});
    sweep.metric = SweepMetric::p2_final;

    const SweepResult result = run_sweep(sweep);
    REQUIRE(result.cells.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        INFO("cell " << i);
        REQUIRE(result.cells[i].status == "ok");
        REQUIRE(result.cells[i].values.size() == 1);
        CHECK(result.cells[i].values[0] == Approx(1.0 + double(i)).margin(1e-12));
        CHECK(std::abs(result.cells[i].metric - frozen_rabi_scale_p2[i]) <= 1e-6);
    }
}

TEST_CASE("pair-delay sweep keeps the inversion intact") {
    SweepConfig sweep;
    sweep.name = "delay";
    sweep.base = scenario_from_preset("fig2_left");
    sweep.axes.push_back({SweepParameter::delay, 2.0, 4.0, 3});
    sweep.metric = SweepMetric::p2_final;

    const SweepResult result = run_sweep(sweep);
    REQUIRE(result.cells.size() == 3);
    for (const auto& cell : result.cells) {
        INFO("delay " << cell.values[0]);
        REQUIRE(cell.status == "ok");
        CHECK(cell.metric >= 0.99);
    }
}

TEST_CASE("two-axis sweeps enumerate cells row-major") {
    SweepConfig sweep;
    sweep.name = "grid2";
    sweep.base = scenario_from_preset("fig2_left");
    sweep.axes.push_back({SweepParameter::rabi_scale, 1.0, 2.0, 2});
    sweep.axes.push_back({SweepParameter::detuning_scale, 1.0, 2.0, 2});

    const SweepResult result = run_sweep(sweep);
    REQUIRE(result.cells.size() == 4);
    const double expected[4][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(result.cells[i].values.size() == 2);
        CHECK(result.cells[i].values[0] == expected[i][0]);
        CHECK(result.cells[i].values[1] == expected[i][1]);
        CHECK(result.cells[i].status == "ok");
        CHECK(std::isfinite(result.cells[i].metric));
    }

    // the unit cell multiplies both envelopes by 1 and must match the base run
    const ScenarioRun base = execute_scenario(sweep.base);
    CHECK(result.cells[0].metric == base.result.final_p2);
}

TEST_CASE("a failing sweep cell is recorded without aborting the sweep") {
    SweepConfig sweep;
    sweep.name = "fail";
    sweep.base.name = "tophat";
    // discontinuous envelope: area quadrature cannot reach its tolerance
    sweep.base.profile.rabi = Envelope::tabulated({-0.5, 0.5}, {5.0, 5.0});
    sweep.base.profile.detuning = Envelope::zero();
    sweep.axes.push_back({SweepParameter::rabi_scale, 0.0, 1.0, 2});
    sweep.metric = SweepMetric::p2_final;

    const fs::path dir = test_dir("sweep_fail");
    const SweepResult result = run_sweep(sweep, dir);
    REQUIRE(result.cells.size() == 2);

    // scale 0 kills the drive entirely, so that cell evaluates cleanly
    CHECK(result.cells[0].status == "ok");
    CHECK(result.cells[0].metric == 0.0);
    CHECK(result.cells[1].status != "ok");
    CHECK(std::isnan(result.cells[1].metric));

    const std::string csv = slurp(dir / "fail_sweep.csv");
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "rabi_scale,p2_final,status");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        REQUIRE(split(line, ',').size() == 3); // status commas are sanitized
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("sweep validation rejects bad axes") {
    SweepConfig sweep;
    sweep.base = scenario_from_preset("fig1_left");
    CHECK_THROWS_AS(run_sweep(sweep), config_error); // no axes

    sweep.axes.push_back({SweepParameter::rabi_scale, 1.0, 1.0, 2});
    CHECK_THROWS_AS(run_sweep(sweep), config_error); // min == max

    sweep.axes[0] = {SweepParameter::rabi_scale, 1.0, 2.0, 1};
    CHECK_THROWS_AS(run_sweep(sweep), config_error); // too few steps

    sweep.axes[0] = {SweepParameter::rabi_scale, 1.0, 2.0, 2};
    sweep.axes.push_back({SweepParameter::delay, 1.0, 2.0, 2});
    sweep.axes.push_back({SweepParameter::time_scale, 1.0, 2.0, 2});
    CHECK_THROWS_AS(run_sweep(sweep), config_error); // three axes
}

TEST_CASE("time-scale and amplitude-scale sweeps coincide") {
    // stretching time by k is implemented as scaling both envelopes by k,
    // so the two parameterizations must produce identical metrics
    SweepConfig by_time;
    by_time.base = scenario_from_preset("fig2_left");
    by_time.axes.push_back({SweepParameter::time_scale, 1.0, 2.0, 2});

    SweepConfig by_hand;
    by_hand.base = scenario_from_preset("fig2_left");
    by_hand.base.profile.rabi = Envelope::scaled(by_hand.base.profile.rabi, 2.0);
    by_hand.base.profile.detuning = Envelope::scaled(by_hand.base.profile.detuning, 2.0);

    const SweepResult swept = run_sweep(by_time);
    const ScenarioRun direct = execute_scenario(by_hand.base);
    REQUIRE(swept.cells.size() == 2);
    CHECK(swept.cells[1].metric == Approx(direct.result.final_p2).margin(1e-10));
}

TEST_CASE("spectrum runs write a parsable CSV and recover the area") {
    const fs::path dir = test_dir("spectrum_run");
    SpectrumConfig config;
    config.name = "gauss";
    config.envelope = Envelope::gaussian(30.0, 1.0);
    for (int i = 0; i < 41; ++i)
        config.detunings.push_back(-10.0 + 0.5 * i);

    const SpectrumRun run = run_spectrum(config, dir);
    REQUIRE(run.area.has_value());
    CHECK(run.area->area == Approx(30.0 * std::sqrt(std::numbers::pi)).margin(1e-6));
    CHECK_FALSE(run.area->imaginary_flagged);

    const std::string csv = slurp(dir / "gauss_spectrum.csv");
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == spectrum_csv_header);
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        const auto fields = split(line, ',');
        REQUIRE(fields.size() == 4);
        const auto& p = run.spectrum.points[rows];
        CHECK(std::strtod(fields[0].c_str(), nullptr) == p.detuning);
        CHECK(std::strtod(fields[3].c_str(), nullptr) == p.magnitude());
        ++rows;
    }
    CHECK(rows == 41);

    // without a zero detuning the area is simply absent
    SpectrumConfig no_zero = config;
    no_zero.name = "offset";
    no_zero.detunings = {0.5, 1.0, 1.5};
    CHECK_FALSE(run_spectrum(no_zero, dir).area.has_value());
}

TEST_CASE("plots carry the expected structure") {
    const fs::path dir = test_dir("svg");
    ScenarioConfig config = scenario_from_preset("fig2_right");
    const ScenarioRun run = execute_scenario(config);
    emit_timeseries(dir / "ts.svg", run.amplitudes, "fig2_right");
    emit_bloch_plane(dir / "plane.svg", run.amplitudes, "fig2_right");

    const std::string ts = slurp(dir / "ts.svg");
    CHECK(ts.rfind("<?xml", 0) == 0);
    CHECK(ts.find("</svg>") != std::string::npos);
    CHECK(ts.find("<polyline") != std::string::npos);
    CHECK(ts.find("fig2_right") != std::string::npos);

    const std::string plane = slurp(dir / "plane.svg");
    CHECK(plane.find("</svg>") != std::string::npos);

    // the start and end markers of a complete return sit almost on top of
    // each other; read their pixel coordinates back out of the file
    std::vector<std::pair<double, double>> markers;
    std::size_t pos = 0;
    while ((pos = plane.find("r=\"5\"", pos)) != std::string::npos) {
        const std::size_t open = plane.rfind("<circle", pos);
        REQUIRE(open != std::string::npos);
        double cx = 0.0, cy = 0.0;
        REQUIRE(std::sscanf(plane.c_str() + open, "<circle cx=\"%lf\" cy=\"%lf\"",
                            &cx, &cy) == 2);
        markers.emplace_back(cx, cy);
        pos += 5;
    }
    REQUIRE(markers.size() == 2);
    const double dx = markers[0].first - markers[1].first;
    const double dy = markers[0].second - markers[1].second;
    CHECK(std::hypot(dx, dy) <= 2.0);

    CHECK_THROWS_AS(emit_timeseries(dir / "no_dir" / "x.svg", run.amplitudes),
                    io_error);
    CHECK_THROWS_AS(emit_bloch_plane(dir / "y.svg", Trajectory{}),
                    std::invalid_argument);
}
