#pragma once

// Scenario configuration, the scenario matrix runner and report generation.

#include "dcpass/network.hpp"
#include "dcpass/passivity.hpp"
#include "dcpass/sim.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dcpass {

struct SimSettings {
    bool enabled = true;
    double dt = 2e-6;                  // s
    std::optional<double> t_end;       // s; default: last load step + settle_delay + window
    double dwell = 1.0;                // s per power level
    double settle_delay = 1.0;         // s after the last step before the window opens
    double window = 1.0;               // s, oscillation classification window
    std::size_t record_every = 10;
    std::size_t decimation = 50;       // stored samples per trace CSV row
    double undervoltage_limit_fraction = 0.5;
};

struct ScenarioConfig {
    ConverterParams converter;
    std::vector<DroopSpec> droops;             // lpf_cutoff of each entry is ignored
    LineParams line;
    std::vector<double> line_multiples{1.0};
    double c_bus = 3.3e-3;
    double p_rated = 3600.0;
    std::vector<double> cpl_multiples{1.0, 3.0, 4.0};
    std::vector<std::optional<double>> lpf_candidates{std::nullopt, 30.0};
    /// Configurations tried by the minimum-filter search; an empty entry is the unfiltered droop.
    std::vector<std::optional<double>> min_lpf_candidates{std::nullopt, 100.0, 30.0};
    LoopBandwidths loops;
    FrequencyGrid grid;
    double converter_threshold_hz = kDefaultConverterThresholdHz;
    double bus_tolerance_deg = kDefaultBusToleranceDeg;
    SimSettings sim;
    std::filesystem::path outputs = "dcpass_out";

    static ScenarioConfig defaults();
    /// Throws ValidationError naming the violated invariant.
    void validate() const;
};

/// Throws ParseError (with line or key context) and ValidationError. An empty file yields defaults.
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const std::string& text);

struct ScenarioKey {
    DroopSpec droop;            // includes the LPF of this scenario
    double power_multiple = 1.0;
    double line_multiple = 1.0;

    std::string id() const;
};

MicrogridScenario make_scenario(const ScenarioConfig& config, const ScenarioKey& key);

struct ScenarioResult {
    ScenarioKey key;
    std::string id;
    std::string error;                        // empty on success
    std::optional<OperatingPoint> op;
    std::optional<PassivityReport> converter;
    std::optional<PassivityReport> bus;
    std::optional<MinLpfResult> min_lpf;
    std::optional<OscillationReport> oscillation;
    std::optional<SimTrace> trace;            // decimated to one sample per CSV row
    std::string sim_error;
    std::vector<std::filesystem::path> artifacts;

    bool ok() const { return error.empty(); }
};

/// Matrix ordering: droop, power, line, filter (the last varies fastest).
std::vector<ScenarioKey> expand_matrix(const ScenarioConfig& config);

/// Runs every scenario of the matrix on up to jobs workers. Per-scenario failures are
/// recorded in the result. Output order and content do not depend on jobs.
std::vector<ScenarioResult> run_scenario_matrix(const ScenarioConfig& config, unsigned jobs = 1);

/// Single scenario, with or without the time-domain run.
ScenarioResult run_scenario(const ScenarioConfig& config, const ScenarioKey& key, bool with_min_lpf = true);

/// Writes freq/<id>.csv, trace/<id>.csv, summary.csv and summary.txt under dir and
/// records each file in the result's artifacts.
void emit_reports(std::vector<ScenarioResult>& results, const std::filesystem::path& dir);

void write_frequency_csv(std::ostream& out, const ScenarioResult& result);
void write_summary_csv(std::ostream& out, const std::vector<ScenarioResult>& results);
void write_summary_text(std::ostream& out, const std::vector<ScenarioResult>& results);

struct OracleCase {
    DroopSpec droop;
    std::vector<double> frequency;
    std::vector<Complex> analytic;
    std::vector<std::optional<Complex>> measured;
    std::vector<std::string> errors;
    double max_mag_err = 0.0;    // relative
    double max_phase_err = 0.0;  // degrees
    bool passed = false;
};

inline constexpr double kOracleMagTol = 0.05;
inline constexpr double kOraclePhaseTolDeg = 5.0;

/// Analytic converter impedance against injection measurement at the rated load, for every
/// droop of the config with and without each filter in lpfs, on n log-spaced points.
std::vector<OracleCase> run_oracle_suite(const ScenarioConfig& config, const std::vector<std::optional<double>>& lpfs,
                                         double fmin, double fmax, std::size_t n, unsigned jobs = 1);

void write_oracle_csv(std::ostream& out, const std::vector<OracleCase>& cases);

/// Runs fn(i) for i in [0, n) on up to jobs threads.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace dcpass
