// dcpass: passivity and time-domain assessment of droop-controlled DC microgrids.
//
//   dcpass assess    [--config F] [--out D] [--jobs N] [--grid fmin,fmax,ppd]
//   dcpass impedance --droop VI --power 3 [--lpf 30|none] [--line 1] ...
//   dcpass simulate  --droop VI --power 3 [--lpf 30|none] [--line 1] ...
//   dcpass verify    [--points 20] [--fmin 1] [--fmax 1000] [--lpf 30] ...
//
// Exit status: 0 computed (instability is a result), 1 configuration error,
// 2 numerical failure (for verify: an analytic/measured mismatch).

#include "dcpass/csv.hpp"
#include "dcpass/errors.hpp"
#include "dcpass/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace dcpass;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalError = 2;

struct Common {
    std::string config;
    std::string out;
    unsigned jobs = 0;
    std::string grid;
};

struct Selector {
    std::string droop = "VI";
    double power = 1.0;
    std::string lpf = "none";
    double line = 1.0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON scenario configuration")->check(CLI::ExistingFile);
    app->add_option("--out", c.out, "output directory (overrides the config)");
    app->add_option("--jobs", c.jobs, "worker threads (default: hardware concurrency)");
    app->add_option("--grid", c.grid, "frequency grid as fmin,fmax,points_per_decade");
}

void add_selector(CLI::App* app, Selector& s) {
    app->add_option("--droop", s.droop, "IV, VI, PV or VP")->required();
    app->add_option("--power", s.power, "load power as a multiple of the rated power")->required();
    app->add_option("--lpf", s.lpf, "droop feedback filter cutoff in Hz, or none");
    app->add_option("--line", s.line, "line length multiple");
}

ScenarioConfig build_config(const Common& c) {
    ScenarioConfig cfg = c.config.empty() ? parse_config("") : load_config(c.config);
    if (!c.out.empty()) cfg.outputs = c.out;
    if (!c.grid.empty()) {
        std::stringstream ss(c.grid);
        std::string part;
        std::vector<double> v;
        while (std::getline(ss, part, ',')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(part, &used));
                if (used != part.size()) throw std::invalid_argument(part);
            } catch (const std::exception&) {
                throw ValidationError("--grid: '" + part + "' is not a number");
            }
        }
        if (v.size() != 3) throw ValidationError("--grid expects fmin,fmax,points_per_decade");
        cfg.grid = {v[0], v[1], v[2]};
    }
    cfg.validate();
    return cfg;
}

unsigned job_count(const Common& c) {
    if (c.jobs > 0) return c.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

ScenarioKey selected_key(const ScenarioConfig& cfg, const Selector& s) {
    ScenarioKey k;
    DroopKind kind;
    try {
        kind = parse_droop_kind(s.droop);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("--droop: ") + e.what());
    }
    k.droop = DroopSpec::table_default(kind);
    for (const DroopSpec& d : cfg.droops) {
        if (d.kind == kind) k.droop.coefficient = d.coefficient;
    }
    if (s.lpf != "none") {
        try {
            k.droop.lpf_cutoff = std::stod(s.lpf);
        } catch (const std::exception&) {
            throw ValidationError("--lpf: expected a cutoff in Hz or 'none'");
        }
        if (!(*k.droop.lpf_cutoff > 0.0)) throw ValidationError("--lpf: cutoff must be > 0");
    }
    if (!(s.power >= 0.0)) throw ValidationError("--power must be >= 0");
    if (!(s.line > 0.0)) throw ValidationError("--line must be > 0");
    k.power_multiple = s.power;
    k.line_multiple = s.line;
    return k;
}

void ensure_dir(const fs::path& d) {
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + d.string() + "': " + ec.message());
}

int cmd_assess(const Common& c) {
    const ScenarioConfig cfg = build_config(c);
    std::vector<ScenarioResult> results = run_scenario_matrix(cfg, job_count(c));
    emit_reports(results, cfg.outputs);
    write_summary_text(std::cout, results);
    std::cout << "\nreports written to " << cfg.outputs.string() << "\n";
    return kOk;
}

int cmd_impedance(const Common& c, const Selector& s) {
    ScenarioConfig cfg = build_config(c);
    cfg.sim.enabled = false;
    const ScenarioResult r = run_scenario(cfg, selected_key(cfg, s));
    if (!r.ok()) {
        std::cerr << r.id << ": " << r.error << "\n";
        return kNumericalError;
    }
    ensure_dir(cfg.outputs);
    const fs::path p = cfg.outputs / (r.id + "_impedance.csv");
    std::ofstream f(p, std::ios::binary);
    write_frequency_csv(f, r);
    if (!f) throw std::runtime_error("error writing '" + p.string() + "'");
    write_summary_text(std::cout, {r});
    std::cout << "frequency response written to " << p.string() << "\n";
    return kOk;
}

int cmd_simulate(const Common& c, const Selector& s) {
    ScenarioConfig cfg = build_config(c);
    ScenarioResult r = run_scenario(cfg, selected_key(cfg, s), false);
    if (!r.trace) {
        std::cerr << r.id << ": " << r.sim_error << "\n";
        return kNumericalError;
    }
    ensure_dir(cfg.outputs);
    const fs::path p = cfg.outputs / (r.id + "_trace.csv");
    std::ofstream f(p, std::ios::binary);
    write_trace_csv(f, *r.trace, 1);
    if (!f) throw std::runtime_error("error writing '" + p.string() + "'");
    const OscillationReport& o = *r.oscillation;
    std::printf("%s: %s, pk-pk %.3f%%, dominant %.1f Hz%s\n", r.id.c_str(), std::string(to_string(o.verdict)).c_str(),
                100.0 * o.pkpk_ratio, o.dominant_freq, o.diverged ? ", diverged" : "");
    std::cout << "trace written to " << p.string() << "\n";
    return kOk;
}

int cmd_verify(const Common& c, std::size_t points, double fmin, double fmax, const std::vector<double>& lpfs) {
    const ScenarioConfig cfg = build_config(c);
    std::vector<std::optional<double>> filters{std::nullopt};
    for (double f : lpfs) filters.emplace_back(f);
    const std::vector<OracleCase> cases = run_oracle_suite(cfg, filters, fmin, fmax, points, job_count(c));
    ensure_dir(cfg.outputs);
    const fs::path p = cfg.outputs / "verify.csv";
    std::ofstream f(p, std::ios::binary);
    write_oracle_csv(f, cases);
    if (!f) throw std::runtime_error("error writing '" + p.string() + "'");
    bool all = true;
    for (const OracleCase& oc : cases) {
        all = all && oc.passed;
        std::printf("%-4s lpf %-5s  max |Z| error %.3g%%  max phase error %.3g deg  %s\n",
                    std::string(to_string(oc.droop.kind)).c_str(),
                    oc.droop.lpf_cutoff ? format_number(*oc.droop.lpf_cutoff).c_str() : "none",
                    100.0 * oc.max_mag_err, oc.max_phase_err, oc.passed ? "ok" : "MISMATCH");
    }
    std::cout << "details written to " << p.string() << "\n";
    return all ? kOk : kNumericalError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Passivity and time-domain assessment of droop-controlled DC microgrids"};
    app.require_subcommand(1);

    Common common;
    Selector sel;
    auto* assess = app.add_subcommand("assess", "run the full scenario matrix and write reports");
    add_common(assess, common);
    auto* impedance = app.add_subcommand("impedance", "frequency responses of one scenario");
    add_common(impedance, common);
    add_selector(impedance, sel);
    auto* simulate = app.add_subcommand("simulate", "time-domain run of one scenario");
    add_common(simulate, common);
    add_selector(simulate, sel);
    auto* verify = app.add_subcommand("verify", "analytic impedance against injection measurement");
    add_common(verify, common);
    std::size_t points = 20;
    double fmin = 1.0, fmax = 1000.0;
    std::vector<double> lpfs{30.0};
    verify->add_option("--points", points, "log-spaced points");
    verify->add_option("--fmin", fmin, "lowest frequency, Hz");
    verify->add_option("--fmax", fmax, "highest frequency, Hz");
    verify->add_option("--lpf", lpfs, "filter cutoffs checked besides the unfiltered droop");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*assess) return cmd_assess(common);
        if (*impedance) return cmd_impedance(common, sel);
        if (*simulate) return cmd_simulate(common, sel);
        if (*verify) {
            if (!(fmin > 0.0 && fmax > fmin && points >= 2)) throw ValidationError("verify: invalid frequency range");
            return cmd_verify(common, points, fmin, fmax, lpfs);
        }
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalError;
    }
    return kOk;
}
