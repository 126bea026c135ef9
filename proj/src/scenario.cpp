#include "dcpass/scenario.hpp"

#include "dcpass/csv.hpp"
#include "dcpass/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace dcpass {

using nlohmann::json;

ScenarioConfig ScenarioConfig::defaults() {
    ScenarioConfig c;
    for (DroopKind k : {DroopKind::IV, DroopKind::VI, DroopKind::PV, DroopKind::VP}) {
        c.droops.push_back(DroopSpec::table_default(k));
    }
    return c;
}

void ScenarioConfig::validate() const {
    auto check = [](bool ok, const std::string& what) {
        if (!ok) throw ValidationError(what);
    };
    auto wrap = [](auto&& fn) {
        try {
            fn();
        } catch (const std::invalid_argument& e) {
            throw ValidationError(e.what());
        } catch (const BandwidthInfeasible& e) {
            throw ValidationError(e.what());
        }
    };
    wrap([&] { converter.validate(); });
    wrap([&] { line.validate(); });
    wrap([&] { loops.validate(converter.f_sw); });
    wrap([&] { grid.validate(); });
    check(!droops.empty(), "droops must not be empty");
    for (const DroopSpec& d : droops) wrap([&] { d.validate(); });
    check(!cpl_multiples.empty(), "cpl_multiples must not be empty");
    for (double m : cpl_multiples) check(std::isfinite(m) && m >= 0.0, "cpl_multiples must be >= 0");
    check(!line_multiples.empty(), "line_multiples must not be empty");
    for (double m : line_multiples) check(std::isfinite(m) && m > 0.0, "line_multiples must be > 0");
    check(!lpf_candidates.empty(), "lpf_candidates must not be empty");
    for (const auto& f : lpf_candidates) check(!f || (std::isfinite(*f) && *f > 0.0), "lpf cutoffs must be > 0");
    check(!min_lpf_candidates.empty(), "min_lpf_candidates must not be empty");
    for (const auto& f : min_lpf_candidates) {
        check(!f || (std::isfinite(*f) && *f > 0.0), "min_lpf_candidates cutoffs must be > 0");
    }
    check(c_bus > 0.0, "c_bus must be > 0");
    check(p_rated > 0.0, "p_rated must be > 0");
    check(converter_threshold_hz >= 0.0, "converter_threshold_hz must be >= 0");
    check(bus_tolerance_deg >= 0.0 && bus_tolerance_deg < 90.0, "bus_tolerance_deg must lie in [0, 90)");
    check(sim.dt > 0.0 && sim.dt <= 1.0 / (20.0 * loops.f_cc_inner), "sim.dt must lie in (0, 1/(20 f_cc_inner)]");
    check(sim.dwell > 0.0, "sim.dwell must be > 0");
    check(sim.settle_delay >= 0.0, "sim.settle_delay must be >= 0");
    check(sim.window >= kMinSettleWindow, "sim.window must be at least 1 s");
    check(!sim.t_end || *sim.t_end > 0.0, "sim.t_end must be > 0");
    check(sim.record_every >= 1, "sim.record_every must be >= 1");
    check(sim.decimation >= 1, "sim.decimation must be >= 1");
    check(sim.undervoltage_limit_fraction > 0.0 && sim.undervoltage_limit_fraction < 1.0,
          "sim.undervoltage_limit_fraction must lie in (0, 1)");
    check(!outputs.empty(), "outputs must not be empty");
}

namespace {

// Walks one JSON object, rejecting keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ParseError(where() + ": expected an object");
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void number(const std::string& key, double& out) {
        if (const json* v = get(key)) out = as_number(*v, child(key));
    }
    void boolean(const std::string& key, bool& out) {
        if (const json* v = get(key)) {
            if (!v->is_boolean()) throw ParseError("key '" + child(key) + "': expected true or false");
            out = v->get<bool>();
        }
    }
    void count(const std::string& key, std::size_t& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_integer() && !v->is_number_unsigned()) {
                throw ParseError("key '" + child(key) + "': expected an integer");
            }
            const auto n = v->get<long long>();
            if (n < 0) throw ValidationError("key '" + child(key) + "' must be >= 0");
            out = static_cast<std::size_t>(n);
        }
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) throw ParseError("key '" + child(key) + "': expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                out.push_back(as_number((*v)[i], child(key) + "[" + std::to_string(i) + "]"));
            }
        }
    }
    /// Array of cutoffs in Hz; null stands for the unfiltered droop.
    void cutoffs(const std::string& key, std::vector<std::optional<double>>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) throw ParseError("key '" + child(key) + "': expected an array of numbers or null");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                const json& e = (*v)[i];
                if (e.is_null()) {
                    out.emplace_back(std::nullopt);
                } else {
                    out.emplace_back(as_number(e, child(key) + "[" + std::to_string(i) + "]"));
                }
            }
        }
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError("unknown key '" + child(it.key()) + "'");
        }
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) throw ParseError("key '" + path + "': expected a number");
        return v.get<double>();
    }

private:
    std::string where() const { return path_.empty() ? "top level" : "key '" + path_ + "'"; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

DroopSpec parse_droop(const json& v, const std::string& path) {
    auto kind_of = [&](const json& s, const std::string& p) {
        if (!s.is_string()) throw ParseError("key '" + p + "': expected a droop kind string");
        try {
            return parse_droop_kind(s.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw ValidationError("key '" + p + "': " + e.what());
        }
    };
    if (v.is_string()) return DroopSpec::table_default(kind_of(v, path));
    ObjectReader r(v, path);
    const json* k = r.get("kind");
    if (!k) throw ValidationError("key '" + path + "': missing 'kind'");
    DroopSpec d = DroopSpec::table_default(kind_of(*k, r.child("kind")));
    r.number("coefficient", d.coefficient);
    r.finish();
    return d;
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig c = ScenarioConfig::defaults();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        c.validate();
        return c;
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }

    ObjectReader top(j, "");
    if (const json* v = top.get("converter")) {
        ObjectReader r(*v, "converter");
        r.number("E", c.converter.E);
        r.number("r_bat", c.converter.r_bat);
        r.number("L", c.converter.L);
        r.number("r_f", c.converter.r_f);
        r.number("C_out", c.converter.C_out);
        r.number("V_o", c.converter.V_o);
        r.number("f_sw", c.converter.f_sw);
        r.finish();
    }
    if (const json* v = top.get("droops")) {
        if (!v->is_array()) throw ParseError("key 'droops': expected an array");
        c.droops.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            c.droops.push_back(parse_droop((*v)[i], "droops[" + std::to_string(i) + "]"));
        }
    }
    if (const json* v = top.get("line")) {
        ObjectReader r(*v, "line");
        r.number("r_per_m", c.line.r_per_m);
        r.number("l_per_m", c.line.l_per_m);
        r.number("length_m", c.line.length_m);
        r.finish();
    }
    top.numbers("line_multiples", c.line_multiples);
    top.number("c_bus", c.c_bus);
    top.number("p_rated", c.p_rated);
    top.numbers("cpl_multiples", c.cpl_multiples);
    top.cutoffs("lpf_candidates", c.lpf_candidates);
    top.cutoffs("min_lpf_candidates", c.min_lpf_candidates);
    if (const json* v = top.get("loops")) {
        ObjectReader r(*v, "loops");
        r.number("f_cc_inner", c.loops.f_cc_inner);
        r.number("f_v", c.loops.f_v);
        r.number("f_cc_outer", c.loops.f_cc_outer);
        r.finish();
    }
    if (const json* v = top.get("grid")) {
        ObjectReader r(*v, "grid");
        r.number("fmin", c.grid.fmin);
        r.number("fmax", c.grid.fmax);
        r.number("points_per_decade", c.grid.points_per_decade);
        r.finish();
    }
    top.number("converter_threshold_hz", c.converter_threshold_hz);
    top.number("bus_tolerance_deg", c.bus_tolerance_deg);
    if (const json* v = top.get("sim")) {
        ObjectReader r(*v, "sim");
        r.boolean("enabled", c.sim.enabled);
        r.number("dt", c.sim.dt);
        if (const json* t = r.get("t_end"); t && !t->is_null()) c.sim.t_end = ObjectReader::as_number(*t, "sim.t_end");
        r.number("dwell", c.sim.dwell);
        r.number("settle_delay", c.sim.settle_delay);
        r.number("window", c.sim.window);
        r.count("record_every", c.sim.record_every);
        r.count("decimation", c.sim.decimation);
        r.number("undervoltage_limit_fraction", c.sim.undervoltage_limit_fraction);
        r.finish();
    }
    if (const json* v = top.get("outputs")) {
        if (!v->is_string()) throw ParseError("key 'outputs': expected a directory path string");
        c.outputs = v->get<std::string>();
    }
    top.finish();
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string ScenarioKey::id() const {
    std::string s(to_string(droop.kind));
    s += "_P" + format_number(power_multiple) + "x";
    s += droop.lpf_cutoff ? "_lpf" + format_number(*droop.lpf_cutoff) : std::string("_nolpf");
    s += "_line" + format_number(line_multiple) + "x";
    return s;
}

MicrogridScenario make_scenario(const ScenarioConfig& config, const ScenarioKey& key) {
    MicrogridScenario sc;
    sc.converter = config.converter;
    sc.droop = key.droop;
    sc.line = config.line;
    sc.line.length_m *= key.line_multiple;
    sc.c_bus = config.c_bus;
    sc.p_load = key.power_multiple * config.p_rated;
    sc.p_design = config.p_rated;
    sc.loops = config.loops;
    return sc;
}

std::vector<ScenarioKey> expand_matrix(const ScenarioConfig& config) {
    std::vector<ScenarioKey> keys;
    for (const DroopSpec& d : config.droops) {
        for (double pm : config.cpl_multiples) {
            for (double lm : config.line_multiples) {
                for (const auto& lpf : config.lpf_candidates) {
                    ScenarioKey k;
                    k.droop = d;
                    k.droop.lpf_cutoff = lpf;
                    k.power_multiple = pm;
                    k.line_multiple = lm;
                    keys.push_back(k);
                }
            }
        }
    }
    return keys;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

namespace {

SimTrace decimate(const SimTrace& tr, std::size_t every) {
    SimTrace out;
    out.dt = tr.dt * static_cast<double>(every);
    out.integration_dt = tr.integration_dt;
    out.events = tr.events;
    out.diverged = tr.diverged;
    out.divergence_time = tr.divergence_time;
    for (std::size_t i = 0; i < tr.t.size(); i += every) {
        out.t.push_back(tr.t[i]);
        out.states.push_back(tr.states[i]);
        out.v_bus.push_back(tr.v_bus[i]);
        out.p_cpl.push_back(tr.p_cpl[i]);
        out.duty.push_back(tr.duty[i]);
    }
    return out;
}

void run_time_domain(const ScenarioConfig& config, const MicrogridScenario& sc, ScenarioResult& r) {
    double start = 0.0;
    const std::vector<SimEvent> events = staircase_events(sc, config.sim.dwell, &start);
    const double last = events.empty() ? 0.0 : events.back().t;
    const double t_end = config.sim.t_end.value_or(last + config.sim.settle_delay + config.sim.window);
    MicrogridScenario s0 = sc;
    s0.p_load = start;
    SimOptions opt;
    opt.dt = config.sim.dt;
    opt.record_every = config.sim.record_every;
    opt.undervoltage_limit_fraction = config.sim.undervoltage_limit_fraction;
    const SimTrace tr = simulate(s0, events, t_end, opt);
    r.oscillation = detect_oscillation(tr, config.sim.window);
    r.trace = decimate(tr, config.sim.decimation);
}

MinLpfResult min_lpf_for(const ScenarioConfig& config, const ScenarioKey& key) {
    ScenarioKey k = key;
    k.droop.lpf_cutoff.reset();
    return min_lpf_for_passivity(make_scenario(config, k), config.min_lpf_candidates, config.grid.points(),
                                 config.bus_tolerance_deg);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, const ScenarioKey& key, bool with_min_lpf) {
    ScenarioResult r;
    r.key = key;
    r.id = key.id();
    const MicrogridScenario sc = make_scenario(config, key);
    const std::vector<double> grid = config.grid.points();
    try {
        const MicrogridModel m = build_microgrid(sc);
        r.op = m.op;
        r.converter = converter_passivity_report(m.converter, grid, config.converter_threshold_hz);
        r.bus = system_passivity_check(m.z_bus, grid, config.bus_tolerance_deg);
        if (with_min_lpf) r.min_lpf = min_lpf_for(config, key);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    if (config.sim.enabled) {
        try {
            run_time_domain(config, sc, r);
        } catch (const std::exception& e) {
            r.sim_error = e.what();
        }
    }
    return r;
}

std::vector<ScenarioResult> run_scenario_matrix(const ScenarioConfig& config, unsigned jobs) {
    config.validate();
    const std::vector<ScenarioKey> keys = expand_matrix(config);
    std::vector<ScenarioResult> results(keys.size());
    parallel_for(keys.size(), jobs, [&](std::size_t i) { results[i] = run_scenario(config, keys[i], false); });

    // One search per (droop, power, line); every filter variant of the group shares it.
    const std::size_t per_group = config.lpf_candidates.size();
    const std::size_t groups = keys.size() / per_group;
    std::vector<std::optional<MinLpfResult>> found(groups);
    std::vector<std::string> failed(groups);
    parallel_for(groups, jobs, [&](std::size_t g) {
        try {
            found[g] = min_lpf_for(config, keys[g * per_group]);
        } catch (const std::exception& e) {
            failed[g] = e.what();
        }
    });
    for (std::size_t i = 0; i < results.size(); ++i) {
        const std::size_t g = i / per_group;
        results[i].min_lpf = found[g];
        if (!found[g] && results[i].error.empty()) results[i].error = "min-LPF search: " + failed[g];
    }
    return results;
}

namespace {

std::string short_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::string bands_text(const std::vector<FrequencyBand>& bands, std::string (*fmt)(double) = format_number) {
    std::string s;
    for (const FrequencyBand& b : bands) {
        if (!s.empty()) s += ';';
        s += fmt(b.f_lo) + "-" + fmt(b.f_hi);
    }
    return s;
}

std::string_view outcome_text(MinLpfOutcome o) {
    switch (o) {
        case MinLpfOutcome::NotNeeded: return "not_needed";
        case MinLpfOutcome::Found: return "found";
        case MinLpfOutcome::NoCandidatePasses: return "no_candidate_passes";
    }
    return "?";
}

std::string lpf_text(const std::optional<double>& f) { return f ? format_number(*f) : std::string("none"); }

}  // namespace

void write_frequency_csv(std::ostream& out, const ScenarioResult& r) {
    CsvWriter w(out);
    w.row({"f_hz", "conv_re", "conv_im", "conv_mag_db", "conv_phase_deg", "bus_re", "bus_im", "bus_mag_db",
           "bus_phase_deg"});
    if (!r.converter || !r.bus) return;
    for (std::size_t i = 0; i < r.converter->grid.size(); ++i) {
        const ComplexResponse c = make_response(r.converter->grid[i], r.converter->response[i]);
        const ComplexResponse b = make_response(r.bus->grid[i], r.bus->response[i]);
        w.numbers({c.frequency, c.value.real(), c.value.imag(), c.magnitude_db, c.phase_deg, b.value.real(),
                   b.value.imag(), b.magnitude_db, b.phase_deg});
    }
}

void write_summary_csv(std::ostream& out, const std::vector<ScenarioResult>& results) {
    CsvWriter w(out);
    w.row({"scenario", "droop", "coefficient", "power_multiple", "lpf_hz", "line_multiple", "v_bus", "v_load",
           "duty", "converter_verdict", "converter_bands_hz", "bus_verdict", "bus_bands_hz", "bus_rhp_poles",
           "min_lpf_outcome", "min_lpf_hz", "sim_verdict", "pkpk_ratio", "dominant_freq_hz", "growth_ratio",
           "error"});
    for (const ScenarioResult& r : results) {
        std::vector<std::string> f;
        f.push_back(r.id);
        f.emplace_back(to_string(r.key.droop.kind));
        f.push_back(format_number(r.key.droop.coefficient));
        f.push_back(format_number(r.key.power_multiple));
        f.push_back(lpf_text(r.key.droop.lpf_cutoff));
        f.push_back(format_number(r.key.line_multiple));
        f.push_back(r.op ? format_number(r.op->v_bus) : "");
        f.push_back(r.op ? format_number(r.op->v_load) : "");
        f.push_back(r.op ? format_number(r.op->duty) : "");
        f.push_back(r.converter ? std::string(to_string(r.converter->verdict)) : "");
        f.push_back(r.converter ? bands_text(r.converter->non_passive_bands) : "");
        f.push_back(r.bus ? std::string(to_string(r.bus->verdict)) : "");
        f.push_back(r.bus ? bands_text(r.bus->non_passive_bands) : "");
        f.push_back(r.bus ? std::to_string(r.bus->unstable_poles.size()) : "");
        f.push_back(r.min_lpf ? std::string(outcome_text(r.min_lpf->outcome)) : "");
        f.push_back(r.min_lpf && r.min_lpf->cutoff_hz ? format_number(*r.min_lpf->cutoff_hz) : "");
        f.push_back(r.oscillation ? std::string(to_string(r.oscillation->verdict)) : "");
        f.push_back(r.oscillation ? format_number(r.oscillation->pkpk_ratio) : "");
        f.push_back(r.oscillation ? format_number(r.oscillation->dominant_freq) : "");
        f.push_back(r.oscillation ? format_number(r.oscillation->growth_ratio) : "");
        std::string err = r.error;
        if (!r.sim_error.empty()) err += (err.empty() ? "" : "; ") + std::string("sim: ") + r.sim_error;
        f.push_back(err);
        w.row(f);
    }
}

void write_summary_text(std::ostream& out, const std::vector<ScenarioResult>& results) {
    std::size_t bus_pass = 0, sim_unstable = 0, errors = 0;
    for (const ScenarioResult& r : results) {
        if (r.bus && r.bus->passed()) ++bus_pass;
        if (r.oscillation && r.oscillation->verdict == OscillationVerdict::Unstable) ++sim_unstable;
        if (!r.ok() || !r.sim_error.empty()) ++errors;
    }
    out << results.size() << " scenarios: " << bus_pass << " with a passive bus, " << sim_unstable
        << " unstable in the time domain, " << errors << " with errors\n";

    std::string_view droop;
    for (const ScenarioResult& r : results) {
        if (to_string(r.key.droop.kind) != droop) {
            droop = to_string(r.key.droop.kind);
            out << "\n" << droop << " droop (coefficient " << format_number(r.key.droop.coefficient) << ")\n";
        }
        out << "  P=" << format_number(r.key.power_multiple) << "x, line " << format_number(r.key.line_multiple)
            << "x, LPF " << (r.key.droop.lpf_cutoff ? format_number(*r.key.droop.lpf_cutoff) + " Hz" : "none") << ": ";
        if (!r.ok()) {
            out << "error: " << r.error << "\n";
            continue;
        }
        out << "bus " << to_string(r.bus->verdict);
        const auto& bb = r.bus->non_passive_bands;
        if (!bb.empty()) out << " (non-passive " << bands_text(bb, short_number) << " Hz)";
        if (!r.bus->unstable_poles.empty()) out << " with " << r.bus->unstable_poles.size() << " unstable poles";
        out << ", converter " << to_string(r.converter->verdict) << " above "
            << format_number(r.converter->threshold) << " Hz";
        if (r.min_lpf) {
            switch (r.min_lpf->outcome) {
                case MinLpfOutcome::NotNeeded: out << ", no LPF needed"; break;
                case MinLpfOutcome::Found: out << ", needs LPF <= " << format_number(*r.min_lpf->cutoff_hz) << " Hz"; break;
                case MinLpfOutcome::NoCandidatePasses: out << ", no candidate LPF restores passivity"; break;
            }
        }
        if (r.oscillation) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * r.oscillation->pkpk_ratio);
            out << "; time domain " << to_string(r.oscillation->verdict) << " (pk-pk " << buf;
            if (r.oscillation->verdict != OscillationVerdict::Stable) {
                std::snprintf(buf, sizeof buf, "%.1f", r.oscillation->dominant_freq);
                out << " at " << buf << " Hz";
            }
            out << ")";
        } else if (!r.sim_error.empty()) {
            out << "; time domain error: " << r.sim_error;
        }
        out << "\n";
    }
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    return f;
}

void close_checked(std::ofstream& f, const std::filesystem::path& p) {
    f.close();
    if (!f) throw std::runtime_error("error writing '" + p.string() + "'");
}

}  // namespace

void emit_reports(std::vector<ScenarioResult>& results, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    for (const fs::path& d : {dir, dir / "freq", dir / "trace"}) {
        fs::create_directories(d, ec);
        if (ec) throw std::runtime_error("cannot create directory '" + d.string() + "': " + ec.message());
    }
    for (ScenarioResult& r : results) {
        r.artifacts.clear();
        if (r.converter && r.bus) {
            const fs::path p = dir / "freq" / (r.id + ".csv");
            auto f = open_out(p);
            write_frequency_csv(f, r);
            close_checked(f, p);
            r.artifacts.push_back(p);
        }
        if (r.trace) {
            const fs::path p = dir / "trace" / (r.id + ".csv");
            auto f = open_out(p);
            write_trace_csv(f, *r.trace, 1);
            close_checked(f, p);
            r.artifacts.push_back(p);
        }
    }
    const fs::path sp = dir / "summary.csv";
    auto s = open_out(sp);
    write_summary_csv(s, results);
    close_checked(s, sp);
    const fs::path tp = dir / "summary.txt";
    auto t = open_out(tp);
    write_summary_text(t, results);
    close_checked(t, tp);
}

std::vector<OracleCase> run_oracle_suite(const ScenarioConfig& config, const std::vector<std::optional<double>>& lpfs,
                                         double fmin, double fmax, std::size_t n, unsigned jobs) {
    const std::vector<double> freqs = logspace(fmin, fmax, n);
    std::vector<OracleCase> cases;
    std::vector<MicrogridScenario> scenarios;
    for (const DroopSpec& base : config.droops) {
        for (const auto& lpf : lpfs) {
            OracleCase c;
            c.droop = base;
            c.droop.lpf_cutoff = lpf;
            c.frequency = freqs;
            c.measured.resize(n);
            c.errors.resize(n);
            ScenarioKey k{c.droop, 1.0, 1.0};
            scenarios.push_back(make_scenario(config, k));
            const MicrogridModel m = build_microgrid(scenarios.back());
            for (double f : freqs) c.analytic.push_back(tf_eval(m.converter.z, f).value);
            cases.push_back(std::move(c));
        }
    }
    InjectionOptions opt;
    opt.sim.dt = config.sim.dt;
    parallel_for(cases.size() * n, jobs, [&](std::size_t idx) {
        const std::size_t ci = idx / n, fi = idx % n;
        try {
            cases[ci].measured[fi] = measure_impedance_injection(scenarios[ci], freqs[fi], opt);
        } catch (const std::exception& e) {
            cases[ci].errors[fi] = e.what();
        }
    });
    for (OracleCase& c : cases) {
        c.passed = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (!c.measured[i]) {
                c.passed = false;
                c.max_mag_err = c.max_phase_err = INFINITY;
                continue;
            }
            const Complex a = c.analytic[i], m = *c.measured[i];
            const double mag = std::abs(std::abs(m) / std::abs(a) - 1.0);
            const double ph = std::abs(std::arg(m / a)) * 180.0 / std::numbers::pi;
            c.max_mag_err = std::max(c.max_mag_err, mag);
            c.max_phase_err = std::max(c.max_phase_err, ph);
        }
        if (!(c.max_mag_err <= kOracleMagTol && c.max_phase_err <= kOraclePhaseTolDeg)) c.passed = false;
    }
    return cases;
}

void write_oracle_csv(std::ostream& out, const std::vector<OracleCase>& cases) {
    CsvWriter w(out);
    w.row({"droop", "lpf_hz", "f_hz", "analytic_re", "analytic_im", "measured_re", "measured_im", "mag_err",
           "phase_err_deg", "error"});
    for (const OracleCase& c : cases) {
        for (std::size_t i = 0; i < c.frequency.size(); ++i) {
            const Complex a = c.analytic[i];
            std::vector<std::string> f{std::string(to_string(c.droop.kind)), lpf_text(c.droop.lpf_cutoff),
                                       format_number(c.frequency[i]), format_number(a.real()),
                                       format_number(a.imag())};
            if (c.measured[i]) {
                const Complex m = *c.measured[i];
                f.push_back(format_number(m.real()));
                f.push_back(format_number(m.imag()));
                f.push_back(format_number(std::abs(m) / std::abs(a) - 1.0));
                f.push_back(format_number(std::arg(m / a) * 180.0 / std::numbers::pi));
                f.emplace_back();
            } else {
                f.insert(f.end(), {"", "", "", "", c.errors[i]});
            }
            w.row(f);
        }
    }
}

}  // namespace dcpass
