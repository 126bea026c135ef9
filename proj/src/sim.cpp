#include "dcpass/sim.hpp"

#include "dcpass/csv.hpp"
#include "dcpass/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace dcpass {

std::array<double, StateVector::size> StateVector::to_array() const {
    return {i_l, v_cout, i_line, v_cbus, x_cc, x_v, x_occ, x_lpf};
}

StateVector StateVector::from_array(const std::array<double, size>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
}

std::string_view to_string(OscillationVerdict v) {
    switch (v) {
        case OscillationVerdict::Stable: return "stable";
        case OscillationVerdict::Marginal: return "marginal";
        case OscillationVerdict::Unstable: return "unstable";
    }
    return "?";
}

namespace {

using State = std::array<double, StateVector::size>;
enum : std::size_t { IL, VC, ILINE, VBUS, XCC, XV, XOCC, XLPF };

struct Outputs {
    double duty = 0.0;
    double i_o = 0.0;    // converter output current, A
    double i_cpl = 0.0;  // load current, A
    double i_inj = 0.0;  // injected current, A
};

// Averaged plant plus control chain. Everything the right-hand side needs lives
// here so one instance can be stepped by several drivers.
class Model {
public:
    Model(const MicrogridScenario& sc, const SimOptions& opt) : p_(sc.converter), opt_(opt) {
        sc.validate();
        if (!(opt.dt > 0.0) || opt.dt > 1.0 / (20.0 * sc.loops.f_cc_inner)) {
            throw InvalidTimestep("dt must lie in (0, 1/(20 f_cc_inner)]");
        }
        if (!(sc.line.inductance() > 0.0)) throw std::invalid_argument("simulation needs a line with inductance");
        kind_ = sc.droop.kind;
        coef_ = sc.droop.coefficient;
        wc_ = sc.droop.lpf_cutoff ? 2.0 * std::numbers::pi * *sc.droop.lpf_cutoff : 0.0;
        const OperatingPoint design = solve_operating_point(sc.converter, sc.droop, sc.p_design);
        ctl_ = design_controllers(sc.converter, design, sc.loops);
        r_line_ = sc.line.resistance();
        l_line_ = sc.line.inductance();
        c_bus_ = sc.c_bus;
    }

    void set_power(double p) { p_cpl_ = p; }
    double power() const { return p_cpl_; }
    void set_injection(double amplitude, double freq_hz, double t0) {
        inj_amp_ = amplitude;
        inj_w_ = 2.0 * std::numbers::pi * freq_hz;
        inj_t0_ = t0;
    }
    void stop_injection() { inj_amp_ = 0.0; }

    State equilibrium(const OperatingPoint& op) const {
        State x{};
        x[IL] = op.i_l;
        x[VC] = op.v_bus;
        x[ILINE] = op.i_out;
        x[VBUS] = op.v_load;
        x[XCC] = op.duty;
        if (uses_voltage_loop(kind_)) {
            x[XV] = op.i_l;
        } else {
            x[XOCC] = op.i_l;
        }
        x[XLPF] = measured(op.v_bus, op.i_out);
        return x;
    }

    double cpl_current(double v) const {
        if (p_cpl_ <= 0.0) return 0.0;
        const double v_uv = opt_.undervoltage_limit_fraction * p_.V_o;
        if (v >= v_uv) return p_cpl_ / v;
        if (v >= opt_.shed_fraction * p_.V_o) return p_cpl_ / v_uv;
        return 0.0;
    }

    double injection(double t) const { return inj_amp_ == 0.0 ? 0.0 : inj_amp_ * std::sin(inj_w_ * (t - inj_t0_)); }

    void derivative(const State& x, double t, State& dx, Outputs* out = nullptr) const {
        const double i_inj = injection(t);
        const bool at_bus = opt_.injection_node == InjectionNode::LoadBus;
        const double i_o = at_bus ? x[ILINE] : x[ILINE] - i_inj;
        const double i_cpl = cpl_current(x[VBUS]);
        dx.fill(0.0);
        dx[ILINE] = (x[VC] - r_line_ * x[ILINE] - x[VBUS]) / l_line_;
        dx[VBUS] = (x[ILINE] - i_cpl + (at_bus ? i_inj : 0.0)) / c_bus_;
        double duty = x[XCC];
        if (!opt_.ideal_source) {
            const double m = measured(x[VC], i_o);
            const double fb = wc_ > 0.0 ? x[XLPF] : m;
            if (wc_ > 0.0) dx[XLPF] = wc_ * (m - x[XLPF]);

            double il_ref = 0.0;
            if (uses_voltage_loop(kind_)) {
                const double v_ref = p_.V_o - coef_ * fb;  // d i_o or k P
                const double e = v_ref - x[VC];
                il_ref = ctl_.voltage.kp * e + x[XV];
                dx[XV] = ctl_.voltage.ki * e;
            } else {
                double io_ref;
                if (kind_ == DroopKind::IV) {
                    io_ref = (p_.V_o - fb) / coef_;
                } else {
                    io_ref = (p_.V_o - fb) / (coef_ * std::max(fb, 1e-3 * p_.V_o));
                }
                const double e = io_ref - i_o;
                il_ref = ctl_.outer_current.kp * e + x[XOCC];
                dx[XOCC] = ctl_.outer_current.ki * e;
            }
            const double e = il_ref - x[IL];
            const double u = ctl_.current.kp * e + x[XCC];
            duty = std::clamp(u, opt_.duty_min, opt_.duty_max);
            const bool winding_up = (u > opt_.duty_max && e > 0.0) || (u < opt_.duty_min && e < 0.0);
            dx[XCC] = winding_up ? 0.0 : ctl_.current.ki * e;
            dx[IL] = (p_.E - p_.series_resistance() * x[IL] - (1.0 - duty) * x[VC]) / p_.L;
            dx[VC] = ((1.0 - duty) * x[IL] - i_o) / p_.C_out;
        }
        if (out) *out = {duty, i_o, i_cpl, i_inj};
    }

    void rk4(State& x, double t, double h) const {
        State k1, k2, k3, k4, tmp;
        derivative(x, t, k1);
        for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        derivative(tmp, t + 0.5 * h, k2);
        for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        derivative(tmp, t + 0.5 * h, k3);
        for (std::size_t i = 0; i < x.size(); ++i) tmp[i] = x[i] + h * k3[i];
        derivative(tmp, t + h, k4);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    bool diverged(const State& x) const {
        for (double v : x) {
            if (!std::isfinite(v) || std::abs(v) > opt_.divergence_limit) return true;
        }
        return false;
    }

private:
    double measured(double v, double i_o) const {
        switch (kind_) {
            case DroopKind::VI: return i_o;
            case DroopKind::VP: return v * i_o;
            case DroopKind::IV:
            case DroopKind::PV: return v;
        }
        return 0.0;
    }

    ConverterParams p_;
    SimOptions opt_;
    DroopKind kind_ = DroopKind::VI;
    double coef_ = 0.0;
    double wc_ = 0.0;
    ControllerSet ctl_;
    double r_line_ = 0.0;
    double l_line_ = 0.0;
    double c_bus_ = 0.0;
    double p_cpl_ = 0.0;
    double inj_amp_ = 0.0;
    double inj_w_ = 0.0;
    double inj_t0_ = 0.0;
};

}  // namespace

SimTrace simulate(const MicrogridScenario& scenario, const std::vector<SimEvent>& events, double t_end,
                  const SimOptions& options) {
    Model model(scenario, options);
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!(events[i].t >= 0.0) || (i > 0 && events[i].t < events[i - 1].t)) {
            throw std::invalid_argument("simulation events must be time-ordered and non-negative");
        }
        if (events[i].t >= t_end) throw std::invalid_argument("t_end must exceed every event time");
    }
    if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");

    const OperatingPoint op =
        solve_operating_point(scenario.converter, scenario.droop, scenario.p_load, scenario.line.resistance());
    model.set_power(scenario.p_load);
    State x = model.equilibrium(op);

    const double h = options.dt;
    const auto steps = static_cast<std::size_t>(std::llround(t_end / h));
    const std::size_t every = std::max<std::size_t>(1, options.record_every);

    SimTrace trace;
    trace.dt = h * static_cast<double>(every);
    trace.integration_dt = h;
    trace.events = events;
    const std::size_t expected = steps / every + 1;
    trace.t.reserve(expected);
    trace.states.reserve(expected);
    trace.v_bus.reserve(expected);
    trace.p_cpl.reserve(expected);
    trace.duty.reserve(expected);

    std::size_t next_event = 0;
    State dx;
    Outputs out;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * h;
        while (next_event < events.size() && events[next_event].t <= t + 0.5 * h) {
            const SimEvent& ev = events[next_event++];
            switch (ev.kind) {
                case SimEventKind::SetCplPower: model.set_power(ev.power); break;
                case SimEventKind::InjectStart: model.set_injection(ev.amplitude, ev.frequency, ev.t); break;
                case SimEventKind::InjectStop: model.stop_injection(); break;
            }
        }
        if (k % every == 0) {
            model.derivative(x, t, dx, &out);
            trace.t.push_back(t);
            trace.states.push_back(StateVector::from_array(x));
            trace.v_bus.push_back(x[VBUS]);
            trace.p_cpl.push_back(out.i_cpl * x[VBUS]);
            trace.duty.push_back(out.duty);
        }
        if (k == steps) break;
        model.rk4(x, t, h);
        if (model.diverged(x)) {
            trace.diverged = true;
            trace.divergence_time = t + h;
            break;
        }
    }
    return trace;
}

std::vector<SimEvent> staircase_events(const MicrogridScenario& scenario, double dwell, double* start_power) {
    if (!(dwell > 0.0)) throw std::invalid_argument("dwell must be positive");
    std::vector<SimEvent> events;
    const double rated = scenario.p_design;
    const double target = scenario.p_load;
    if (target <= rated * (1.0 + 1e-9)) {
        *start_power = target;
        return events;
    }
    *start_power = rated;
    double t = dwell;
    for (int m = 2; m * rated < target * (1.0 - 1e-9); ++m, t += dwell) {
        events.push_back({t, SimEventKind::SetCplPower, m * rated, 0.0, 0.0});
    }
    events.push_back({t, SimEventKind::SetCplPower, target, 0.0, 0.0});
    return events;
}

namespace {

std::size_t smooth_length(std::size_t n) {
    for (; n > 1; --n) {
        std::size_t m = n;
        for (std::size_t p : {2u, 3u, 5u}) {
            while (m % p == 0) m /= p;
        }
        if (m == 1) return n;
    }
    return n;
}

double dominant_frequency(const std::vector<double>& w, double dt) {
    std::size_t n = smooth_length(w.size());
    if (n < 4) return 0.0;
    const std::size_t off = w.size() - n;
    // Detrend with a least-squares line.
    double st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i);
        st += ti;
        sv += w[off + i];
        stt += ti * ti;
        stv += ti * w[off + i];
    }
    const double nn = static_cast<double>(n);
    const double slope = (nn * stv - st * sv) / (nn * stt - st * st);
    const double icpt = (sv - slope * st) / nn;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = w[off + i] - (icpt + slope * static_cast<double>(i));
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, y);
    std::size_t best = 0;
    double best_mag = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double mag = std::abs(spec[k]);
        if (mag > best_mag) {
            best_mag = mag;
            best = k;
        }
    }
    return static_cast<double>(best) / (nn * dt);
}

}  // namespace

OscillationReport detect_oscillation(const SimTrace& trace, double settle_window) {
    OscillationReport r;
    r.diverged = trace.diverged;
    if (!(settle_window >= kMinSettleWindow)) {
        throw WindowTooShort("settle window must cover ten cycles of 10 Hz (1 s)");
    }
    if (trace.t.empty()) throw WindowTooShort("empty trace");
    const double span = trace.t.back() - trace.t.front();
    if (!trace.diverged && span + 0.5 * trace.dt < settle_window) {
        throw WindowTooShort("trace is shorter than the settle window");
    }
    const double t0 = trace.t.back() - settle_window;
    const auto first = std::lower_bound(trace.t.begin(), trace.t.end(), t0 - 0.5 * trace.dt) - trace.t.begin();
    std::vector<double> w(trace.v_bus.begin() + first, trace.v_bus.end());
    if (w.size() < 2) {
        r.verdict = OscillationVerdict::Unstable;
        return r;
    }

    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    r.pkpk_ratio = (*hi - *lo) / std::abs(mean);

    constexpr std::size_t kSegments = 4;
    const std::size_t seg = w.size() / kSegments;
    auto seg_pkpk = [&](std::size_t s) {
        const auto b = w.begin() + static_cast<std::ptrdiff_t>(s * seg);
        const auto [a, c] = std::minmax_element(b, b + static_cast<std::ptrdiff_t>(seg));
        return *c - *a;
    };
    bool growing = false;
    if (seg >= 2) {
        const double first_pk = seg_pkpk(0);
        const double last_pk = seg_pkpk(kSegments - 1);
        r.growth_ratio = first_pk > 0.0 ? last_pk / first_pk : (last_pk > 0.0 ? INFINITY : 1.0);
        growing = r.growth_ratio > 1.5 && last_pk > 1e-4 * std::abs(mean);
    }
    r.dominant_freq = dominant_frequency(w, trace.dt);

    if (trace.diverged || growing || r.pkpk_ratio > 0.05) {
        r.verdict = OscillationVerdict::Unstable;
    } else if (r.pkpk_ratio >= 0.01) {
        r.verdict = OscillationVerdict::Marginal;
    } else {
        r.verdict = OscillationVerdict::Stable;
    }
    return r;
}

Complex measure_impedance_injection(const MicrogridScenario& scenario, double f, const InjectionOptions& options) {
    if (!(f > 0.0)) throw std::invalid_argument("injection frequency must be positive");
    if (!(options.amplitude_fraction > 0.0)) throw std::invalid_argument("injection amplitude must be positive");
    Model model(scenario, options.sim);
    const OperatingPoint op =
        solve_operating_point(scenario.converter, scenario.droop, scenario.p_load, scenario.line.resistance());
    model.set_power(scenario.p_load);
    State x = model.equilibrium(op);

    // Integer number of steps per period so the correlation is exact over whole periods.
    const auto per_period = static_cast<std::size_t>(std::ceil(1.0 / (f * options.sim.dt) - 1e-9));
    const double h = 1.0 / (f * static_cast<double>(per_period));
    const double i_dc = op.i_out > 0.0 ? op.i_out : scenario.p_design / scenario.converter.V_o;
    const double amp = options.amplitude_fraction * i_dc;
    model.set_injection(amp, f, 0.0);

    const std::size_t discard =
        std::max<std::size_t>(options.discard_periods, static_cast<std::size_t>(std::ceil(options.discard_min_time * f)));
    std::size_t measure =
        std::max<std::size_t>(options.measure_periods, static_cast<std::size_t>(std::ceil(options.min_measure_time * f)));
    measure += measure % 2;
    const std::size_t half = measure / 2 * per_period;

    const bool at_bus = options.sim.injection_node == InjectionNode::LoadBus;
    const double v_dc = at_bus ? op.v_load : op.v_bus;
    const double io_dc = at_bus ? 0.0 : op.i_out;

    std::size_t k = 0;
    const std::size_t k_discard = discard * per_period;
    for (; k < k_discard; ++k) {
        model.rk4(x, static_cast<double>(k) * h, h);
        if (model.diverged(x)) throw UnstableBase("scenario diverged before the measurement window");
    }
    Complex V[2]{}, I[2]{};
    State dx;
    Outputs out;
    for (std::size_t j = 0; j < 2 * half; ++j, ++k) {
        model.rk4(x, static_cast<double>(k) * h, h);
        if (model.diverged(x)) throw UnstableBase("scenario diverged during the measurement window");
        const std::size_t kk = k + 1;
        model.derivative(x, static_cast<double>(kk) * h, dx, &out);
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(kk % per_period) /
                             static_cast<double>(per_period);
        const Complex rot = std::polar(1.0, -theta);
        const double v = (at_bus ? x[VBUS] : x[VC]) - v_dc;
        const double i = (at_bus ? out.i_inj : out.i_o) - io_dc;
        V[j / half] += v * rot;
        I[j / half] += i * rot;
    }
    const Complex Vt = V[0] + V[1];
    const Complex It = I[0] + I[1];
    const double n = static_cast<double>(2 * half);
    if (std::abs(It) / n < 1e-9 * amp || std::abs(Vt) / n < 1e-13 * std::max(1.0, v_dc)) {
        throw PoorExcitation("injection response is below the numerical floor");
    }
    const double sign = at_bus ? 1.0 : -1.0;
    const Complex z = sign * Vt / It;
    const Complex z1 = sign * V[0] / I[0];
    const Complex z2 = sign * V[1] / I[1];
    if (std::abs(z1 - z2) > options.consistency_tol * std::abs(z)) {
        throw UnstableBase("response drifts between the two halves of the measurement window");
    }
    return z;
}

std::vector<MeasuredPoint> frequency_sweep_measured(const MicrogridScenario& scenario, const std::vector<double>& grid,
                                                    const InjectionOptions& options) {
    std::vector<MeasuredPoint> pts;
    pts.reserve(grid.size());
    for (double f : grid) {
        MeasuredPoint p;
        p.frequency = f;
        try {
            p.value = measure_impedance_injection(scenario, f, options);
        } catch (const std::exception& e) {
            p.error = e.what();
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

void write_trace_csv(std::ostream& out, const SimTrace& trace, std::size_t decimation) {
    if (decimation == 0) throw std::invalid_argument("decimation must be at least 1");
    CsvWriter w(out);
    w.row({"t", "v_bus", "i_l", "i_line", "duty", "p_cpl"});
    for (std::size_t i = 0; i < trace.t.size(); i += decimation) {
        const StateVector& s = trace.states[i];
        w.numbers({trace.t[i], trace.v_bus[i], s.i_l, s.i_line, trace.duty[i], trace.p_cpl[i]});
    }
}

}  // namespace dcpass
