#include "dcpass/droop_impedance.hpp"

#include "dcpass/errors.hpp"

#include <string>

namespace dcpass {

namespace {

template <typename T>
const T& need(const std::optional<T>& slot, const char* name, DroopKind kind) {
    if (!slot) {
        throw UnboundSymbol(std::string("symbol ") + name + " is unbound for the " + std::string(to_string(kind)) +
                            " impedance");
    }
    return *slot;
}

}  // namespace

ImpedanceSymbols bind_symbols(const ConverterParams& params, const DroopSpec& droop, const OperatingPoint& op,
                              const ControllerSet& controllers) {
    ImpedanceSymbols sym;
    sym.Dc = op.duty;
    sym.I_L = op.i_l;
    sym.I_o = op.i_out;
    sym.V_BUS = op.v_bus;
    sym.V_ref = params.V_o;
    sym.C = params.C_out;
    sym.Z = RationalTF::from_coefficients({params.series_resistance(), params.L}, {1.0});
    sym.G_c = controllers.current.tf();
    sym.H = droop.lpf_cutoff ? droop_lpf(*droop.lpf_cutoff) : RationalTF::constant(1.0);
    if (is_power_droop(droop.kind)) {
        sym.k = droop.coefficient;
    } else {
        sym.R_vd = droop.coefficient;
    }
    if (uses_voltage_loop(droop.kind)) {
        sym.G_v = controllers.voltage.tf();
    } else {
        sym.G_cc = controllers.outer_current.tf();
    }
    return sym;
}

ConverterImpedanceModel assemble_output_impedance(DroopKind kind, const ImpedanceSymbols& sym) {
    const double Dp = 1.0 - need(sym.Dc, "Dc", kind);
    const double I_L = need(sym.I_L, "I_L", kind);
    const double V = need(sym.V_BUS, "V_BUS", kind);
    const double C = need(sym.C, "C", kind);
    const RationalTF& Z = need(sym.Z, "Z(s)", kind);
    const RationalTF& Gc = need(sym.G_c, "G_c", kind);
    const RationalTF& H = need(sym.H, "H", kind);
    const RationalTF sC = RationalTF::from_coefficients({0.0, C}, {1.0});

    ConverterImpedanceModel model;
    model.components["Z(s)"] = Z;
    model.components["G_c"] = Gc;
    model.components["H_lpf"] = H;

    RationalTF num;
    RationalTF den;
    switch (kind) {
        case DroopKind::VI: {
            const double R_vd = need(sym.R_vd, "R_vd", kind);
            const RationalTF& Gv = need(sym.G_v, "G_v", kind);
            model.components["G_v"] = Gv;
            const RationalTF M = Dp * V - I_L * Z;
            num = M * (R_vd * H) * Gc * Gv + V * Gc + Z;
            den = M * Gc * Gv + (V * Gc + Z) * sC + Dp * I_L * Gc + Dp * Dp;
            break;
        }
        case DroopKind::VP: {
            const double k = need(sym.k, "k", kind);
            const double V_ref = need(sym.V_ref, "V_ref", kind);
            const RationalTF& Gv = need(sym.G_v, "G_v", kind);
            model.components["G_v"] = Gv;
            // V_ref - V_BUS is the droop sag k P; the filter acts on P, so only the sag is filtered.
            const RationalTF Vref = V + (V_ref - V) * H;
            const RationalTF kH = k * H;
            num = (Dp * kH * (V * V) - I_L * Z * kH * V) * Gc * Gv + V * Gc + Z;
            den = (Dp * Vref - (Vref / V) * I_L * Z) * Gc * Gv + (sC * V + Dp * I_L) * Gc + sC * Z + Dp * Dp;
            break;
        }
        case DroopKind::IV:
        case DroopKind::PV: {
            const RationalTF& Gcc = need(sym.G_cc, "G_cc", kind);
            model.components["G_cc"] = Gcc;
            // Small-signal gain of the droop law, d i_o* / d v.
            RationalTF droop_gain;
            if (kind == DroopKind::IV) {
                droop_gain = H / need(sym.R_vd, "R_vd", kind);
            } else {
                const double k = need(sym.k, "k", kind);
                droop_gain = H * (need(sym.V_ref, "V_ref", kind) / (k * V * V));
            }
            const RationalTF A = Z + V * Gc;
            const RationalTF B = Dp + I_L * Gc;
            const RationalTF GcGcc = Gc * Gcc;
            num = B * V * GcGcc + (1.0 - I_L * GcGcc) * A;
            den = B * (Dp + V * GcGcc * droop_gain) + A * (sC - I_L * GcGcc * droop_gain);
            break;
        }
    }
    model.components["num"] = num;
    model.components["den"] = den;
    model.z = tf_div(num, den);
    return model;
}

ConverterImpedanceModel analytic_output_impedance(const ConverterParams& params, const DroopSpec& droop,
                                                  const OperatingPoint& op, const ControllerSet& controllers) {
    if (!op.solved()) {
        throw UnsolvedOperatingPoint("operating point has not been solved");
    }
    if (op.droop != droop.kind) {
        throw InconsistentDroopKind("operating point was solved for " + std::string(to_string(op.droop)) +
                                    " but the impedance was requested for " + std::string(to_string(droop.kind)));
    }
    ConverterImpedanceModel model = assemble_output_impedance(droop.kind, bind_symbols(params, droop, op, controllers));
    model.droop = droop;
    model.op = op;
    return model;
}

PassivityReport converter_passivity_report(const ConverterImpedanceModel& model, const std::vector<double>& grid,
                                           double threshold) {
    return assess_passivity(model.z, grid, threshold, 0.0);
}

}  // namespace dcpass
