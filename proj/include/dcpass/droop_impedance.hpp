#pragma once

// Closed-loop small-signal output impedance of a droop-controlled boost
// converter, for the four droop laws, assembled by transfer-function algebra.

#include "dcpass/control.hpp"
#include "dcpass/passivity.hpp"
#include "dcpass/plant.hpp"
#include "dcpass/ratfun.hpp"

#include <map>
#include <optional>
#include <string>

namespace dcpass {

/// Every symbol the impedance expressions refer to. Each is bound from exactly
/// one typed source; assemble_output_impedance() throws UnboundSymbol when an
/// expression needs a symbol that was left empty.
struct ImpedanceSymbols {
    std::optional<double> Dc;      // duty cycle
    std::optional<double> I_L;     // inductor current, A
    std::optional<double> I_o;     // output current, A
    std::optional<double> V_BUS;   // converter terminal voltage, V
    std::optional<double> V_ref;   // no-load voltage reference, V
    std::optional<double> C;       // output capacitance, F
    std::optional<double> R_vd;    // current-droop coefficient d, Ohm
    std::optional<double> k;       // power-droop coefficient k_pv = k_vp, V/W
    std::optional<RationalTF> Z;   // r_bat + r_f + L s
    std::optional<RationalTF> G_c;
    std::optional<RationalTF> G_v;
    std::optional<RationalTF> G_cc;
    std::optional<RationalTF> H;   // droop feedback filter; unity when unfiltered
};

ImpedanceSymbols bind_symbols(const ConverterParams& params, const DroopSpec& droop, const OperatingPoint& op,
                              const ControllerSet& controllers);

struct ConverterImpedanceModel {
    DroopSpec droop;
    OperatingPoint op;
    RationalTF z;  // Ohm
    /// Named sub-expressions kept for diagnostics: Z(s), G_c, G_v or G_cc, H_lpf, num, den.
    std::map<std::string, RationalTF> components;
};

/// Builds z for the given droop kind from a symbol table.
ConverterImpedanceModel assemble_output_impedance(DroopKind kind, const ImpedanceSymbols& sym);

/// Throws UnsolvedOperatingPoint when op is not solved and InconsistentDroopKind
/// when op was solved for another droop law.
ConverterImpedanceModel analytic_output_impedance(const ConverterParams& params, const DroopSpec& droop,
                                                  const OperatingPoint& op, const ControllerSet& controllers);

inline constexpr double kDefaultConverterThresholdHz = 300.0;

/// Non-passive wherever Re{z} <= 0; Pass iff nothing non-passive above threshold.
PassivityReport converter_passivity_report(const ConverterImpedanceModel& model, const std::vector<double>& grid,
                                           double threshold = kDefaultConverterThresholdHz);

}  // namespace dcpass
