#pragma once

// Frequency grids and passivity reports shared by the converter-level and
// bus-level checks.

#include "dcpass/ratfun.hpp"

#include <string_view>
#include <vector>

namespace dcpass {

struct FrequencyGrid {
    double fmin = 0.1;               // Hz
    double fmax = 10e3;              // Hz
    double points_per_decade = 200;

    /// Log-spaced points from fmin to fmax inclusive.
    std::vector<double> points() const;
    void validate() const;
};

/// n log-spaced points from fmin to fmax inclusive.
std::vector<double> logspace(double fmin, double fmax, std::size_t n);

struct FrequencyBand {
    double f_lo = 0.0;
    double f_hi = 0.0;
};

enum class Verdict { Pass, Fail };
std::string_view to_string(Verdict v);

struct PassivityReport {
    std::vector<double> grid;         // Hz
    std::vector<Complex> response;    // value at each grid point
    std::vector<double> phase_deg;
    std::vector<double> real_part;
    std::vector<FrequencyBand> non_passive_bands;  // disjoint, ascending
    /// Poles with positive real part; a positive-real impedance has none.
    std::vector<Complex> unstable_poles;
    Verdict verdict = Verdict::Pass;
    double threshold = 0.0;       // Hz; bands at or below it do not affect the verdict
    double tolerance_deg = 0.0;   // a point is non-passive when |phase| >= 90 + tolerance

    bool passed() const { return verdict == Verdict::Pass; }
    /// Bands that reach above the threshold.
    std::vector<FrequencyBand> bands_above_threshold() const;
};

/// Evaluates z on the grid and marks every run of points with |phase| >= 90 deg + tolerance_deg
/// (tolerance 0 is exactly Re{z} <= 0). Band edges are refined by linear interpolation of the
/// phase excess in log-frequency between neighbouring grid points. The verdict is Pass iff no
/// band extends above threshold and z has no right-half-plane poles.
/// Throws std::invalid_argument for an empty or non-ascending grid; NearPole from evaluation.
PassivityReport assess_passivity(const RationalTF& z, const std::vector<double>& grid, double threshold,
                                 double tolerance_deg);

/// Roots of the denominator with real part above a small relative tolerance.
std::vector<Complex> right_half_plane_poles(const RationalTF& z);

}  // namespace dcpass
