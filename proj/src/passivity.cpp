#include "dcpass/passivity.hpp"

#include <cmath>
#include <stdexcept>

namespace dcpass {

std::vector<double> logspace(double fmin, double fmax, std::size_t n) {
    if (!(fmin > 0.0 && fmax >= fmin) || n == 0) {
        throw std::invalid_argument("logspace: need 0 < fmin <= fmax and n > 0");
    }
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = fmin;
        return out;
    }
    const double span = std::log10(fmax / fmin);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = fmin * std::pow(10.0, span * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    out.back() = fmax;
    return out;
}

void FrequencyGrid::validate() const {
    if (!(fmin > 0.0) || !(fmax > fmin) || !(points_per_decade > 0.0)) {
        throw std::invalid_argument("frequency grid needs 0 < fmin < fmax and points_per_decade > 0");
    }
}

std::vector<double> FrequencyGrid::points() const {
    validate();
    const double decades = std::log10(fmax / fmin);
    const auto n = static_cast<std::size_t>(std::llround(decades * points_per_decade)) + 1;
    return logspace(fmin, fmax, std::max<std::size_t>(n, 2));
}

std::string_view to_string(Verdict v) { return v == Verdict::Pass ? "PASS" : "FAIL"; }

std::vector<FrequencyBand> PassivityReport::bands_above_threshold() const {
    std::vector<FrequencyBand> out;
    for (const auto& b : non_passive_bands) {
        if (b.f_hi > threshold) {
            out.push_back(b);
        }
    }
    return out;
}

std::vector<Complex> right_half_plane_poles(const RationalTF& z) {
    std::vector<Complex> out;
    for (const Complex& p : z.poles()) {
        if (p.real() > 1e-7 * std::max(1.0, std::abs(p))) {
            out.push_back(p);
        }
    }
    return out;
}

PassivityReport assess_passivity(const RationalTF& z, const std::vector<double>& grid, double threshold,
                                 double tolerance_deg) {
    if (grid.empty()) {
        throw std::invalid_argument("assess_passivity: empty frequency grid");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument("assess_passivity: grid must be strictly ascending");
        }
    }
    PassivityReport rep;
    rep.grid = grid;
    rep.threshold = threshold;
    rep.tolerance_deg = tolerance_deg;
    rep.response.reserve(grid.size());
    rep.phase_deg.reserve(grid.size());
    rep.real_part.reserve(grid.size());
    std::vector<double> excess(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ComplexResponse r = tf_eval(z, grid[i]);
        rep.response.push_back(r.value);
        rep.phase_deg.push_back(r.phase_deg);
        rep.real_part.push_back(r.value.real());
        excess[i] = std::abs(r.phase_deg) - (90.0 + tolerance_deg);
    }

    // Crossing of the excess between two neighbouring points, interpolated in log f.
    const auto crossing = [&](std::size_t a, std::size_t b) {
        const double t = excess[a] / (excess[a] - excess[b]);
        return std::exp(std::log(grid[a]) + t * (std::log(grid[b]) - std::log(grid[a])));
    };
    std::size_t i = 0;
    while (i < grid.size()) {
        if (excess[i] < 0.0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < grid.size() && excess[j + 1] >= 0.0) {
            ++j;
        }
        FrequencyBand band;
        band.f_lo = i == 0 ? grid.front() : crossing(i - 1, i);
        band.f_hi = j + 1 == grid.size() ? grid.back() : crossing(j, j + 1);
        rep.non_passive_bands.push_back(band);
        i = j + 1;
    }

    rep.unstable_poles = right_half_plane_poles(z);
    rep.verdict = rep.bands_above_threshold().empty() && rep.unstable_poles.empty() ? Verdict::Pass : Verdict::Fail;
    return rep;
}

}  // namespace dcpass
