#pragma once

// Brute-force reference automata and random input generators shared by the
// unit tests and the acceptance binary.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "gridseam/ras.hpp"

namespace ras_reference {

using gridseam::Complex;
using gridseam::OscillationConfig;
using Log = std::vector<std::pair<std::size_t, gridseam::ActionList>>;

inline std::vector<double> grid(std::size_t n, double dt) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

// Reference: a condition series "has held for `pickup`" at step k when the
// maximal run of true samples ending at k started at least `pickup` earlier.
inline bool held(const std::vector<double>& t, const std::vector<bool>& c, std::size_t k, double pickup) {
    if (!c[k]) return false;
    std::size_t j = k;
    while (j > 0 && c[j - 1]) --j;
    return t[k] - t[j] + 1e-9 >= pickup;
}

// First step at which the condition has held long enough, scanning from scratch.
inline std::optional<std::size_t> first_hold(const std::vector<double>& t, const std::vector<bool>& c, double pickup) {
    for (std::size_t k = 0; k < t.size(); ++k)
        if (held(t, c, k, pickup)) return k;
    return std::nullopt;
}

inline int sign(double d) { return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0); }

// Reference extrema: index i is a turning point when the last nonzero slope
// before it and the first slope after it (which must be nonzero) disagree.
inline std::vector<std::size_t> reference_extrema(const std::vector<double>& p, std::size_t upto) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 <= upto; ++i) {
        const int after = sign(p[i + 1] - p[i]);
        if (after == 0) continue;
        int before = 0;
        for (std::size_t j = i; j >= 1 && before == 0; --j) before = sign(p[j] - p[j - 1]);
        if (before != 0 && before != after) out.push_back(i);
    }
    return out;
}

inline bool reference_oscillating(const std::vector<double>& t, const std::vector<double>& p, std::size_t k,
                           const OscillationConfig& cfg) {
    std::vector<double> vals;
    for (std::size_t i : reference_extrema(p, k))
        if (t[i] >= t[k] - cfg.window_s - 1e-9) vals.push_back(p[i]);
    const std::size_t m = vals.size();
    if (m < 3) return false;
    const double a1 = std::abs(vals[m - 1] - vals[m - 2]);
    const double a0 = std::abs(vals[m - 2] - vals[m - 3]);
    return a1 >= cfg.amplitude_threshold_mw && a1 >= cfg.undamped_ratio * a0;
}

inline bool reference_mho(Complex z, double reach, double angle) {
    // |z - c| <= |c|  <=>  |z|^2 <= reach * Re(z e^{-j angle})
    return std::norm(z) <= reach * std::real(z * std::polar(1.0, -angle)) + 1e-12 * reach * reach;
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 r(20170303);
    return r;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }
inline std::size_t pick(std::size_t a, std::size_t b) { return std::uniform_int_distribution<std::size_t>(a, b)(rng()); }

inline double random_dt() {
    static const double choices[] = {1.0 / 240.0, 1.0 / 60.0, 0.01, 0.05};
    return choices[pick(0, 3)];
}

// Random on/off condition pattern with runs of varied length.
inline std::vector<bool> random_runs(std::size_t n) {
    std::vector<bool> c;
    bool on = uniform(0, 1) < 0.5;
    while (c.size() < n) {
        const std::size_t len = pick(1, 40);
        for (std::size_t i = 0; i < len && c.size() < n; ++i) c.push_back(on);
        on = !on;
    }
    return c;
}

}  // namespace ras_reference
