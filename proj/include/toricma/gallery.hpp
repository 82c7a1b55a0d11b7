#pragma once

// The series v(z) = sum_k 2^{-k} log|z - 2^{-k}|, its clamp u = max(v, -1),
// and an oscillation scan for locating discontinuities of an evaluator.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "toricma/error.hpp"

namespace toricma {

struct SeriesValue {
    double value = 0.0;       ///< partial sum over k <= K (-inf at a pole)
    double tail_bound = 0.0;  ///< bound on |sum over k > K|
};

/// Partial sum of v to order K with a bound on the neglected tail.
/// The tail bound adds the exact absolute values of the next 64 terms and a
/// crude estimate beyond them; at z = 0 the tail is summed in closed form.
inline SeriesValue example_v(std::complex<double> z, int K) {
    if (K < 1) throw DomainError("example_v: order must be at least 1");
    SeriesValue out;
    double w = 1.0;
    for (int k = 1; k <= K; ++k) {
        w *= 0.5;
        const double d = std::abs(z - w);
        if (d == 0.0) {
            out.value = -std::numeric_limits<double>::infinity();
            out.tail_bound = 0.0;
            return out;
        }
        out.value += w * std::log(d);
    }
    const double tail_start = std::ldexp(1.0, -K);  // 2^{-K}
    if (z == 0.0) {
        // sum_{k>K} k 2^{-k} log 2 = (K + 2) 2^{-K} log 2
        out.tail_bound = (K + 2) * tail_start * std::numbers::ln2;
        return out;
    }
    double bound = 0.0;
    double wk = tail_start;
    for (int k = K + 1; k <= K + 64; ++k) {
        wk *= 0.5;
        const double d = std::abs(z - wk);
        if (d == 0.0) {
            out.tail_bound = std::numeric_limits<double>::infinity();
            return out;
        }
        bound += wk * std::abs(std::log(d));
    }
    // k > K + 64: |z - 2^{-k}| lies within 2^{-K-65} of |z|.
    const double eps = std::ldexp(1.0, -(K + 65));
    const double r = std::abs(z);
    if (r <= 2 * eps) {
        out.tail_bound = std::numeric_limits<double>::infinity();
        return out;
    }
    const double worst_log = std::max(std::abs(std::log(r + eps)), std::abs(std::log(r - eps)));
    bound += std::ldexp(1.0, -(K + 64)) * worst_log;
    out.tail_bound = bound;
    return out;
}

/// u(z, w) = max(v(z), -1); exactly -1 at the poles of v.
inline double example_u(std::complex<double> z, std::complex<double> /*w*/, int K) {
    const auto v = example_v(z, K);
    return std::max(v.value, -1.0);
}

struct ScanPoint {
    std::complex<double> z;
    std::vector<double> oscillation;  ///< one value per ladder radius
    bool flagged = false;
};

struct ScanOptions {
    std::vector<double> ladder{1e-1, 1e-2, 1e-3};
    int spokes = 16;
    int rings = 4;
};

/// Oscillation of f over discs of the ladder radii around each point (centre,
/// `rings` concentric circles of `spokes` points). A point is flagged when the
/// oscillation exceeds the threshold on every rung of the ladder.
inline std::vector<ScanPoint> discontinuity_scan(const std::function<double(std::complex<double>)>& f,
                                                 const std::vector<std::complex<double>>& points, double threshold,
                                                 const ScanOptions& opt = {}) {
    if (opt.ladder.empty()) throw ConfigError("discontinuity_scan: empty ladder");
    std::vector<ScanPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        ScanPoint sp;
        sp.z = p;
        bool flagged = true;
        for (double rho : opt.ladder) {
            double lo = f(p), hi = lo;
            for (int ring = 1; ring <= opt.rings; ++ring) {
                const double rr = rho * ring / opt.rings;
                for (int s = 0; s < opt.spokes; ++s) {
                    // offset angles by half a step on odd rings
                    const double th = 2.0 * std::numbers::pi * (s + 0.5 * (ring % 2)) / opt.spokes;
                    const double v = f(p + std::polar(rr, th));
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
            const double osc = hi - lo;
            sp.oscillation.push_back(osc);
            flagged = flagged && osc > threshold;
        }
        sp.flagged = flagged;
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace toricma
