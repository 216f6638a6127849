// SPDX-License-Identifier: MIT
#include "gbsde/gexpectation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {
namespace {

constexpr double kProbSlack = 1e-12;

struct BandWeights {
    StepProbabilities lo;
    StepProbabilities hi;
};

BandWeights band_weights(const Lattice& lat) {
    const GParams& g = lat.gparams();
    return {step_probabilities(g.var_lo(), lat.dt(), lat.h()),
            step_probabilities(g.var_hi(), lat.dt(), lat.h())};
}

inline double linear_step(const StepProbabilities& p, double dn, double md, double up) {
    return p.up * up + p.mid * md + p.down * dn;
}

// log(p.up*e^up + p.mid*e^md + p.down*e^dn), skipping zero weights.
inline double log_step(const StepProbabilities& p, double dn, double md, double up) {
    double m = std::max(up, dn);
    if (p.mid > 0.0) m = std::max(m, md);
    if (m == -std::numeric_limits<double>::infinity()) return m;
    double s = p.up * std::exp(up - m) + p.down * std::exp(dn - m);
    if (p.mid > 0.0) s += p.mid * std::exp(md - m);
    return m + std::log(s);
}

void check_slice(std::span<const double> s, const Lattice& lat, const char* what) {
    if (static_cast<int>(s.size()) != lat.width()) {
        std::ostringstream os;
        os << what << " has " << s.size() << " nodes, lattice has " << lat.width();
        throw GridMismatchError(os.str());
    }
}

void copy_boundary(std::span<double> out) {
    const std::size_t w = out.size();
    out[0] = out[1];
    out[w - 1] = out[w - 2];
}

}  // namespace

StepProbabilities step_probabilities(double variance, double dt, double h) {
    StepProbabilities p;
    const double ratio = variance * dt / (h * h);
    p.up = 0.5 * ratio;
    p.down = p.up;
    p.mid = 1.0 - ratio;
    if (p.mid < 0.0 && p.mid > -kProbSlack) p.mid = 0.0;
    if (!(p.up >= 0.0 && p.up <= 1.0 && p.mid >= 0.0 && p.mid <= 1.0)) {
        std::ostringstream os;
        os << "trinomial weights out of [0,1] (up=" << p.up << ", mid=" << p.mid
           << "): dt and h are inconsistent with the volatility band";
        throw ConfigurationError(os.str());
    }
    return p;
}

void one_step_sublinear(std::span<const double> next, const Lattice& lat, std::span<double> out,
                        std::span<Endpoint> choice) {
    check_slice(next, lat, "slice");
    check_slice(out, lat, "output slice");
    const BandWeights w = band_weights(lat);
    const int W = lat.width();
    const bool record = !choice.empty();
    for (int s = 1; s < W - 1; ++s) {
        const double e_hi = linear_step(w.hi, next[s - 1], next[s], next[s + 1]);
        const double e_lo = linear_step(w.lo, next[s - 1], next[s], next[s + 1]);
        const bool upper = e_hi >= e_lo;
        out[s] = upper ? e_hi : e_lo;
        if (record) choice[s] = upper ? Endpoint::upper : Endpoint::lower;
    }
    copy_boundary(out);
    if (record) {
        choice[0] = choice[1];
        choice[W - 1] = choice[W - 2];
    }
}

Slice one_step_sublinear(std::span<const double> next, const Lattice& lat, double dt) {
    check_slice(next, lat, "slice");
    const GParams& g = lat.gparams();
    const StepProbabilities lo = step_probabilities(g.var_lo(), dt, lat.h());
    const StepProbabilities hi = step_probabilities(g.var_hi(), dt, lat.h());
    const int W = lat.width();
    Slice out(static_cast<std::size_t>(W));
    for (int s = 1; s < W - 1; ++s) {
        const double e_hi = linear_step(hi, next[s - 1], next[s], next[s + 1]);
        const double e_lo = linear_step(lo, next[s - 1], next[s], next[s + 1]);
        out[s] = e_hi >= e_lo ? e_hi : e_lo;
    }
    copy_boundary(out);
    return out;
}

void backward_sweep(ValueField& field, const Lattice& lat, int from, int to) {
    if (field.levels() != lat.levels() || field.width() != lat.width())
        throw GridMismatchError("field does not match lattice");
    for (int k = from - 1; k >= to; --k) one_step_sublinear(field.slice(k + 1), lat, field.slice(k));
}

ValueField conditional_g_expectation(std::span<const double> terminal, const Lattice& lat) {
    check_slice(terminal, lat, "terminal slice");
    ValueField f(lat);
    std::copy(terminal.begin(), terminal.end(), f.slice(lat.n_steps()).begin());
    backward_sweep(f, lat, lat.n_steps(), 0);
    return f;
}

double g_expectation(std::span<const double> terminal, const Lattice& lat) {
    check_slice(terminal, lat, "terminal slice");
    Slice a(terminal.begin(), terminal.end());
    Slice b(a.size());
    for (int k = lat.n_steps() - 1; k >= 0; --k) {
        one_step_sublinear(a, lat, b);
        a.swap(b);
    }
    return a[static_cast<std::size_t>(lat.slot(0))];
}

double oracle_enumerate_policies(std::span<const double> terminal, const Lattice& lat, int start_k,
                                 int start_j) {
    check_slice(terminal, lat, "terminal slice");
    const int N = lat.n_steps();
    if (start_k < 0 || start_k > N) throw ConfigurationError("oracle start level outside lattice");
    const int depth = N - start_k;
    const long long bits = static_cast<long long>(depth) * depth;
    if (bits > kOracleMaxPolicyBits) {
        std::ostringstream os;
        os << "oracle refused: subtree of depth " << depth << " has " << bits
           << " decision nodes, i.e. 2^" << bits << " policies (limit 2^" << kOracleMaxPolicyBits
           << ")";
        throw EnumerationLimitError(os.str());
    }
    if (std::abs(start_j) > lat.half_nodes())
        throw ConfigurationError("oracle start node outside lattice");
    if (depth == 0) return terminal[static_cast<std::size_t>(lat.slot(start_j))];
    // Every decision node must be interior so no boundary copy is involved.
    if (std::abs(start_j) + depth > lat.half_nodes())
        throw ConfigurationError("oracle subtree reaches the space boundary");

    const GParams& g = lat.gparams();
    const StepProbabilities lo = step_probabilities(g.var_lo(), lat.dt(), lat.h());
    const StepProbabilities hi = step_probabilities(g.var_hi(), lat.dt(), lat.h());

    // Node (level i, offset o) of the subtree, o in [-i, i], owns bit i*i + (o + i).
    std::vector<double> cur(static_cast<std::size_t>(2 * depth + 1));
    std::vector<double> nxt(cur.size());
    double best = -std::numeric_limits<double>::infinity();
    const unsigned long long count = 1ULL << bits;
    for (unsigned long long mask = 0; mask < count; ++mask) {
        for (int o = -depth; o <= depth; ++o)
            nxt[static_cast<std::size_t>(o + depth)] =
                terminal[static_cast<std::size_t>(lat.slot(start_j + o))];
        for (int i = depth - 1; i >= 0; --i) {
            for (int o = -i; o <= i; ++o) {
                const int bit = i * i + (o + i);
                const StepProbabilities& p = ((mask >> bit) & 1ULL) ? hi : lo;
                const std::size_t c = static_cast<std::size_t>(o + depth);
                cur[c] = linear_step(p, nxt[c - 1], nxt[c], nxt[c + 1]);
            }
            std::swap(cur, nxt);
        }
        best = std::max(best, nxt[static_cast<std::size_t>(depth)]);
    }
    return best;
}

void one_step_sublinear_log(std::span<const double> next, const Lattice& lat,
                            std::span<double> out) {
    check_slice(next, lat, "slice");
    check_slice(out, lat, "output slice");
    const BandWeights w = band_weights(lat);
    const int W = lat.width();
    for (int s = 1; s < W - 1; ++s) {
        const double e_hi = log_step(w.hi, next[s - 1], next[s], next[s + 1]);
        const double e_lo = log_step(w.lo, next[s - 1], next[s], next[s + 1]);
        out[s] = e_hi >= e_lo ? e_hi : e_lo;
    }
    copy_boundary(out);
}

ValueField log_expectation_field(std::span<const double> terminal_log, const ValueField* step_log,
                                 const Lattice& lat) {
    check_slice(terminal_log, lat, "terminal slice");
    ValueField f(lat);
    const int N = lat.n_steps();
    std::copy(terminal_log.begin(), terminal_log.end(), f.slice(N).begin());
    for (int k = N - 1; k >= 0; --k) {
        one_step_sublinear_log(f.slice(k + 1), lat, f.slice(k));
        if (step_log != nullptr) {
            auto row = f.slice(k);
            auto add = step_log->slice(k);
            for (int s = 0; s < lat.width(); ++s) row[s] += add[s];
        }
    }
    return f;
}

ValueField additive_expectation_field(std::span<const double> terminal, const ValueField* cost,
                                      const Lattice& lat) {
    check_slice(terminal, lat, "terminal slice");
    ValueField f(lat);
    const int N = lat.n_steps();
    std::copy(terminal.begin(), terminal.end(), f.slice(N).begin());
    for (int k = N - 1; k >= 0; --k) {
        one_step_sublinear(f.slice(k + 1), lat, f.slice(k));
        if (cost != nullptr) {
            auto row = f.slice(k);
            auto add = cost->slice(k);
            for (int s = 0; s < lat.width(); ++s) row[s] += add[s];
        }
    }
    return f;
}

double running_max_expectation(const RunningMaxFunctional& fn, const Lattice& lat, Rounding r) {
    if (fn.process == nullptr) throw ConfigurationError("running-max functional needs a process");
    const ValueField& S = *fn.process;
    if (S.levels() != lat.levels() || S.width() != lat.width())
        throw GridMismatchError("running-max process does not match lattice");
    if (!fn.terminal.empty()) check_slice(fn.terminal, lat, "terminal slice");
    if (fn.bins < 1) throw ConfigurationError("running-max grid needs at least one bin");

    const int N = lat.n_steps();
    const int W = lat.width();
    const double lo = *std::min_element(S.data().begin(), S.data().end());
    const double hi = *std::max_element(S.data().begin(), S.data().end());
    const int bins = hi > lo ? std::max(fn.bins, 2) : 1;
    const double delta = bins > 1 ? (hi - lo) / (bins - 1) : 0.0;
    auto level_value = [&](int m) { return m == bins - 1 ? hi : lo + m * delta; };

    // Grid index of every node value under the requested rounding.
    std::vector<int> idx(static_cast<std::size_t>(lat.levels()) * W);
    for (int k = 0; k <= N; ++k) {
        for (int s = 0; s < W; ++s) {
            int m = 0;
            if (bins > 1) {
                const double q = (S.at(k, s) - lo) / delta;
                m = r == Rounding::up ? static_cast<int>(std::ceil(q)) : static_cast<int>(std::floor(q));
                m = std::clamp(m, 0, bins - 1);
            }
            idx[static_cast<std::size_t>(k) * W + s] = m;
        }
    }
    auto index = [&](int k, int s) { return idx[static_cast<std::size_t>(k) * W + s]; };

    const StepProbabilities p_lo = N > 0 ? step_probabilities(lat.gparams().var_lo(), lat.dt(), lat.h())
                                         : StepProbabilities{};
    const StepProbabilities p_hi = N > 0 ? step_probabilities(lat.gparams().var_hi(), lat.dt(), lat.h())
                                         : StepProbabilities{};

    const std::size_t row = static_cast<std::size_t>(bins);
    std::vector<double> nxt(static_cast<std::size_t>(W) * row);
    std::vector<double> cur(nxt.size());
    for (int s = 0; s < W; ++s) {
        const double t = fn.terminal.empty() ? 0.0 : fn.terminal[static_cast<std::size_t>(s)];
        const int base = index(N, s);
        for (int m = 0; m < bins; ++m)
            nxt[s * row + m] = fn.coef * level_value(std::max(m, base)) + t;
    }

    for (int k = N - 1; k >= 0; --k) {
        for (int s = 1; s < W - 1; ++s) {
            const int i_dn = index(k + 1, s - 1);
            const int i_md = index(k + 1, s);
            const int i_up = index(k + 1, s + 1);
            const double add = fn.step != nullptr ? fn.step->at(k, s) : 0.0;
            const int first = index(k, s);
            for (int m = first; m < bins; ++m) {
                const double dn = nxt[(s - 1) * row + std::max(m, i_dn)];
                const double md = nxt[s * row + std::max(m, i_md)];
                const double up = nxt[(s + 1) * row + std::max(m, i_up)];
                double e_hi;
                double e_lo;
                if (fn.log_mode) {
                    e_hi = log_step(p_hi, dn, md, up);
                    e_lo = log_step(p_lo, dn, md, up);
                } else {
                    e_hi = linear_step(p_hi, dn, md, up);
                    e_lo = linear_step(p_lo, dn, md, up);
                }
                cur[s * row + m] = (e_hi >= e_lo ? e_hi : e_lo) + add;
            }
            for (int m = 0; m < first; ++m) cur[s * row + m] = cur[s * row + first];
        }
        std::copy_n(cur.begin() + static_cast<std::ptrdiff_t>(row), row, cur.begin());
        std::copy_n(cur.begin() + static_cast<std::ptrdiff_t>((W - 2) * row), row,
                    cur.begin() + static_cast<std::ptrdiff_t>((W - 1) * row));
        std::swap(cur, nxt);
    }
    const int s0 = lat.slot(0);
    return nxt[s0 * row + index(0, s0)];
}

Bracket running_max_bracket(const RunningMaxFunctional& fn, const Lattice& lat) {
    const double a = running_max_expectation(fn, lat, Rounding::down);
    const double b = running_max_expectation(fn, lat, Rounding::up);
    return {std::min(a, b), std::max(a, b)};
}

}  // namespace gbsde
