// SPDX-License-Identifier: MIT
/**
 * @file lattice.hpp
 * @brief Volatility band, recombining trinomial lattice and dense value fields.
 *
 * The lattice has time nodes t_k = k*dt, k = 0..N, and space nodes x_j = j*h
 * with |j| <= J, where h = sigma_hi*sqrt(dt). Nodes are addressed either by
 * the signed index j or by the storage slot s = j + J.
 */
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gbsde {

/// Band [sigma_lo^2, sigma_hi^2] of admissible quadratic-variation densities.
struct GParams {
    double sigma_lo = 0.5;
    double sigma_hi = 1.0;

    void validate() const;
    [[nodiscard]] double var_lo() const noexcept { return sigma_lo * sigma_lo; }
    [[nodiscard]] double var_hi() const noexcept { return sigma_hi * sigma_hi; }
    /// 1/sigma_lo^2, the constant multiplying gamma in the exponential estimates.
    [[nodiscard]] double inv_var_lo() const noexcept { return 1.0 / var_lo(); }
    [[nodiscard]] bool degenerate() const noexcept { return sigma_lo == sigma_hi; }
};

struct LatticeSpec {
    double horizon = 1.0;
    int n_steps = 100;
    /// Half-width L of the space window; 0 selects 6*sigma_hi*sqrt(T).
    double half_width = 0.0;
};

/// Coverage rule: the default and minimum admissible half-width.
double coverage_half_width(const GParams& g, double horizon);

class Lattice {
public:
    Lattice(const GParams& g, const LatticeSpec& spec);

    [[nodiscard]] const GParams& gparams() const noexcept { return g_; }
    [[nodiscard]] const LatticeSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] int n_steps() const noexcept { return spec_.n_steps; }
    [[nodiscard]] double horizon() const noexcept { return spec_.horizon; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] double h() const noexcept { return h_; }
    [[nodiscard]] double half_width() const noexcept { return half_width_; }
    /// Largest space index J; nodes run over j = -J..J.
    [[nodiscard]] int half_nodes() const noexcept { return J_; }
    [[nodiscard]] int width() const noexcept { return 2 * J_ + 1; }
    [[nodiscard]] int levels() const noexcept { return spec_.n_steps + 1; }

    [[nodiscard]] double time(int k) const noexcept { return k * dt_; }
    [[nodiscard]] double space(int j) const noexcept { return j * h_; }
    [[nodiscard]] int slot(int j) const noexcept { return j + J_; }
    [[nodiscard]] double slot_space(int s) const noexcept { return (s - J_) * h_; }

    /// Same time and space grid (band, horizon, steps, window).
    [[nodiscard]] bool same_grid(const Lattice& other) const noexcept;

private:
    GParams g_;
    LatticeSpec spec_;
    double dt_ = 0.0;
    double h_ = 0.0;
    double half_width_ = 0.0;
    int J_ = 0;
};

using Slice = std::vector<double>;

/// Evaluate phi at every space node of the lattice.
Slice make_slice(const Lattice& lat, const std::function<double(double)>& phi);

/// Dense (levels x width) array of node values, row-major by time level.
class ValueField {
public:
    ValueField() = default;
    ValueField(int levels, int width, double fill = 0.0);
    explicit ValueField(const Lattice& lat, double fill = 0.0)
        : ValueField(lat.levels(), lat.width(), fill) {}

    [[nodiscard]] int levels() const noexcept { return levels_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int half_nodes() const noexcept { return (width_ - 1) / 2; }

    [[nodiscard]] std::span<double> slice(int k) noexcept {
        return {values_.data() + static_cast<std::size_t>(k) * width_, static_cast<std::size_t>(width_)};
    }
    [[nodiscard]] std::span<const double> slice(int k) const noexcept {
        return {values_.data() + static_cast<std::size_t>(k) * width_, static_cast<std::size_t>(width_)};
    }
    [[nodiscard]] double& at(int k, int s) noexcept { return values_[static_cast<std::size_t>(k) * width_ + s]; }
    [[nodiscard]] double at(int k, int s) const noexcept { return values_[static_cast<std::size_t>(k) * width_ + s]; }
    /// Value at signed space index j.
    [[nodiscard]] double operator()(int k, int j) const noexcept { return at(k, j + half_nodes()); }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }
    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] bool same_shape(const ValueField& o) const noexcept {
        return levels_ == o.levels_ && width_ == o.width_;
    }

private:
    int levels_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// max over nodes of |a - b|; throws GridMismatchError on shape mismatch.
double sup_abs_diff(const ValueField& a, const ValueField& b);
double sup_abs(const ValueField& a);

}  // namespace gbsde
