// SPDX-License-Identifier: MIT
#include "gbsde/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

void GParams::validate() const {
    if (!(sigma_lo > 0.0) || !(sigma_hi >= sigma_lo) || !std::isfinite(sigma_hi)) {
        std::ostringstream os;
        os << "volatility band requires 0 < sigma_lo <= sigma_hi, got [" << sigma_lo << ", "
           << sigma_hi << "]";
        throw ConfigurationError(os.str());
    }
}

double coverage_half_width(const GParams& g, double horizon) {
    return 6.0 * g.sigma_hi * std::sqrt(horizon);
}

Lattice::Lattice(const GParams& g, const LatticeSpec& spec) : g_(g), spec_(spec) {
    g_.validate();
    if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon))
        throw ConfigurationError("lattice horizon must be positive");
    if (spec.n_steps < 0) throw ConfigurationError("lattice n_steps must be nonnegative");

    const double cover = coverage_half_width(g_, spec.horizon);
    half_width_ = spec.half_width > 0.0 ? spec.half_width : cover;
    if (half_width_ < cover * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "space half-width " << half_width_ << " violates the coverage rule L >= "
           << cover;
        throw ConfigurationError(os.str());
    }
    spec_.half_width = half_width_;
    if (spec.n_steps == 0) return;

    dt_ = spec.horizon / spec.n_steps;
    h_ = g_.sigma_hi * std::sqrt(dt_);
    J_ = static_cast<int>(std::floor(half_width_ / h_ + 1e-9));
    if (J_ < 1) throw ConfigurationError("space window holds fewer than three nodes");
}

bool Lattice::same_grid(const Lattice& o) const noexcept {
    return g_.sigma_lo == o.g_.sigma_lo && g_.sigma_hi == o.g_.sigma_hi &&
           spec_.horizon == o.spec_.horizon && spec_.n_steps == o.spec_.n_steps && J_ == o.J_;
}

Slice make_slice(const Lattice& lat, const std::function<double(double)>& phi) {
    Slice s(static_cast<std::size_t>(lat.width()));
    for (int i = 0; i < lat.width(); ++i) s[i] = phi(lat.slot_space(i));
    return s;
}

ValueField::ValueField(int levels, int width, double fill)
    : levels_(levels), width_(width),
      values_(static_cast<std::size_t>(levels) * static_cast<std::size_t>(width), fill) {}

bool ValueField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double sup_abs_diff(const ValueField& a, const ValueField& b) {
    if (!a.same_shape(b)) throw GridMismatchError("value fields live on different lattices");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

double sup_abs(const ValueField& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace gbsde
