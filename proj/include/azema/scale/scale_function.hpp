// Scale functions: s(z) = int_0^z exp(-2 bhat(y)) dy with bhat(y) = int_0^y b
// for recurrent diffusions, and s(x) = -1/x for the Bessel(3) transient case
// (the solution of s''/2 + s'/x = 0 with s(0+) = -inf, s(inf) = 0).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "azema/scale/drift.hpp"
#include "azema/scale/quadrature.hpp"

namespace azema {

namespace detail {

inline double bhat_direct(const DriftSpec& drift, double y) {
  if (drift.is_zero || y == 0.0) return 0.0;
  QuadratureOptions opt;
  opt.abs_tol = 1e-13;
  return integrate_or_throw([&](double u) { return drift(u); }, 0.0, y, opt);
}

}  // namespace detail

/// Direct evaluation of the recurrent scale function by nested adaptive
/// quadrature. Throws QuadratureError (carrying the achieved bound) when the
/// outer integral does not converge.
inline double scale_recurrent(const DriftSpec& drift, double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("scale_recurrent: z must be finite");
  if (drift.is_zero) return z;
  if (z == 0.0) return 0.0;
  auto integrand = [&](double y) { return std::exp(-2.0 * detail::bhat_direct(drift, y)); };
  QuadratureOptions rough;
  rough.abs_tol = 1e-4;
  const auto first = adaptive_simpson(integrand, 0.0, z, rough);
  QuadratureOptions opt;
  opt.abs_tol = std::max(1e-10, 1e-12 * std::abs(first.value));
  return integrate_or_throw(integrand, 0.0, z, opt);
}

inline double scale_transient_bessel3(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument("scale_transient_bessel3: x must be finite and > 0");
  }
  return -1.0 / x;
}

/// Monotone scale map with forward, derivative and inverse evaluation.
/// Recurrent kinds are tabulated once on a lattice (values, bhat and their
/// exact derivatives) and evaluated by cubic Hermite interpolation; outside
/// the lattice they fall back to direct quadrature. Immutable after
/// construction and safe to share across threads.
class ScaleFunction {
 public:
  enum class Kind { recurrent, transient };

  static ScaleFunction recurrent(const DriftSpec& drift, double lo = -4.0, double hi = 4.0,
                                 double node_step = 1e-3) {
    ScaleFunction s;
    s.kind_ = Kind::recurrent;
    s.drift_ = drift;
    s.drift_name_ = drift.name;
    if (drift.is_zero) {
      s.identity_ = true;
      return s;
    }
    if (!(lo < 0.0 && hi > 0.0 && node_step > 0.0)) {
      throw std::invalid_argument("ScaleFunction: lattice must straddle 0");
    }
    s.build_table(lo, hi, node_step);
    return s;
  }

  static ScaleFunction transient_bessel3() {
    ScaleFunction s;
    s.kind_ = Kind::transient;
    s.drift_name_ = "bessel3 (c(x) = 1/x)";
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  const std::string& drift_name() const noexcept { return drift_name_; }
  bool is_identity() const noexcept { return identity_; }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    if (kind_ == Kind::transient) return scale_transient_bessel3(x);
    if (identity_) return x;
    if (x >= lo_ && x <= hi_) return hermite(x, s_, sp_);
    return march(x).first;
  }

  double derivative(double x) const {
    if (kind_ == Kind::transient) {
      if (!(x > 0.0)) throw std::invalid_argument("scale derivative: x must be > 0");
      return 1.0 / (x * x);
    }
    if (identity_) return 1.0;
    return std::exp(-2.0 * bhat(x));
  }

  double inverse(double v) const {
    if (kind_ == Kind::transient) {
      if (!(v < 0.0)) throw std::invalid_argument("transient scale inverse needs v < 0");
      return -1.0 / v;
    }
    if (identity_) return v;
    // bracket
    double a, b;
    if (v >= s_.front() && v <= s_.back()) {
      const auto it = std::upper_bound(s_.begin(), s_.end(), v);
      const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - s_.begin() - 1, 0));
      const auto j = std::min(i + 1, s_.size() - 1);
      a = node(i);
      b = node(j);
    } else {
      a = v < s_.front() ? lo_ : hi_;
      b = a;
      double width = 1.0;
      while ((v < s_.front() && eval(b) > v) || (v > s_.back() && eval(b) < v)) {
        b += v < s_.front() ? -width : width;
        width *= 2.0;
        if (std::abs(b) > 1e6) throw std::domain_error("scale inverse: value out of range");
      }
      if (a > b) std::swap(a, b);
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 100; ++it) {
      const double f = eval(x) - v;
      if (f == 0.0) return x;
      if (f > 0.0) b = x; else a = x;
      double next = x - f / derivative(x);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
      x = next;
    }
    return x;
  }

  double bhat(double x) const {
    if (identity_ || kind_ == Kind::transient) return 0.0;
    if (x >= lo_ && x <= hi_) return hermite(x, bh_, b_);
    return march(x).second;
  }

 private:
  ScaleFunction() = default;

  double node(std::size_t i) const { return lo_ + static_cast<double>(i) * step_; }

  // Outside the lattice: march from the nearest edge in panels of one node
  // step with 5-point Gauss-Legendre for both bhat and s. Returns {s, bhat}.
  std::pair<double, double> march(double x) const {
    static constexpr double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                     0.5384693101056831, 0.9061798459386640};
    static constexpr double gw[5] = {0.2369268850561891, 0.4786286704993665,
                                     0.5688888888888889, 0.4786286704993665,
                                     0.2369268850561891};
    auto drift_integral = [&](double a, double b) {
      const double m = 0.5 * (a + b), r = 0.5 * (b - a);
      double acc = 0.0;
      for (int i = 0; i < 5; ++i) acc += gw[i] * drift_(m + r * gx[i]);
      return acc * r;
    };
    const bool left = x < lo_;
    double a = left ? lo_ : hi_;
    double sv = left ? s_.front() : s_.back();
    double bh = left ? bh_.front() : bh_.back();
    const auto panels = static_cast<std::size_t>(std::ceil(std::abs(x - a) / step_));
    const double w = (x - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double b = a + w;
      const double m = 0.5 * (a + b), r = 0.5 * w;
      double acc = 0.0;
      for (int i = 0; i < 5; ++i) {
        const double y = m + r * gx[i];
        acc += gw[i] * std::exp(-2.0 * (bh + drift_integral(a, y)));
      }
      sv += acc * r;
      bh += drift_integral(a, b);
      a = b;
    }
    if (!std::isfinite(sv)) throw std::domain_error("scale function overflow outside lattice");
    return {sv, bh};
  }

  double hermite(double x, const std::vector<double>& v, const std::vector<double>& d) const {
    const double pos = (x - lo_) / step_;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= v.size()) i = v.size() - 2;
    const double t = pos - static_cast<double>(i);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * v[i] + h10 * step_ * d[i] + h01 * v[i + 1] + h11 * step_ * d[i + 1];
  }

  void build_table(double lo, double hi, double node_step) {
    const auto below = static_cast<std::size_t>(std::ceil(-lo / node_step - 1e-9));
    const auto above = static_cast<std::size_t>(std::ceil(hi / node_step - 1e-9));
    step_ = node_step;
    lo_ = -static_cast<double>(below) * node_step;
    hi_ = static_cast<double>(above) * node_step;
    const std::size_t n = below + above + 1;
    const std::size_t zero = below;
    s_.assign(n, 0.0);
    sp_.assign(n, 0.0);
    bh_.assign(n, 0.0);
    b_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) b_[i] = drift_(node(i));

    QuadratureOptions fine;
    fine.abs_tol = 1e-14;
    auto segment_bhat = [&](std::size_t from, std::size_t to) {
      return bh_[from] +
             integrate_or_throw([&](double u) { return drift_(u); }, node(from), node(to), fine);
    };
    auto segment_scale = [&](std::size_t from, std::size_t to) {
      const double x0 = node(from);
      const double bh0 = bh_[from];
      auto integrand = [&](double y) {
        const double bh =
            bh0 + integrate_or_throw([&](double u) { return drift_(u); }, x0, y, fine);
        return std::exp(-2.0 * bh);
      };
      QuadratureOptions opt;
      opt.abs_tol = std::max(1e-300, 1e-13 * step_ * std::max(sp_[from], integrand(node(to))));
      return s_[from] + integrate_or_throw(integrand, x0, node(to), opt);
    };
    sp_[zero] = 1.0;
    for (std::size_t i = zero; i + 1 < n; ++i) {
      bh_[i + 1] = segment_bhat(i, i + 1);
      sp_[i + 1] = std::exp(-2.0 * bh_[i + 1]);
      s_[i + 1] = segment_scale(i, i + 1);
    }
    for (std::size_t i = zero; i > 0; --i) {
      bh_[i - 1] = segment_bhat(i, i - 1);
      sp_[i - 1] = std::exp(-2.0 * bh_[i - 1]);
      s_[i - 1] = segment_scale(i, i - 1);
    }
  }

  Kind kind_ = Kind::recurrent;
  DriftSpec drift_;
  std::string drift_name_;
  bool identity_ = false;
  double lo_ = 0.0, hi_ = 0.0, step_ = 1.0;
  std::vector<double> s_, sp_, bh_, b_;
};

}  // namespace azema
