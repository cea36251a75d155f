// Adaptive Simpson quadrature with Richardson correction.
#pragma once

#include <cmath>
#include <concepts>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace azema {

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error_(achieved_error) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
  long evaluations = 0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 40;
};

namespace detail {

template <typename F>
struct SimpsonState {
  F& f;
  QuadratureResult& result;
  int max_depth;
};

template <typename F>
double simpson_recurse(SimpsonState<F>& st, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = st.f(lm);
  const double frm = st.f(rm);
  st.result.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth >= st.max_depth || std::abs(delta) <= 15.0 * tol) {
    if (depth >= st.max_depth && std::abs(delta) > 15.0 * tol) st.result.converged = false;
    st.result.error_estimate += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Integrates f over [a, b]; b < a gives the negated integral. Never throws:
/// non-convergence is reported through `converged` and `error_estimate`.
template <std::invocable<double> F>
QuadratureResult adaptive_simpson(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  QuadratureResult result;
  if (a == b) return result;
  const double sign = b < a ? -1.0 : 1.0;
  if (b < a) std::swap(a, b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  result.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  detail::SimpsonState<std::remove_reference_t<F>> st{f, result, opt.max_depth};
  const double v = detail::simpson_recurse(st, a, b, fa, fm, fb, whole, opt.abs_tol, 0);
  result.value = sign * v;
  if (!std::isfinite(result.value)) result.converged = false;
  return result;
}

/// Same as adaptive_simpson but throws QuadratureError on non-convergence.
template <std::invocable<double> F>
double integrate_or_throw(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  const auto r = adaptive_simpson(std::forward<F>(f), a, b, opt);
  if (!r.converged) {
    std::ostringstream os;
    os << "adaptive Simpson did not converge on [" << a << ", " << b
       << "], achieved error bound " << r.error_estimate;
    throw QuadratureError(os.str(), r.error_estimate);
  }
  return r.value;
}

}  // namespace azema
