#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dpe {

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t) : std::runtime_error(what), time_ps(t) {}
  double time_ps;
};

struct StepControl {
  double rtol = 1e-8;
  double atol = 1e-12;
  double min_step = 1e-10;
};

/// Embedded Dormand-Prince 5(4) integrator for dy/dt = f(t, y) on any dense
/// Eigen type. The error estimate uses one scale per state (max-abs norm),
/// which suits density matrices whose small entries carry no relative meaning.
template <typename State>
class DormandPrince {
 public:
  using Real = typename Eigen::NumTraits<typename State::Scalar>::Real;

  explicit DormandPrince(StepControl control = {}) : ctl_(control) {}

  /// Advances (t, y) to t_end. `h` is the suggested step on entry and is
  /// updated on exit; `max_step(t)` bounds the step taken from time t.
  template <typename Rhs, typename MaxStep>
  void advance(Rhs&& f, State& y, Real& t, Real t_end, Real& h, MaxStep&& max_step) {
    if (t_end <= t) return;
    if (!(h > 0)) h = std::min<Real>(Real(1e-2) * (t_end - t), max_step(t));
    bool have_k1 = false;
    while (t < t_end) {
      const Real cap = max_step(t);
      Real step = std::min({h, cap, t_end - t});
      bool last = false;
      if (t + step >= t_end || t_end - (t + step) < Real(1e-12) * std::max<Real>(1, std::abs(t_end))) {
        step = t_end - t;
        last = true;
      }
      if (!have_k1) {
        k1_ = f(t, y);
        have_k1 = true;
      }
      const Real err = try_step(f, y, t, step);
      if (err <= 1) {
        y = y_new_;
        t = last ? t_end : t + step;
        k1_ = k7_;
        ++accepted_;
        const Real grow = err == 0 ? Real(5) : std::clamp<Real>(Real(0.9) * std::pow(err, Real(-0.2)), 0.2, 5);
        // keep the pre-truncation suggestion when a step was shortened to land on t_end
        if (!last || step >= h) h = step * grow;
      } else {
        ++rejected_;
        h = step * std::clamp<Real>(Real(0.9) * std::pow(err, Real(-0.2)), 0.1, 1);
        if (h < ctl_.min_step)
          throw IntegrationError("step size underflow at t = " + std::to_string(t) + " ps", t);
      }
    }
  }

  long accepted_steps() const { return accepted_; }
  long rejected_steps() const { return rejected_; }

 private:
  template <typename Rhs>
  Real try_step(Rhs& f, const State& y, Real t, Real h) {
    static constexpr Real c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr Real a21 = 1.0 / 5;
    static constexpr Real a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr Real a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr Real a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
    static constexpr Real a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr Real b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr Real e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const State k2 = f(t + c2 * h, (y + h * a21 * k1_).eval());
    const State k3 = f(t + c3 * h, (y + h * (a31 * k1_ + a32 * k2)).eval());
    const State k4 = f(t + c4 * h, (y + h * (a41 * k1_ + a42 * k2 + a43 * k3)).eval());
    const State k5 = f(t + c5 * h, (y + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4)).eval());
    const State k6 =
        f(t + h, (y + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
    y_new_ = y + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7_ = f(t + h, y_new_);
    const State err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7_);
    const Real scale = ctl_.atol + ctl_.rtol * std::max(max_abs(y), max_abs(y_new_));
    return max_abs(err) / scale;
  }

  static Real max_abs(const State& s) { return s.cwiseAbs().maxCoeff(); }

  StepControl ctl_;
  State k1_, k7_, y_new_;
  long accepted_ = 0;
  long rejected_ = 0;
};

}  // namespace dpe
