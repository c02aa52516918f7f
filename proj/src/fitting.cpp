#include "dpe/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "dpe/csv.hpp"

namespace dpe {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Residual model: fills f (size m) and, when J is non-null, its Jacobian.
using ModelFn = std::function<void(const VectorXd& p, VectorXd& f, MatrixXd* J)>;

struct Functor : Eigen::DenseFunctor<double> {
  Functor(ModelFn fn, int n, int m, std::vector<double> scale, bool analytic)
      : Eigen::DenseFunctor<double>(n, m), fn(std::move(fn)), scale(std::move(scale)), analytic(analytic) {}

  int operator()(const VectorXd& p, VectorXd& f) const {
    fn(p, f, nullptr);
    return 0;
  }

  int df(const VectorXd& p, MatrixXd& J) const {
    if (analytic) {
      VectorXd f(values());
      fn(p, f, &J);
      return 0;
    }
    VectorXd f0(values()), f1(values());
    fn(p, f0, nullptr);
    J.resize(values(), inputs());
    for (int j = 0; j < inputs(); ++j) {
      VectorXd q = p;
      const double h = 1e-6 * std::max(std::abs(p[j]), scale[static_cast<std::size_t>(j)]);
      q[j] += h;
      fn(q, f1, nullptr);
      J.col(j) = (f1 - f0) / h;
    }
    return 0;
  }

  ModelFn fn;
  std::vector<double> scale;
  bool analytic;
};

struct Solution {
  VectorXd p;
  VectorXd sigma;
  double residual_norm;
  bool converged;
  int iterations;
};

Solution solve(const ModelFn& fn, VectorXd p0, int m, std::vector<double> scale, bool analytic,
               const LeastSquaresOptions& opt) {
  const int n = static_cast<int>(p0.size());
  Functor functor(fn, n, m, std::move(scale), analytic);
  Eigen::LevenbergMarquardt<Functor> lm(functor);
  lm.setXtol(opt.xtol);
  lm.setFtol(1e-16);
  lm.setGtol(0.0);
  lm.setMaxfev(opt.max_iterations);
  const auto status = lm.minimize(p0);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters)
    throw std::invalid_argument("least squares: improper input parameters");

  Solution s;
  s.p = p0;
  s.converged = status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;
  s.iterations = static_cast<int>(lm.iterations());
  VectorXd f(m);
  MatrixXd J;
  functor(s.p, f);
  functor.df(s.p, J);
  s.residual_norm = f.norm();
  const double dof = std::max(1, m - n);
  const double s2 = f.squaredNorm() / dof;
  // Column equilibration keeps the covariance meaningful when parameters
  // differ by many orders of magnitude.
  VectorXd norms = J.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < norms.size(); ++j)
    if (!(norms[j] > 0.0)) norms[j] = 1.0;
  const MatrixXd Js = J * norms.cwiseInverse().asDiagonal();
  const MatrixXd inner = (Js.transpose() * Js).completeOrthogonalDecomposition().pseudoInverse();
  const VectorXd var = inner.diagonal().cwiseQuotient(norms.cwiseAbs2()) * s2;
  s.sigma = var.cwiseMax(0.0).cwiseSqrt();
  return s;
}

void check_series(std::span<const double> x, std::span<const double> y, std::size_t min_points,
                  const char* who) {
  if (x.size() != y.size()) throw std::invalid_argument(std::string(who) + ": x and y differ in length");
  if (x.size() < min_points)
    throw std::invalid_argument(std::string(who) + ": need at least " + std::to_string(min_points) + " points");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double span = *hi - *lo;
  if (!(span > 1e-12 * std::max({std::abs(*hi), std::abs(*lo), 1e-300})))
    throw DegenerateFitError(std::string(who) + ": data are constant");
}

FitReport make_report(const Solution& s, std::vector<std::string> names) {
  FitReport r;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    r.parameters.push_back({std::move(names[i]), s.p[k], s.sigma[k]});
  }
  r.residual_norm = s.residual_norm;
  r.converged = s.converged;
  r.iterations = s.iterations;
  return r;
}

// Unit-height exponential decay starting at t0, convolved with a normalized
// Gaussian of width sigma.
double exp_gauss(double t, double t0, double tau, double sigma) {
  const double u = t - t0;
  const double x = (sigma / tau - u / sigma) / std::numbers::sqrt2;
  const double a = 0.5 * sigma * sigma / (tau * tau) - u / tau;
  if (x < 25.0) return 0.5 * std::exp(a) * std::erfc(x);
  // erfc(x) ~ exp(-x^2) / (x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4))
  const double x2 = x * x;
  return 0.5 * std::exp(a - x2) / (x * std::sqrt(std::numbers::pi)) *
         (1.0 - 0.5 / x2 + 0.75 / (x2 * x2));
}

// Log-linear initial guess of the decay time over samples well above baseline.
double loglinear_tau(std::span<const double> t, std::span<const double> y, double base) {
  const double top = *std::max_element(y.begin(), y.end()) - base;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, sw = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = y[i] - base;
    if (v <= 0.05 * top) continue;
    const double w = v;  // weight by amplitude
    const double ly = std::log(v);
    sw += w;
    sx += w * t[i];
    sy += w * ly;
    sxx += w * t[i] * t[i];
    sxy += w * t[i] * ly;
  }
  const double den = sw * sxx - sx * sx;
  const double slope = den != 0.0 ? (sw * sxy - sx * sy) / den : 0.0;
  if (!(slope < 0.0)) return (t.back() - t.front()) / 3.0;
  return -1.0 / slope;
}

}  // namespace

double FitReport::value(std::string_view name) const {
  for (const auto& p : parameters)
    if (p.name == name) return p.value;
  throw std::out_of_range("FitReport: no parameter '" + std::string(name) + "'");
}

double FitReport::sigma(std::string_view name) const {
  for (const auto& p : parameters)
    if (p.name == name) return p.sigma;
  throw std::out_of_range("FitReport: no parameter '" + std::string(name) + "'");
}

void write_report(std::ostream& os, const FitReport& r) {
  for (const auto& p : r.parameters) {
    os << p.name << " = " << csv::format(p.value) << '\n';
    os << p.name << "_sigma = " << csv::format(p.sigma) << '\n';
  }
  os << "residual_norm = " << csv::format(r.residual_norm) << '\n';
  os << "converged = " << (r.converged ? "true" : "false") << '\n';
  os << "iterations = " << r.iterations << '\n';
}

FitReport fit_exponential(std::span<const double> t, std::span<const double> y,
                          std::optional<double> irf_fwhm_ps, LeastSquaresOptions opt) {
  check_series(t, y, 10, "fit_exponential");
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());

  if (!irf_fwhm_ps) {
    if (t.size() - peak < 10)
      throw std::invalid_argument("fit_exponential: need at least 10 points past the peak");
    const auto tw = t.subspan(peak);
    const auto yw = y.subspan(peak);
    const double t_peak = tw.front();
    const int m = static_cast<int>(tw.size());
    const auto [lo, hi] = std::minmax_element(yw.begin(), yw.end());
    const double base0 = *lo - 1e-3 * (*hi - *lo);
    const double tau0 = loglinear_tau(tw, yw, base0);

    ModelFn fn = [tw, yw, t_peak](const VectorXd& p, VectorXd& f, MatrixXd* J) {
      const double amp = p[0], tau = p[1], base = p[2];
      if (J) J->resize(static_cast<Eigen::Index>(tw.size()), 3);
      for (std::size_t i = 0; i < tw.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double dt = tw[i] - t_peak;
        const double e = std::exp(-dt / tau);
        f[k] = amp * e + base - yw[i];
        if (J) {
          (*J)(k, 0) = e;
          (*J)(k, 1) = amp * e * dt / (tau * tau);
          (*J)(k, 2) = 1.0;
        }
      }
    };
    VectorXd p0(3);
    p0 << yw.front() - base0, tau0, base0;
    const auto s = solve(fn, p0, m, {1.0, 1.0, 1.0}, true, opt);
    auto r = make_report(s, {"amplitude", "T1", "baseline"});
    return r;
  }

  const double sigma = *irf_fwhm_ps / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  if (!(sigma > 0.0)) throw std::invalid_argument("fit_exponential: IRF FWHM must be > 0");
  const int m = static_cast<int>(t.size());
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double base0 = *lo;
  const auto half =
      std::find_if(y.begin(), y.end(), [&](double v) { return v - base0 > 0.5 * (*hi - base0); });
  const double onset0 = t[static_cast<std::size_t>(half - y.begin())];
  const double tau0 = loglinear_tau(t.subspan(peak), y.subspan(peak), base0);

  ModelFn fn = [t, y, sigma](const VectorXd& p, VectorXd& f, MatrixXd*) {
    for (std::size_t i = 0; i < t.size(); ++i)
      f[static_cast<Eigen::Index>(i)] = p[0] * exp_gauss(t[i], p[3], p[1], sigma) + p[2] - y[i];
  };
  VectorXd p0(4);
  p0 << (*hi - base0) / std::max(exp_gauss(t[peak], onset0, tau0, sigma), 1e-12), tau0, base0, onset0;
  const double tscale = std::max(std::abs(t.back() - t.front()), 1.0);
  const auto s = solve(fn, p0, m, {std::max(*hi - *lo, 1e-300), tscale, std::max(*hi - *lo, 1e-300), tscale},
                       false, opt);
  return make_report(s, {"amplitude", "T1", "baseline", "onset"});
}

FitReport fit_lorentzian(std::span<const double> e, std::span<const double> y, LeastSquaresOptions opt) {
  check_series(e, y, 8, "fit_lorentzian");
  const std::size_t n = e.size();
  const std::size_t edge = std::max<std::size_t>(2, n / 10);
  const double mid = 0.5 * (e.front() + e.back());
  auto mean_of = [&](std::size_t first, std::size_t count, std::span<const double> v) {
    return std::accumulate(v.begin() + static_cast<long>(first), v.begin() + static_cast<long>(first + count), 0.0) /
           static_cast<double>(count);
  };
  const double xl = mean_of(0, edge, e), yl = mean_of(0, edge, y);
  const double xr = mean_of(n - edge, edge, e), yr = mean_of(n - edge, edge, y);
  const double slope0 = (yr - yl) / (xr - xl);
  const double off0 = yl + slope0 * (mid - xl);

  std::size_t ext = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (off0 + slope0 * (e[i] - mid));
    if (std::abs(r) > std::abs(best)) {
      best = r;
      ext = i;
    }
  }
  std::size_t lo = ext, hi = ext;
  auto resid = [&](std::size_t i) { return y[i] - (off0 + slope0 * (e[i] - mid)); };
  while (lo > 0 && std::abs(resid(lo - 1)) > 0.5 * std::abs(best)) --lo;
  while (hi + 1 < n && std::abs(resid(hi + 1)) > 0.5 * std::abs(best)) ++hi;
  const double step = (e.back() - e.front()) / static_cast<double>(n - 1);
  const double width0 = std::max(e[hi] - e[lo], 2.0 * std::abs(step));

  ModelFn fn = [e, y, mid](const VectorXd& p, VectorXd& f, MatrixXd* J) {
    const double amp = p[0], c = p[1], w = p[2], off = p[3], sl = p[4];
    if (J) J->resize(static_cast<Eigen::Index>(e.size()), 5);
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double x = 2.0 * (e[i] - c) / w;
      const double l = 1.0 / (1.0 + x * x);
      f[k] = amp * l + off + sl * (e[i] - mid) - y[i];
      if (J) {
        const double dl_dx = -2.0 * x * l * l;
        (*J)(k, 0) = l;
        (*J)(k, 1) = amp * dl_dx * (-2.0 / w);
        (*J)(k, 2) = amp * dl_dx * (-x / w);
        (*J)(k, 3) = 1.0;
        (*J)(k, 4) = e[i] - mid;
      }
    }
  };
  VectorXd p0(5);
  p0 << best, e[ext], width0, off0, slope0;
  const auto s = solve(fn, p0, static_cast<int>(n), {1.0, 1.0, 1.0, 1.0, 1.0}, true, opt);
  auto r = make_report(s, {"amplitude", "center", "fwhm", "offset", "slope"});
  r.parameters[2].value = std::abs(r.parameters[2].value);
  const double c = r.value("center"), w = r.value("fwhm");
  const double q = c / w;
  const double q_sigma = std::abs(q) * std::hypot(r.sigma("center") / c, r.sigma("fwhm") / w);
  r.parameters.push_back({"Q", q, q_sigma});
  return r;
}

FitReport fit_sinusoid(std::span<const double> phi, std::span<const double> energy, LeastSquaresOptions opt) {
  if (phi.size() != energy.size()) throw std::invalid_argument("fit_sinusoid: x and y differ in length");
  if (phi.size() < 4) throw std::invalid_argument("fit_sinusoid: need at least 4 points");
  const auto [pmin, pmax] = std::minmax_element(phi.begin(), phi.end());
  const double spacing = (*pmax - *pmin) / static_cast<double>(phi.size() - 1);
  if (*pmax - *pmin + spacing < 180.0 - 1e-9)
    throw std::invalid_argument("fit_sinusoid: angles must cover at least one 180 degree period");

  const double deg = std::numbers::pi / 180.0;
  const auto m = static_cast<Eigen::Index>(phi.size());
  const double ref = std::accumulate(energy.begin(), energy.end(), 0.0) / static_cast<double>(m);

  // Linear model offset + p cos 2phi + q sin 2phi is exact for this family.
  MatrixXd A(m, 3);
  VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = 2.0 * phi[static_cast<std::size_t>(i)] * deg;
    A.row(i) << 1.0, std::cos(a), std::sin(a);
    b[i] = energy[static_cast<std::size_t>(i)] - ref;
  }
  const VectorXd lin = A.colPivHouseholderQr().solve(b);
  const double amp0 = std::hypot(lin[1], lin[2]);
  const double phase0 = 0.5 * std::atan2(lin[2], lin[1]) / deg;

  const double data_scale = std::max((b.cwiseAbs().maxCoeff()), 1e-300);
  if (amp0 <= 1e-9 * std::max(data_scale, std::abs(ref) * 1e-12)) {
    const VectorXd resid = A * lin - b;
    const double s2 = resid.squaredNorm() / std::max<Eigen::Index>(1, m - 3);
    const MatrixXd cov = (A.transpose() * A).inverse() * s2;
    FitReport r;
    r.parameters = {{"offset", ref + lin[0], std::sqrt(cov(0, 0))},
                    {"amplitude", amp0, std::sqrt(std::max(cov(1, 1), cov(2, 2)))},
                    {"phase_deg", 0.0, 90.0},
                    {"fss", 2.0 * amp0, 2.0 * std::sqrt(std::max(cov(1, 1), cov(2, 2)))}};
    r.residual_norm = resid.norm();
    r.converged = true;
    return r;
  }

  ModelFn fn = [phi, energy, ref, deg](const VectorXd& p, VectorXd& f, MatrixXd* J) {
    if (J) J->resize(static_cast<Eigen::Index>(phi.size()), 3);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double a = 2.0 * (phi[i] - p[2]) * deg;
      f[k] = p[0] + p[1] * std::cos(a) - (energy[i] - ref);
      if (J) {
        (*J)(k, 0) = 1.0;
        (*J)(k, 1) = std::cos(a);
        (*J)(k, 2) = p[1] * std::sin(a) * 2.0 * deg;
      }
    }
  };
  VectorXd p0(3);
  p0 << lin[0], amp0, phase0;
  const auto s = solve(fn, p0, static_cast<int>(m), {1.0, 1.0, 1.0}, true, opt);
  double amp = s.p[1];
  double phase = s.p[2];
  if (amp < 0.0) {
    amp = -amp;
    phase += 90.0;
  }
  phase = std::fmod(phase, 180.0);
  if (phase < 0.0) phase += 180.0;
  if (phase >= 180.0) phase -= 180.0;  // -0 rounding lands exactly on 180
  FitReport r;
  r.parameters = {{"offset", ref + s.p[0], s.sigma[0]},
                  {"amplitude", amp, s.sigma[1]},
                  {"phase_deg", phase, s.sigma[2]},
                  {"fss", 2.0 * amp, 2.0 * s.sigma[1]}};
  r.residual_norm = s.residual_norm;
  r.converged = s.converged;
  r.iterations = s.iterations;
  return r;
}

namespace {

struct PeakAreas {
  double center;
  std::vector<double> sides;
};

PeakAreas peak_areas(const CoincidenceHistogram& h, double window) {
  h.validate();
  const double T = h.rep_period_ps;
  if (!(window > 0.0)) window = 0.5 * T;
  const double w = h.bin_width();
  const double lo = h.bin_centers_ps.front() - 0.5 * w;
  const double hi = h.bin_centers_ps.back() + 0.5 * w;
  const double half = 0.5 * window;
  PeakAreas out;
  out.center = h.integrate(-half, half);
  const auto kmax = static_cast<int>(std::floor(std::max(std::abs(lo), std::abs(hi)) / T)) + 1;
  for (int k = -kmax; k <= kmax; ++k) {
    if (k == 0) continue;
    const double c = k * T;
    if (c - half < lo - 1e-9 || c + half > hi + 1e-9) continue;
    out.sides.push_back(h.integrate(c - half, c + half));
  }
  return out;
}

}  // namespace

Estimate hbt_g2(const CoincidenceHistogram& h, double window_ps) {
  const auto a = peak_areas(h, window_ps);
  if (a.sides.size() < 3) throw std::invalid_argument("hbt_g2: need at least 3 complete side peaks");
  const double total = std::accumulate(a.sides.begin(), a.sides.end(), 0.0);
  const double n = static_cast<double>(a.sides.size());
  const double mean = total / n;
  if (!(mean > 0.0)) throw std::domain_error("hbt_g2: side peaks are empty");
  const double g = a.center / mean;
  // Poisson errors; an empty centre is assigned one count of uncertainty.
  const double var = std::max(a.center, 1.0) / (mean * mean) + g * g / (n * mean);
  return {g, std::sqrt(var)};
}

Estimate hom_visibility(const CoincidenceHistogram& co, const CoincidenceHistogram& cross, double window_ps) {
  const auto a = peak_areas(co, window_ps);
  const auto b = peak_areas(cross, window_ps);
  if (a.sides.size() < 3 || b.sides.size() < 3)
    throw std::invalid_argument("hom_visibility: need at least 3 complete side peaks");
  if (co.bin_width() != cross.bin_width() || co.bin_centers_ps.size() != cross.bin_centers_ps.size())
    throw std::invalid_argument("hom_visibility: histograms must share binning");
  if (!(b.center > 0.0)) throw std::domain_error("hom_visibility: cross-polarized centre peak is empty");
  const double na = static_cast<double>(a.sides.size()), nb = static_cast<double>(b.sides.size());
  const double sa = std::accumulate(a.sides.begin(), a.sides.end(), 0.0) / na;
  const double sb = std::accumulate(b.sides.begin(), b.sides.end(), 0.0) / nb;
  if (!(sa > 0.0) || !(sb > 0.0)) throw std::domain_error("hom_visibility: side peaks are empty");
  const double ratio = (a.center / sa) / (b.center / sb);
  const double rel2 = 1.0 / std::max(a.center, 1.0) + 1.0 / b.center + 1.0 / (na * sa) + 1.0 / (nb * sb);
  return {1.0 - ratio, std::max(ratio, 1.0 / b.center) * std::sqrt(rel2)};
}

double correct_visibility(double v_raw, double g2, double r) {
  if (!(v_raw >= 0.0 && v_raw <= 1.0)) throw std::invalid_argument("correct_visibility: V_raw must be in [0, 1]");
  if (!(g2 >= 0.0 && g2 < 1.0)) throw std::invalid_argument("correct_visibility: g2 must be in [0, 1)");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("correct_visibility: R must be in (0, 1)");
  const double t = 1.0 - r;
  return (v_raw + g2) / (1.0 - g2) * (r * r + t * t) / (2.0 * r * t);
}

}  // namespace dpe
