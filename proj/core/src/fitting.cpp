#include "pairkit/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "pairkit/analytic.hpp"
#include "pairkit/errors.hpp"

namespace pairkit {

double poisson_sigma(double y) { return std::max(1.0, std::sqrt(std::max(y, 0.0))); }

double FitResult::sigma(std::size_t i) const {
  const std::size_t n = values.size();
  return std::sqrt(std::max(0.0, covariance[i * n + i]));
}

namespace {

constexpr int kNumParams = 3;
constexpr int kMaxIterations = 200;
constexpr double kStepTolerance = 1e-8;
// Secondary stop: chi2 stalls. Catches fits whose optimum sits on the V = 1
// boundary, where the logistic parameter keeps drifting without improving.
constexpr double kChi2StallTolerance = 1e-12;
// |u| cap for V = logistic(u); keeps V*(1-V) representable.
constexpr double kMaxLogit = 16.6;

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double v) {
  const double clamped = std::clamp(v, 1e-6, 1.0 - 1e-6);
  return std::log(clamped / (1.0 - clamped));
}

double dsinc(double x) {
  if (std::abs(x) < 1e-4) return -x / 3.0 + x * x * x / 30.0;
  return (std::cos(x) - std::sin(x) / x) / x;
}

// Physical-space models; grad is (d/dAmplitude, d/dV, d/dThird).
double hom_model(double x_ps, double amplitude, double visibility, double fwhm_nm,
                 double center_wavelength_nm, double grad[kNumParams]) {
  const double lambda_m = center_wavelength_nm * 1e-9;
  const double arg_per_nm =
      2.0 * std::numbers::pi * 1e-12 * 1e-9 * kSpeedOfLightMps / (lambda_m * lambda_m) * x_ps;
  const double x = arg_per_nm * fwhm_nm;
  const double s = sinc(x);
  grad[0] = 1.0 - visibility * s;
  grad[1] = -amplitude * s;
  grad[2] = -amplitude * visibility * dsinc(x) * arg_per_nm;
  return amplitude * (1.0 - visibility * s);
}

double fringe_model(double x_rad, double level, double visibility, double phase0,
                    double grad[kNumParams]) {
  const double c = std::cos(2.0 * x_rad + phase0);
  grad[0] = 1.0 + visibility * c;
  grad[1] = level * c;
  grad[2] = -level * visibility * std::sin(2.0 * x_rad + phase0);
  return level * (1.0 + visibility * c);
}

struct Problem {
  FitModel model;
  double center_wavelength_nm;
  std::span<const DataPoint> points;

  // theta is internal space: (amplitude, u, third) with V = logistic(u).
  double eval(double x, const double theta[kNumParams], double grad[kNumParams]) const {
    const double v = logistic(theta[1]);
    double f;
    if (model == FitModel::hom) {
      f = hom_model(x, theta[0], v, theta[2], center_wavelength_nm, grad);
    } else {
      f = fringe_model(x, theta[0], v, theta[2], grad);
    }
    grad[1] *= v * (1.0 - v);
    return f;
  }

  double eval_physical(double x, const double theta_phys[kNumParams],
                       double grad[kNumParams]) const {
    if (model == FitModel::hom) {
      return hom_model(x, theta_phys[0], theta_phys[1], theta_phys[2],
                       center_wavelength_nm, grad);
    }
    return fringe_model(x, theta_phys[0], theta_phys[1], theta_phys[2], grad);
  }
};

double chi_square(const Problem& problem, const double theta[kNumParams]) {
  double grad[kNumParams];
  double total = 0.0;
  for (const DataPoint& p : problem.points) {
    const double r = (p.y - problem.eval(p.x, theta, grad)) / p.sigma;
    total += r * r;
  }
  return total;
}

// Gaussian elimination with partial pivoting, 3x3.
bool solve3(double m[kNumParams][kNumParams], double b[kNumParams],
            double x[kNumParams]) {
  int index[kNumParams] = {0, 1, 2};
  for (int col = 0; col < kNumParams; ++col) {
    int pivot = col;
    for (int row = col + 1; row < kNumParams; ++row) {
      if (std::abs(m[index[row]][col]) > std::abs(m[index[pivot]][col])) pivot = row;
    }
    std::swap(index[col], index[pivot]);
    const double diag = m[index[col]][col];
    if (diag == 0.0 || !std::isfinite(diag)) return false;
    for (int row = col + 1; row < kNumParams; ++row) {
      const double factor = m[index[row]][col] / diag;
      for (int k = col; k < kNumParams; ++k) m[index[row]][k] -= factor * m[index[col]][k];
      b[index[row]] -= factor * b[index[col]];
    }
  }
  for (int col = kNumParams - 1; col >= 0; --col) {
    double acc = b[index[col]];
    for (int k = col + 1; k < kNumParams; ++k) acc -= m[index[col]][k] * x[k];
    x[col] = acc / m[index[col]][col];
    if (!std::isfinite(x[col])) return false;
  }
  return true;
}

bool invert3(const double m[kNumParams][kNumParams],
             double out[kNumParams][kNumParams]) {
  for (int col = 0; col < kNumParams; ++col) {
    double a[kNumParams][kNumParams];
    double b[kNumParams] = {0, 0, 0};
    double x[kNumParams];
    std::copy(&m[0][0], &m[0][0] + kNumParams * kNumParams, &a[0][0]);
    b[col] = 1.0;
    if (!solve3(a, b, x)) return false;
    for (int row = 0; row < kNumParams; ++row) out[row][col] = x[row];
  }
  return true;
}

void check_not_degenerate(std::span<const DataPoint> points, std::size_t minimum,
                          const char* model_name) {
  if (points.size() < minimum) {
    throw Error(ErrorCode::degenerate_data,
                std::string(model_name) + " fit needs at least " +
                    std::to_string(minimum) + " points, got " +
                    std::to_string(points.size()));
  }
  bool any_distinct_x = false;
  bool any_nonzero_y = false;
  for (const DataPoint& p : points) {
    if (p.sigma <= 0.0) {
      throw Error(ErrorCode::domain_error, "data point sigma must be > 0");
    }
    if (p.x != points.front().x) any_distinct_x = true;
    if (p.y != 0.0) any_nonzero_y = true;
  }
  if (!any_distinct_x) {
    throw Error(ErrorCode::degenerate_data, "all control values identical");
  }
  if (!any_nonzero_y) {
    throw Error(ErrorCode::degenerate_data, "all counts are zero");
  }
}

FitResult run_lm(const Problem& problem, double theta0[kNumParams],
                 std::vector<std::string> names) {
  double theta[kNumParams] = {theta0[0], theta0[1], theta0[2]};
  double chi2 = chi_square(problem, theta);
  double damping = 1e-3;
  bool converged = false;
  int iterations = 0;

  for (; iterations < kMaxIterations && !converged; ++iterations) {
    double hessian[kNumParams][kNumParams] = {};
    double gradient[kNumParams] = {};
    double jac[kNumParams];
    for (const DataPoint& p : problem.points) {
      const double f = problem.eval(p.x, theta, jac);
      const double weight = 1.0 / (p.sigma * p.sigma);
      const double residual = p.y - f;
      for (int j = 0; j < kNumParams; ++j) {
        gradient[j] += weight * residual * jac[j];
        for (int k = 0; k <= j; ++k) hessian[j][k] += weight * jac[j] * jac[k];
      }
    }
    for (int j = 0; j < kNumParams; ++j) {
      for (int k = j + 1; k < kNumParams; ++k) hessian[j][k] = hessian[k][j];
    }

    bool accepted = false;
    while (!accepted && damping < 1e14) {
      double damped[kNumParams][kNumParams];
      double rhs[kNumParams];
      double step[kNumParams];
      std::copy(&hessian[0][0], &hessian[0][0] + kNumParams * kNumParams, &damped[0][0]);
      std::copy(gradient, gradient + kNumParams, rhs);
      for (int j = 0; j < kNumParams; ++j) {
        damped[j][j] += damping * std::max(hessian[j][j], 1e-30);
      }
      if (!solve3(damped, rhs, step)) {
        damping *= 10.0;
        continue;
      }

      double candidate[kNumParams];
      for (int j = 0; j < kNumParams; ++j) candidate[j] = theta[j] + step[j];
      candidate[1] = std::clamp(candidate[1], -kMaxLogit, kMaxLogit);
      const double chi2_new = chi_square(problem, candidate);
      if (std::isfinite(chi2_new) && chi2_new <= chi2) {
        double max_rel_step = 0.0;
        for (int j = 0; j < kNumParams; ++j) {
          max_rel_step = std::max(max_rel_step,
                                  std::abs(candidate[j] - theta[j]) /
                                      std::max(std::abs(theta[j]), 1e-30));
        }
        const bool stalled = (chi2 - chi2_new) < kChi2StallTolerance * std::max(chi2, 1.0);
        std::copy(candidate, candidate + kNumParams, theta);
        chi2 = chi2_new;
        damping = std::max(damping / 10.0, 1e-12);
        accepted = true;
        if (max_rel_step < kStepTolerance || stalled) converged = true;
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) break;  // stuck: damping exhausted without an acceptable step
  }

  FitResult result;
  result.names = std::move(names);
  result.values = {theta[0], logistic(theta[1]), theta[2]};
  result.chi2 = chi2;
  result.dof = problem.points.size() - kNumParams;
  result.converged = converged;
  result.iterations = iterations;

  // Covariance from the physical-space Jacobian at the optimum; identical to
  // transforming the internal covariance by the delta method, but immune to
  // the vanishing dV/du at the boundary.
  double hessian[kNumParams][kNumParams] = {};
  double jac[kNumParams];
  const double theta_phys[kNumParams] = {result.values[0], result.values[1], result.values[2]};
  for (const DataPoint& p : problem.points) {
    problem.eval_physical(p.x, theta_phys, jac);
    const double weight = 1.0 / (p.sigma * p.sigma);
    for (int j = 0; j < kNumParams; ++j) {
      for (int k = 0; k < kNumParams; ++k) hessian[j][k] += weight * jac[j] * jac[k];
    }
  }
  double cov[kNumParams][kNumParams];
  result.covariance.assign(kNumParams * kNumParams, 0.0);
  if (invert3(hessian, cov)) {
    for (int j = 0; j < kNumParams; ++j) {
      for (int k = 0; k < kNumParams; ++k) {
        result.covariance[static_cast<std::size_t>(j) * kNumParams + k] = cov[j][k];
      }
    }
  } else {
    result.converged = false;
  }
  return result;
}

}  // namespace

namespace fitdetail {

double hom_eval(double x, const double theta[3], double center_wavelength_nm,
                double grad[3]) {
  const Problem problem{FitModel::hom, center_wavelength_nm, {}};
  return problem.eval(x, theta, grad);
}

double fringe_eval(double x, const double theta[3], double grad[3]) {
  const Problem problem{FitModel::fringe, 0.0, {}};
  return problem.eval(x, theta, grad);
}

}  // namespace fitdetail

FitResult fit_hom(std::span<const DataPoint> points, double center_wavelength_nm,
                  const HomInitial& initial) {
  check_not_degenerate(points, 8, "HOM");

  // Amplitude from the outer x-quartiles, where the dip contributes least.
  std::vector<const DataPoint*> by_x;
  by_x.reserve(points.size());
  for (const DataPoint& p : points) by_x.push_back(&p);
  std::sort(by_x.begin(), by_x.end(),
            [](const DataPoint* a, const DataPoint* b) { return a->x < b->x; });
  const std::size_t quarter = std::max<std::size_t>(1, points.size() / 4);
  double outer_sum = 0.0;
  for (std::size_t i = 0; i < quarter; ++i) {
    outer_sum += by_x[i]->y + by_x[by_x.size() - 1 - i]->y;
  }
  const double amplitude0 = initial.amplitude.value_or(outer_sum / (2.0 * quarter));

  double min_y = points.front().y;
  for (const DataPoint& p : points) min_y = std::min(min_y, p.y);
  const double visibility0 =
      initial.visibility.value_or(amplitude0 > 0.0 ? 1.0 - min_y / amplitude0 : 0.5);
  const double fwhm0 = initial.fwhm_nm.value_or(10.8);

  Problem problem{FitModel::hom, center_wavelength_nm, points};
  double theta0[kNumParams] = {amplitude0, logit(visibility0), fwhm0};
  return run_lm(problem, theta0, {"A", "V", "dlambda_nm"});
}

FitResult fit_fringe(std::span<const DataPoint> points) {
  check_not_degenerate(points, 6, "fringe");

  double min_x = points.front().x;
  double max_x = points.front().x;
  double mean_y = 0.0;
  double min_y = points.front().y;
  double max_y = points.front().y;
  std::complex<double> harmonic{0.0, 0.0};
  for (const DataPoint& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
    mean_y += p.y;
    harmonic += p.y * std::exp(std::complex<double>(0.0, -2.0 * p.x));
  }
  mean_y /= static_cast<double>(points.size());
  // Half a fringe period of cos(2x) is pi/2.
  if (max_x - min_x < std::numbers::pi / 2.0) {
    throw Error(ErrorCode::degenerate_data,
                "fringe scan must cover at least half a period (pi/2 radians)");
  }

  const double level0 = mean_y;
  const double visibility0 =
      (max_y + min_y) > 0.0 ? (max_y - min_y) / (max_y + min_y) : 0.5;
  const double phase0 = std::arg(harmonic);

  Problem problem{FitModel::fringe, 0.0, points};
  double theta0[kNumParams] = {level0, logit(visibility0), phase0};
  return run_lm(problem, theta0, {"C", "V", "phi0_rad"});
}

RawNetResult raw_and_net_visibility(std::span<const DataPoint> points,
                                    double background_per_point,
                                    double background_sigma, FitModel model,
                                    double center_wavelength_nm) {
  if (background_per_point < 0.0) {
    throw Error(ErrorCode::domain_error, "background must be >= 0");
  }

  auto fit = [&](std::span<const DataPoint> pts) {
    return model == FitModel::hom ? fit_hom(pts, center_wavelength_nm) : fit_fringe(pts);
  };

  RawNetResult result;
  result.raw_fit = fit(points);

  std::vector<DataPoint> corrected(points.begin(), points.end());
  for (DataPoint& p : corrected) {
    p.y -= background_per_point;
    p.sigma = std::sqrt(p.sigma * p.sigma + background_sigma * background_sigma);
  }
  result.net_fit = fit(corrected);

  result.raw = {result.raw_fit.value(1), result.raw_fit.sigma(1)};
  result.net = {result.net_fit.value(1), result.net_fit.sigma(1)};
  return result;
}

}  // namespace pairkit
