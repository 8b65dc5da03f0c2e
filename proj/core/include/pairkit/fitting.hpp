#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pairkit {

struct DataPoint {
  double x = 0.0;      // ps for HOM scans, radians for fringes
  double y = 0.0;      // counts
  double sigma = 1.0;  // must be > 0
};

// sqrt(y) with a floor of one count, the default weight for counting data.
double poisson_sigma(double y);

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;      // physical-space parameters
  std::vector<double> covariance;  // row-major n x n, physical space
  double chi2 = 0.0;
  std::size_t dof = 0;
  bool converged = false;
  int iterations = 0;

  double value(std::size_t i) const { return values[i]; }
  double sigma(std::size_t i) const;
};

struct HomInitial {
  std::optional<double> amplitude;
  std::optional<double> visibility;
  std::optional<double> fwhm_nm;
};

// Weighted least-squares fit of A * (1 - V * sinc(2*pi*x*dlambda*c/lambda^2))
// over (A, V, dlambda). Levenberg-Marquardt with the analytic Jacobian;
// V is kept in [0, 1] through a logistic parameterization and the covariance
// is reported in physical space. Converges when the relative step drops
// below 1e-8 or chi2 stalls; gives up (converged = false, best parameters
// kept) after 200 iterations. Throws ErrorCode::degenerate_data for fewer
// than 8 points, identical x everywhere or all-zero y.
FitResult fit_hom(std::span<const DataPoint> points, double center_wavelength_nm,
                  const HomInitial& initial = {});

// Same machinery for the fringe model C * (1 + V * cos(2x + phi0)) over
// (C, V, phi0). Requires >= 6 points covering at least half a fringe period.
FitResult fit_fringe(std::span<const DataPoint> points);

enum class FitModel { hom, fringe };

struct VisibilityEstimate {
  double value = 0.0;
  double sigma = 0.0;
};

struct RawNetResult {
  VisibilityEstimate raw;
  VisibilityEstimate net;
  FitResult raw_fit;
  FitResult net_fit;
};

// Raw fit on the points as given; net fit after subtracting
// `background_per_point` from every y with sigmas combined in quadrature.
// center_wavelength_nm is only used by the HOM model.
RawNetResult raw_and_net_visibility(std::span<const DataPoint> points,
                                    double background_per_point,
                                    double background_sigma, FitModel model,
                                    double center_wavelength_nm = 1566.0);

namespace fitdetail {
// Model evaluation in internal (bounded) parameter space, exposed so tests
// can difference the Jacobian. theta is (A, u, dlambda) or (C, u, phi0) with
// V = 1/(1+exp(-u)).
double hom_eval(double x, const double theta[3], double center_wavelength_nm,
                double grad[3]);
double fringe_eval(double x, const double theta[3], double grad[3]);
}  // namespace fitdetail

}  // namespace pairkit
