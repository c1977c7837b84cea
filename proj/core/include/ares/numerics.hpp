#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ares/rng.hpp"

namespace ares {

using Vector = std::vector<double>;

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kDefaultRidgeScale = 1e-6;
inline constexpr int kMaxRidgeEscalations = 8;

/// Dense row-major matrix. Only what the Gaussian model needs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Lower-triangular L with L·Lᵀ = a. Returns false when `a` is not
/// numerically positive definite.
bool cholesky(const Matrix& a, Matrix& lower);

/// Multivariate normal with a cached factorization of the regularized
/// covariance sigma + ridge·I.
class GaussianModel {
 public:
  /// Factor sigma + ridge·I once, no escalation. Throws NumericalError if
  /// the regularized matrix is not positive definite.
  static GaussianModel from_moments(Vector mu, Matrix sigma, double ridge);

  std::size_t dim() const noexcept { return mu_.size(); }
  const Vector& mu() const noexcept { return mu_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  const Matrix& chol() const noexcept { return chol_; }
  double ridge() const noexcept { return ridge_; }
  /// log det(sigma + ridge·I)
  double log_det() const noexcept { return log_det_; }

  /// Squared Mahalanobis distance under the regularized covariance.
  double mahalanobis_sq(std::span<const double> v) const;

  /// Draw one point, mu + L·z with z standard normal.
  Vector sample(Rng& rng) const;

 private:
  GaussianModel(Vector mu, Matrix sigma, Matrix chol, double ridge);

  Vector mu_;
  Matrix sigma_;
  Matrix chol_;
  double ridge_ = 0.0;
  double log_det_ = 0.0;
};

/// Population mean and covariance (1/N) of `points`, factored with a
/// relative ridge ridge_scale·trace(sigma)/p escalated ×10 until the
/// factorization succeeds. Sums are taken over sorted terms so the result
/// is bitwise independent of point order.
GaussianModel fit_gaussian(std::span<const Vector> points,
                           double ridge_scale = kDefaultRidgeScale);

double gaussian_logpdf(const GaussianModel& model, std::span<const double> v);

/// One draw from Beta(alpha, alpha) via the gamma ratio.
double beta_sample(double alpha, Rng& rng);

struct Gauss1d {
  double mu = 0.0;
  double var = 1.0;
};

/// Gauss1d with var clamped up to kVarianceFloor.
Gauss1d floored(double mu, double var);

double kld_gauss1d(const Gauss1d& p, const Gauss1d& q);
Gauss1d moment_match_mixture(const Gauss1d& p, const Gauss1d& q);
double jsd_gauss1d(const Gauss1d& p, const Gauss1d& q);

/// JSD value with its partial derivatives in each argument's mean and
/// variance. The mixture's variance floor is treated as a constant.
struct JsdGradient {
  double value = 0.0;
  double d_mu_p = 0.0;
  double d_var_p = 0.0;
  double d_mu_q = 0.0;
  double d_var_q = 0.0;
};
JsdGradient jsd_gauss1d_grad(const Gauss1d& p, const Gauss1d& q);

}  // namespace ares
