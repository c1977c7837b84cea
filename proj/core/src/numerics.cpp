#include "ares/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ares/errors.hpp"

namespace ares {

namespace {

double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

// Partials of KL(a || b) for 1-d Gaussians parameterized by variance.
struct KldPartials {
  double value, d_mu_a, d_var_a, d_mu_b, d_var_b;
};

KldPartials kld_partials(const Gauss1d& a, const Gauss1d& b) {
  const double diff = a.mu - b.mu;
  const double num = a.var + diff * diff;
  return {0.5 * std::log(b.var / a.var) + num / (2.0 * b.var) - 0.5,
          diff / b.var,
          -0.5 / a.var + 0.5 / b.var,
          -diff / b.var,
          0.5 / b.var - num / (2.0 * b.var * b.var)};
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool cholesky(const Matrix& a, Matrix& lower) {
  const std::size_t n = a.rows();
  lower = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower(j, k) * lower(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / ljj;
    }
  }
  return true;
}

GaussianModel::GaussianModel(Vector mu, Matrix sigma, Matrix chol, double ridge)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), chol_(std::move(chol)), ridge_(ridge) {
  for (std::size_t i = 0; i < chol_.rows(); ++i) log_det_ += 2.0 * std::log(chol_(i, i));
}

GaussianModel GaussianModel::from_moments(Vector mu, Matrix sigma, double ridge) {
  const std::size_t p = mu.size();
  if (p == 0 || sigma.rows() != p || sigma.cols() != p) {
    throw InvalidInput("gaussian model: mean/covariance dimension mismatch");
  }
  Matrix reg = sigma;
  for (std::size_t i = 0; i < p; ++i) reg(i, i) += ridge;
  Matrix chol;
  if (!cholesky(reg, chol)) {
    throw NumericalError("gaussian model: covariance is not positive definite");
  }
  return GaussianModel(std::move(mu), std::move(sigma), std::move(chol), ridge);
}

double GaussianModel::mahalanobis_sq(std::span<const double> v) const {
  const std::size_t p = dim();
  if (v.size() != p) {
    throw InvalidInput("gaussian logpdf: expected dimension " + std::to_string(p) +
                       ", got " + std::to_string(v.size()));
  }
  // Forward substitution L·y = v − mu.
  Vector y(p);
  double sq = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    double s = v[i] - mu_[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol_(i, k) * y[k];
    y[i] = s / chol_(i, i);
    sq += y[i] * y[i];
  }
  return sq;
}

Vector GaussianModel::sample(Rng& rng) const {
  const std::size_t p = dim();
  Vector z(p);
  for (auto& zi : z) zi = rng.normal();
  Vector out = mu_;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k <= i; ++k) out[i] += chol_(i, k) * z[k];
  }
  return out;
}

GaussianModel fit_gaussian(std::span<const Vector> points, double ridge_scale) {
  const std::size_t n = points.size();
  if (n < 2) throw InvalidInput("fit_gaussian: need at least 2 points");
  const std::size_t p = points.front().size();
  if (p == 0) throw InvalidInput("fit_gaussian: zero-dimensional points");
  for (const auto& x : points) {
    if (x.size() != p) throw InvalidInput("fit_gaussian: dimension mismatch");
    for (double xi : x) {
      if (!std::isfinite(xi)) throw InvalidInput("fit_gaussian: non-finite coordinate");
    }
  }
  if (!(ridge_scale >= 0.0) || !std::isfinite(ridge_scale)) {
    throw InvalidParameter("fit_gaussian: ridge_scale must be finite and >= 0");
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> terms(n);
  Vector mu(p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t i = 0; i < n; ++i) terms[i] = points[i][a];
    mu[a] = sorted_sum(terms) * inv_n;
  }
  Matrix sigma(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      for (std::size_t i = 0; i < n; ++i) {
        terms[i] = (points[i][a] - mu[a]) * (points[i][b] - mu[b]);
      }
      const double s = sorted_sum(terms) * inv_n;
      sigma(a, b) = s;
      sigma(b, a) = s;
    }
  }

  double trace = 0.0;
  for (std::size_t a = 0; a < p; ++a) trace += sigma(a, a);
  double ridge = ridge_scale * trace / static_cast<double>(p);
  // A zero-spread cloud has zero trace; fall back to an absolute ridge.
  if (ridge == 0.0) ridge = ridge_scale;

  Matrix reg = sigma;
  Matrix chol;
  for (int attempt = 0; attempt <= kMaxRidgeEscalations; ++attempt) {
    for (std::size_t a = 0; a < p; ++a) reg(a, a) = sigma(a, a) + ridge;
    if (cholesky(reg, chol)) {
      return GaussianModel::from_moments(std::move(mu), std::move(sigma), ridge);
    }
    ridge *= 10.0;
  }
  throw NumericalError("fit_gaussian: covariance factorization failed after " +
                       std::to_string(kMaxRidgeEscalations) + " ridge escalations");
}

double gaussian_logpdf(const GaussianModel& model, std::span<const double> v) {
  const double p = static_cast<double>(model.dim());
  return -0.5 * p * std::log(2.0 * std::numbers::pi) - 0.5 * model.log_det() -
         0.5 * model.mahalanobis_sq(v);
}

double beta_sample(double alpha, Rng& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidParameter("beta_sample: alpha must be finite and > 0");
  }
  for (;;) {
    const double x = rng.gamma(alpha);
    const double y = rng.gamma(alpha);
    const double s = x + y;
    if (s > 0.0) return x / s;
  }
}

Gauss1d floored(double mu, double var) { return {mu, std::max(var, kVarianceFloor)}; }

double kld_gauss1d(const Gauss1d& p, const Gauss1d& q) {
  return std::max(0.0, kld_partials(p, q).value);
}

Gauss1d moment_match_mixture(const Gauss1d& p, const Gauss1d& q) {
  const double diff = p.mu - q.mu;
  return floored(0.5 * (p.mu + q.mu), 0.5 * (p.var + q.var) + 0.25 * diff * diff);
}

double jsd_gauss1d(const Gauss1d& p, const Gauss1d& q) {
  const Gauss1d m = moment_match_mixture(p, q);
  return std::max(0.0, 0.5 * kld_partials(p, m).value + 0.5 * kld_partials(q, m).value);
}

JsdGradient jsd_gauss1d_grad(const Gauss1d& p, const Gauss1d& q) {
  const double diff = p.mu - q.mu;
  const double raw_var = 0.5 * (p.var + q.var) + 0.25 * diff * diff;
  const Gauss1d m = moment_match_mixture(p, q);
  const bool var_clamped = raw_var < kVarianceFloor;

  const KldPartials kp = kld_partials(p, m);
  const KldPartials kq = kld_partials(q, m);
  const double g_mu_m = 0.5 * kp.d_mu_b + 0.5 * kq.d_mu_b;
  const double g_var_m = var_clamped ? 0.0 : 0.5 * kp.d_var_b + 0.5 * kq.d_var_b;

  JsdGradient g;
  g.value = std::max(0.0, 0.5 * kp.value + 0.5 * kq.value);
  g.d_mu_p = 0.5 * kp.d_mu_a + 0.5 * g_mu_m + 0.5 * diff * g_var_m;
  g.d_mu_q = 0.5 * kq.d_mu_a + 0.5 * g_mu_m - 0.5 * diff * g_var_m;
  g.d_var_p = 0.5 * kp.d_var_a + 0.5 * g_var_m;
  g.d_var_q = 0.5 * kq.d_var_a + 0.5 * g_var_m;
  return g;
}

}  // namespace ares
