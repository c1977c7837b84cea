#pragma once

// Independent reference implementations used only by tests.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ares/numerics.hpp"

namespace oracle {

inline Eigen::MatrixXd regularized(const ares::GaussianModel& m) {
  const auto p = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXd s(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c)
      s(r, c) = m.sigma()(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  s += m.ridge() * Eigen::MatrixXd::Identity(p, p);
  return s;
}

/// Log-density through an explicit inverse and LU determinant.
inline double dense_logpdf(const ares::GaussianModel& m, const std::vector<double>& v) {
  const Eigen::MatrixXd s = regularized(m);
  const auto p = s.rows();
  Eigen::VectorXd d(p);
  for (Eigen::Index i = 0; i < p; ++i)
    d(i) = v[static_cast<std::size_t>(i)] - m.mu()[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd inv = s.inverse();
  const double maha = d.dot(inv * d);
  const double logdet = std::log(s.determinant());
  return -0.5 * (static_cast<double>(p) * std::log(2.0 * std::numbers::pi) + logdet + maha);
}

inline double normal_logpdf(double x, double mu, double var) {
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + (x - mu) * (x - mu) / var);
}

/// KL(p || q) by adaptive Gauss-Kronrod over ±40 standard deviations of p.
inline double quad_kld(const ares::Gauss1d& p, const ares::Gauss1d& q) {
  const double sd = std::sqrt(p.var);
  auto f = [&](double x) {
    const double lp = normal_logpdf(x, p.mu, p.var);
    return std::exp(lp) * (lp - normal_logpdf(x, q.mu, q.var));
  };
  double lo = p.mu - 40.0 * sd;
  double hi = p.mu + 40.0 * sd;
  // Split at the mean so the peak is never missed.
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  return GK::integrate(f, lo, p.mu, 20, 1e-13) + GK::integrate(f, p.mu, hi, 20, 1e-13);
}

inline double quad_jsd(const ares::Gauss1d& p, const ares::Gauss1d& q) {
  const double mu = 0.5 * (p.mu + q.mu);
  const double var = 0.5 * (p.var + q.var) + 0.25 * (p.mu - q.mu) * (p.mu - q.mu);
  const ares::Gauss1d m{mu, var};
  return 0.5 * quad_kld(p, m) + 0.5 * quad_kld(q, m);
}

/// Pair counting, ties worth one half.
inline double pair_auroc(const std::vector<double>& id, const std::vector<double>& ood) {
  std::uint64_t twice = 0;
  for (double a : id)
    for (double b : ood) twice += a > b ? 2 : (a == b ? 1 : 0);
  return static_cast<double>(twice) / (2.0 * static_cast<double>(id.size() * ood.size()));
}

/// Tries every ID score as a threshold; keeps the largest with TPR ≥ 0.95.
inline double scan_fpr95(const std::vector<double>& id, const std::vector<double>& ood) {
  bool found = false;
  double best = 0.0;
  for (double c : id) {
    std::size_t pass = 0;
    for (double a : id) pass += a >= c ? 1 : 0;
    if (20 * pass >= 19 * id.size() && (!found || c > best)) {
      best = c;
      found = true;
    }
  }
  std::size_t fp = 0;
  for (double b : ood) fp += b >= best ? 1 : 0;
  return static_cast<double>(fp) / static_cast<double>(ood.size());
}

inline std::filesystem::path temp_dir(const std::string& leaf) {
  const char* root = std::getenv("ARES_TEST_TMP");
  std::filesystem::path base = root ? root : std::filesystem::temp_directory_path() / "ares_tests";
  std::filesystem::path dir = base / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oracle
