#pragma once

// Exhaustive enumeration oracle for small basis-pursuit-denoising
// instances. Fully independent of the production solver: no proximal
// iterations, no penalty bisection. For epsilon = 0 it enumerates the
// vertices of the equivalent linear program (supports of size <= p with a
// consistent square/tall solve); for epsilon > 0 it enumerates
// (support, sign) pairs, solves the stationarity conditions in closed form
// and keeps candidates whose multiplier is dual-feasible. Intended for
// m <= ~12 atoms only.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

namespace bpdn_oracle {

struct OracleSolution {
  Eigen::VectorXd s;
  double l1 = 0.0;
  double residual = 0.0;
};

inline void enumerate_supports(int m, int max_size,
                               std::vector<std::vector<int>>& out) {
  out.clear();
  const int total = 1 << m;
  for (int mask = 1; mask < total; ++mask) {
    std::vector<int> support;
    for (int j = 0; j < m; ++j)
      if (mask & (1 << j)) support.push_back(j);
    if (static_cast<int>(support.size()) <= max_size) out.push_back(support);
  }
}

/// Minimum-L1 interpolation: min ||s||_1 subject to D s = y.
inline std::optional<OracleSolution> solve_equality(const Eigen::MatrixXd& dict,
                                                    const Eigen::VectorXd& y) {
  const int p = static_cast<int>(dict.rows());
  const int m = static_cast<int>(dict.cols());
  const double y_norm = y.norm();
  if (y_norm == 0.0)
    return OracleSolution{Eigen::VectorXd::Zero(m), 0.0, 0.0};

  std::vector<std::vector<int>> supports;
  enumerate_supports(m, std::min(p, m), supports);

  std::optional<OracleSolution> best;
  for (const auto& support : supports) {
    const int ns = static_cast<int>(support.size());
    Eigen::MatrixXd d_s(p, ns);
    for (int c = 0; c < ns; ++c) d_s.col(c) = dict.col(support[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d_s);
    if (qr.rank() < ns) continue;
    const Eigen::VectorXd s_support = qr.solve(y);
    const double residual = (y - d_s * s_support).norm();
    if (residual > 1e-9 * y_norm) continue; // inconsistent: not an interpolant
    Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < ns; ++c) s[support[c]] = s_support[c];
    const double l1 = s.lpNorm<1>();
    if (!best || l1 < best->l1) best = OracleSolution{s, l1, residual};
  }
  return best;
}

/// min ||s||_1 subject to ||y - D s||_2 <= epsilon, via KKT enumeration.
inline std::optional<OracleSolution> solve(const Eigen::MatrixXd& dict,
                                           const Eigen::VectorXd& y,
                                           double epsilon) {
  const int m = static_cast<int>(dict.cols());
  const double y_norm = y.norm();
  if (y_norm <= epsilon)
    return OracleSolution{Eigen::VectorXd::Zero(m), 0.0, y_norm};
  if (epsilon == 0.0) return solve_equality(dict, y);

  std::vector<std::vector<int>> supports;
  enumerate_supports(m, m, supports);

  std::optional<OracleSolution> best;
  for (const auto& support : supports) {
    const int ns = static_cast<int>(support.size());
    Eigen::MatrixXd d_s(dict.rows(), ns);
    for (int c = 0; c < ns; ++c) d_s.col(c) = dict.col(support[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d_s);
    if (qr.rank() < ns) continue;
    const Eigen::MatrixXd gram = d_s.transpose() * d_s;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd u = ldlt.solve(d_s.transpose() * y);
    const Eigen::VectorXd r_u = y - d_s * u;
    const double ls_residual = r_u.norm();
    if (epsilon < ls_residual) continue; // this support cannot reach epsilon

    for (int sign_mask = 0; sign_mask < (1 << ns); ++sign_mask) {
      Eigen::VectorXd signs(ns);
      for (int c = 0; c < ns; ++c) signs[c] = (sign_mask & (1 << c)) ? -1.0 : 1.0;
      const Eigen::VectorXd q = ldlt.solve(signs);
      const double w_norm2 = (d_s * q).squaredNorm();
      if (w_norm2 <= 0.0) continue;
      const double lambda =
          std::sqrt((epsilon * epsilon - ls_residual * ls_residual) / w_norm2);
      if (!(lambda > 0.0)) continue;
      const Eigen::VectorXd s_support = u - lambda * q;
      bool signs_ok = true;
      for (int c = 0; c < ns; ++c)
        if (s_support[c] * signs[c] <= 0.0) signs_ok = false;
      if (!signs_ok) continue;
      const Eigen::VectorXd residual_vec = y - d_s * s_support;
      const Eigen::VectorXd dual = dict.transpose() * residual_vec;
      if (dual.cwiseAbs().maxCoeff() > lambda * (1.0 + 1e-9) + 1e-12) continue;

      Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
      for (int c = 0; c < ns; ++c) s[support[c]] = s_support[c];
      const double l1 = s.lpNorm<1>();
      if (!best || l1 < best->l1)
        best = OracleSolution{s, l1, residual_vec.norm()};
    }
  }
  return best;
}

} // namespace bpdn_oracle
