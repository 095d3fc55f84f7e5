#include "thermofield/pod.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace thermofield {

namespace {

constexpr double kRankCutoff = 1e-12;

} // namespace

PodBasis compute_pod(const SnapshotLibrary& lib, int k) {
  if (!lib.centered || !lib.mean)
    throw StateError("compute_pod: library must be centered first");
  const int n = lib.n();
  const int r = lib.r();
  if (k < 1 || k > std::min(n, r))
    throw ParameterError("compute_pod: k = " + std::to_string(k) +
                         " outside [1, min(n, r) = " +
                         std::to_string(std::min(n, r)) + "]");

  Eigen::VectorXd sigma;      // full spectrum, non-increasing
  Eigen::MatrixXd left;       // matching left singular vectors
  if (n > r) {
    // Snapshot method: eigenpairs of the small Gram matrix.
    const Eigen::MatrixXd gram = lib.columns.transpose() * lib.columns;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success)
      throw NumericalError("compute_pod: Gram eigendecomposition failed");
    // Eigen returns ascending order; flip.
    sigma.resize(r);
    Eigen::MatrixXd v(r, r);
    for (int i = 0; i < r; ++i) {
      sigma[i] = std::sqrt(std::max(eig.eigenvalues()[r - 1 - i], 0.0));
      v.col(i) = eig.eigenvectors().col(r - 1 - i);
    }
    const double cutoff = kRankCutoff * sigma[0];
    int rank = 0;
    while (rank < r && sigma[rank] > cutoff) ++rank;
    left.resize(n, rank);
    for (int i = 0; i < rank; ++i)
      left.col(i) = lib.columns * v.col(i) / sigma[i];
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(lib.columns,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues();
    left = svd.matrixU();
  }

  const double cutoff = kRankCutoff * sigma[0];
  int rank = 0;
  while (rank < sigma.size() && sigma[rank] > cutoff) ++rank;
  if (rank == 0)
    throw NumericalError("compute_pod: snapshot matrix is numerically zero");
  const int k_eff = std::min(k, rank);

  PodBasis basis;
  basis.grid = lib.grid;
  basis.requested_k = k;
  basis.modes = left.leftCols(k_eff);
  basis.singular_values = sigma.head(k_eff);
  basis.mean = *lib.mean;

  const double total_energy = sigma.array().square().sum();
  basis.energy_fractions.resize(k_eff);
  double cumulative = 0.0;
  for (int i = 0; i < k_eff; ++i) {
    cumulative += sigma[i] * sigma[i];
    basis.energy_fractions[i] = total_energy > 0.0 ? cumulative / total_energy : 0.0;
  }
  return basis;
}

ReconstructionResult gappy_reconstruct(const PodBasis& basis,
                                       const MeasurementOperator& op,
                                       const Eigen::VectorXd& y,
                                       const GappyOptions& opts,
                                       const Snapshot* truth) {
  if (!basis.grid || !op.grid)
    throw ParameterError("gappy_reconstruct: missing grid");
  if (!basis.grid->same_layout(*op.grid))
    throw ShapeError("gappy_reconstruct: operator and basis grids differ");
  const int p = op.p();
  const int k = basis.k();
  if (y.size() != p)
    throw ShapeError("gappy_reconstruct: y has " + std::to_string(y.size()) +
                     " entries, operator has p = " + std::to_string(p));
  if (p < k && !opts.allow_ridge)
    throw NumericalError("gappy_reconstruct: p = " + std::to_string(p) +
                         " observations cannot determine k = " + std::to_string(k) +
                         " coefficients without regularization");

  const Eigen::MatrixXd sampled = select_rows(op, basis.modes); // C Phi
  const Eigen::VectorXd rhs = y - select_rows(op, basis.mean);  // y - C mean

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sampled,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv[0] : 0.0;
  const double sigma_min = sv.size() > 0 ? sv[sv.size() - 1] : 0.0;
  const bool rank_deficient = p < k || sigma_min <= 0.0;
  const double cond = rank_deficient
                          ? std::numeric_limits<double>::infinity()
                          : sigma_max / sigma_min;

  ReconstructionResult result;
  if (opts.allow_ridge && cond > opts.cond_threshold) {
    const double mu = opts.ridge_factor * sigma_max * sigma_max;
    const Eigen::MatrixXd normal =
        sampled.transpose() * sampled + mu * Eigen::MatrixXd::Identity(k, k);
    result.coefficients = normal.ldlt().solve(sampled.transpose() * rhs);
    result.ridge_mu = mu;
  } else {
    // SVD least squares (minimum-norm when rank deficient).
    result.coefficients = svd.solve(rhs);
    result.ridge_mu = 0.0;
  }

  result.residual_norm = (rhs - sampled * result.coefficients).norm();
  result.xhat.values = basis.mean + basis.modes * result.coefficients;
  result.xhat.label = "gappy_pod";
  if (truth) {
    result.metrics =
        make_error_report(*truth, result.xhat, basis.mean, *basis.grid);
  }
  return result;
}

} // namespace thermofield
