#pragma once

#include <optional>

#include "thermofield/grid.hpp"
#include "thermofield/metrics.hpp"
#include "thermofield/sensing.hpp"

namespace thermofield {

/// Truncated orthonormal POD basis of a centered snapshot library.
/// If the requested mode count exceeds the numerical rank, the basis is
/// truncated (never padded); compare k() against requested_k.
struct PodBasis {
  GridPtr grid;
  Eigen::MatrixXd modes;            // n x k, orthonormal columns
  Eigen::VectorXd singular_values;  // non-increasing, positive
  Eigen::VectorXd mean;             // library mean the modes fluctuate around
  Eigen::VectorXd energy_fractions; // cumulative, normalized by the full spectrum
  int requested_k = 0;

  int k() const { return static_cast<int>(modes.cols()); }
};

/// Top-k left singular vectors of the centered snapshot matrix. Uses the
/// r x r Gram eigendecomposition when n > r (snapshot method), direct SVD
/// otherwise. Singular values below 1e-12 of the largest count as zero.
PodBasis compute_pod(const SnapshotLibrary& lib, int k);

struct GappyOptions {
  /// Tikhonov fallback for ill-conditioned sampled bases. With it off,
  /// p < k raises NumericalError.
  bool allow_ridge = true;
  double cond_threshold = 1e8;
  double ridge_factor = 1e-8; // mu = ridge_factor * ||C Phi||_2^2
};

/// Output of a field reconstruction: the estimate, the coefficients in the
/// basis/dictionary, the measurement-space residual, and (when the truth
/// was supplied) error metrics.
struct ReconstructionResult {
  Snapshot xhat;
  Eigen::VectorXd coefficients;
  double residual_norm = 0.0;
  double ridge_mu = 0.0; // 0 when no regularization was applied
  std::optional<ErrorReport> metrics;
};

/// Least-squares fit of mode coefficients to the observed entries:
/// a = argmin ||y - C(mean) - (C Phi) a||_2, xhat = mean + Phi a.
ReconstructionResult gappy_reconstruct(const PodBasis& basis,
                                       const MeasurementOperator& op,
                                       const Eigen::VectorXd& y,
                                       const GappyOptions& opts = {},
                                       const Snapshot* truth = nullptr);

} // namespace thermofield
