#pragma once

#include <optional>

#include "thermofield/grid.hpp"
#include "thermofield/pod.hpp"

namespace thermofield {

/// Reconstruction prior for the sparse solver: columns are either raw
/// snapshot fluctuations or orthonormal POD modes, plus the mean they
/// fluctuate around.
struct Dictionary {
  enum class Kind { raw_snapshots, pod_modes };

  Kind kind = Kind::raw_snapshots;
  GridPtr grid;
  Eigen::MatrixXd atoms; // n x m
  Eigen::VectorXd mean;
  Eigen::VectorXd column_norms;

  int m() const { return static_cast<int>(atoms.cols()); }
};

/// Raw-snapshot dictionary. A centered library contributes its
/// fluctuation columns and mean; an uncentered one contributes the
/// columns as-is with a zero mean.
Dictionary make_raw_dictionary(const SnapshotLibrary& lib);

Dictionary make_pod_dictionary(const PodBasis& basis);

struct SolverOptions {
  int max_iter = 50000;            // proximal iterations per penalty stage
  double iterate_tol = 1e-10;      // relative iterate-change stop
  double bisect_rel_tol = 1e-3;    // residual-vs-epsilon match tolerance
  int max_bisect = 80;             // penalty bisection stages
  double epsilon_floor_rel = 1e-8; // epsilon = 0 solves to this * ||y||_2
  double weight_e = 1.0;           // outlier column scale; 0 suppresses them
  int polish_interval = 25;        // iterations between exact-solve attempts
};

/// Solution of the L1 recovery problem. `epsilon` records the tolerance the
/// solver actually worked to (requesting 0 switches to a minimum-L1
/// interpolation with a small relative floor). For robust solves,
/// residual_norm is that of the augmented system y - D s - e.
struct SparseSolution {
  Eigen::VectorXd s;
  std::optional<Eigen::VectorXd> e;
  double residual_norm = 0.0;
  double l1_norm = 0.0;
  long iterations = 0;
  double epsilon = 0.0;
  bool converged = false;
  double lambda = 0.0; // penalty weight behind the returned iterate
};

/// Minimizes ||s||_1 subject to ||y - dict_measured * s||_2 <= epsilon.
/// Internally solves the penalized form by accelerated proximal gradient
/// over unit-normalized columns, adjusting the penalty by bisection until
/// the residual matches epsilon; active-set KKT polishing makes the
/// per-penalty solutions exact. Deterministic in (inputs, options).
SparseSolution bpdn_solve(const Eigen::MatrixXd& dict_measured,
                          const Eigen::VectorXd& y, double epsilon,
                          const SolverOptions& opts = {});

/// Jointly minimizes ||s||_1 + ||e||_1 over the augmented dictionary
/// [dict_measured | weight_e * I], where e absorbs gross sensor outliers.
/// weight_e = 0 suppresses the outlier columns and reduces to bpdn_solve.
SparseSolution robust_solve(const Eigen::MatrixXd& dict_measured,
                            const Eigen::VectorXd& y, double epsilon,
                            const SolverOptions& opts = {});

/// xhat = mean + atoms * s, optionally rescaling the fluctuation to the
/// library energy (mean centered-column norm) to counter the amplitude
/// shrinkage of noisy solves.
Snapshot assemble(const Dictionary& dict, const SparseSolution& sol, bool rescale,
                  std::optional<double> library_energy = std::nullopt);

/// Expected noise-vector norm scale: sigma * sqrt(p).
double choose_epsilon(double sigma, int p);

/// Mean L2 norm of the centered training columns; the rescaling target.
double mean_fluctuation_energy(const SnapshotLibrary& centered_lib);

} // namespace thermofield
