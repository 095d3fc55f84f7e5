#include "thermofield/sparse.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <vector>

namespace thermofield {

Dictionary make_raw_dictionary(const SnapshotLibrary& lib) {
  Dictionary dict;
  dict.kind = Dictionary::Kind::raw_snapshots;
  dict.grid = lib.grid;
  dict.atoms = lib.columns;
  dict.mean = lib.centered && lib.mean ? *lib.mean
                                       : Eigen::VectorXd::Zero(lib.n());
  dict.column_norms = dict.atoms.colwise().norm();
  for (int j = 0; j < dict.m(); ++j)
    if (dict.column_norms[j] == 0.0)
      throw DataError("make_raw_dictionary: atom " + std::to_string(j) +
                      " has zero norm");
  return dict;
}

Dictionary make_pod_dictionary(const PodBasis& basis) {
  Dictionary dict;
  dict.kind = Dictionary::Kind::pod_modes;
  dict.grid = basis.grid;
  dict.atoms = basis.modes;
  dict.mean = basis.mean;
  dict.column_norms = dict.atoms.colwise().norm();
  return dict;
}

double choose_epsilon(double sigma, int p) {
  if (sigma < 0.0) throw ParameterError("choose_epsilon: sigma must be >= 0");
  if (p < 1) throw ParameterError("choose_epsilon: p must be >= 1");
  return sigma * std::sqrt(static_cast<double>(p));
}

double mean_fluctuation_energy(const SnapshotLibrary& lib) {
  if (!lib.centered)
    throw StateError("mean_fluctuation_energy: library must be centered");
  return lib.columns.colwise().norm().mean();
}

Snapshot assemble(const Dictionary& dict, const SparseSolution& sol, bool rescale,
                  std::optional<double> library_energy) {
  if (sol.s.size() != dict.m())
    throw ShapeError("assemble: solution has " + std::to_string(sol.s.size()) +
                     " coefficients, dictionary has " + std::to_string(dict.m()) +
                     " atoms");
  if (rescale && !library_energy)
    throw ParameterError("assemble: rescale requested without library_energy");

  Eigen::VectorXd fluctuation = dict.atoms * sol.s;
  if (rescale) {
    const double norm = fluctuation.norm();
    if (norm > 0.0) fluctuation *= *library_energy / norm;
  }
  Snapshot out;
  out.values = dict.mean + fluctuation;
  out.label = dict.kind == Dictionary::Kind::pod_modes ? "sparse_pod" : "sparse";
  return out;
}

namespace {

/// Exact or approximate solution of one penalized stage
/// min 0.5 ||y - D s||^2 + lambda ||s||_1 (raw coefficients).
struct StageSolve {
  Eigen::VectorXd s;
  double residual = 0.0;
  bool exact = false;       // KKT-certified on its active set
  bool can_target = false;  // ls_residual/w_norm2 valid for proposals
  double ls_residual = 0.0; // residual of the plain active-set least squares
  double w_norm2 = 0.0;     // squared norm of the penalty direction
  long iterations = 0;
};

/// FISTA over unit-normalized columns with per-column thresholds (so the
/// objective stays the raw-coefficient L1), warm-started across penalty
/// stages, with periodic active-set polishing: solve the support's normal
/// equations, and accept when signs stay consistent and the dual
/// feasibility bound holds. A certified polish is the exact stage optimum.
class BpdnEngine {
public:
  BpdnEngine(const Eigen::MatrixXd& dict, const Eigen::VectorXd& y,
             const SolverOptions& opts)
      : opts_(opts), dict_(dict), y_(y) {
    const int m = static_cast<int>(dict.cols());
    norms_ = dict.colwise().norm();
    inv_norms_.resize(m);
    unit_ = dict;
    for (int j = 0; j < m; ++j) {
      if (norms_[j] > 0.0) {
        unit_.col(j) /= norms_[j];
        inv_norms_[j] = 1.0 / norms_[j];
      } else {
        inv_norms_[j] = 1.0;
      }
    }
    lambda_max_ = (dict.transpose() * y).cwiseAbs().maxCoeff();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(unit_);
    const double sigma_max = svd.singularValues().size() > 0
                                 ? svd.singularValues()[0]
                                 : 0.0;
    lipschitz_ = std::max(sigma_max * sigma_max, 1e-300);
    iterate_ = Eigen::VectorXd::Zero(m);
  }

  double lambda_max() const { return lambda_max_; }

  StageSolve solve(double lambda) {
    const int m = static_cast<int>(unit_.cols());
    StageSolve out;

    Eigen::VectorXd s = iterate_;
    Eigen::VectorXd s_old = s;
    Eigen::VectorXd v = s;
    double t = 1.0;
    const double step = 1.0 / lipschitz_;

    for (int it = 1; it <= opts_.max_iter; ++it) {
      const Eigen::VectorXd grad = unit_.transpose() * (unit_ * v - y_);
      Eigen::VectorXd z = v - step * grad;
      s_old.swap(s);
      for (int j = 0; j < m; ++j) {
        const double thr = lambda * inv_norms_[j] * step;
        const double zj = z[j];
        s[j] = zj > thr ? zj - thr : (zj < -thr ? zj + thr : 0.0);
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      if ((v - s).dot(s - s_old) > 0.0) {
        // gradient restart
        v = s;
        t = 1.0;
      } else {
        v = s + ((t - 1.0) / t_next) * (s - s_old);
        t = t_next;
      }
      out.iterations = it;

      const double denom = std::max(s.norm(), s_old.norm());
      const double rel = denom > 0.0 ? (s - s_old).norm() / denom : 0.0;
      const bool settled = rel < opts_.iterate_tol;
      // polish early: warm-started stages usually carry the right support
      if (settled || it == 1 || it % opts_.polish_interval == 0) {
        iterate_ = s;
        if (polish(lambda, out)) return out;
        if (settled) break;
      }
    }

    iterate_ = s;
    out.s = s.cwiseProduct(inv_norms_);
    out.residual = (y_ - dict_ * out.s).norm();
    out.exact = false;
    out.can_target = false;
    return out;
  }

private:
  /// Active-set polish at the current iterate. Returns true when the
  /// polished solution satisfies the stage KKT conditions.
  bool polish(double lambda, StageSolve& out) {
    const int m = static_cast<int>(unit_.cols());
    const int p = static_cast<int>(unit_.rows());
    std::vector<int> support;
    for (int j = 0; j < m; ++j)
      if (iterate_[j] != 0.0) support.push_back(j);
    const int ns = static_cast<int>(support.size());
    if (ns == 0 || ns > p) return false;

    Eigen::MatrixXd d_s(p, ns);
    Eigen::VectorXd signs(ns);
    for (int c = 0; c < ns; ++c) {
      d_s.col(c) = dict_.col(support[static_cast<std::size_t>(c)]);
      signs[c] = iterate_[support[static_cast<std::size_t>(c)]] > 0.0 ? 1.0 : -1.0;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d_s);
    if (qr.rank() < ns) return false;

    const Eigen::MatrixXd gram = d_s.transpose() * d_s;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd u = ldlt.solve(d_s.transpose() * y_);
    const Eigen::VectorXd q = ldlt.solve(signs);
    const Eigen::VectorXd s_support = u - lambda * q;

    for (int c = 0; c < ns; ++c)
      if (s_support[c] * signs[c] <= 0.0) return false;

    const Eigen::VectorXd residual_vec = y_ - d_s * s_support;
    const Eigen::VectorXd dual = dict_.transpose() * residual_vec;
    const double slack = lambda * (1.0 + 1e-8) + 1e-14 * lambda_max_;
    if (dual.cwiseAbs().maxCoeff() > slack) return false;

    out.s = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < ns; ++c)
      out.s[support[static_cast<std::size_t>(c)]] = s_support[c];
    out.residual = residual_vec.norm();
    out.exact = true;
    out.ls_residual = (y_ - d_s * u).norm();
    out.w_norm2 = (d_s * q).squaredNorm();
    out.can_target = out.w_norm2 > 0.0;

    // keep the warm start aligned with the exact solution
    for (int c = 0; c < ns; ++c)
      iterate_[support[static_cast<std::size_t>(c)]] =
          s_support[c] * norms_[support[static_cast<std::size_t>(c)]];
    return true;
  }

  const SolverOptions opts_;
  Eigen::MatrixXd dict_;
  Eigen::MatrixXd unit_;
  Eigen::VectorXd norms_;
  Eigen::VectorXd inv_norms_;
  Eigen::VectorXd y_;
  double lipschitz_ = 1.0;
  double lambda_max_ = 0.0;
  Eigen::VectorXd iterate_; // normalized coefficients, warm start
};

} // namespace

SparseSolution bpdn_solve(const Eigen::MatrixXd& dict_measured,
                          const Eigen::VectorXd& y, double epsilon,
                          const SolverOptions& opts) {
  if (epsilon < 0.0) throw ParameterError("bpdn_solve: epsilon must be >= 0");
  if (dict_measured.rows() == 0 || dict_measured.cols() == 0)
    throw ParameterError("bpdn_solve: empty dictionary");
  if (y.size() != dict_measured.rows())
    throw ShapeError("bpdn_solve: y has " + std::to_string(y.size()) +
                     " entries, dictionary has " +
                     std::to_string(dict_measured.rows()) + " rows");
  if (!dict_measured.allFinite() || !y.allFinite())
    throw DataError("bpdn_solve: non-finite input");
  if (dict_measured.cwiseAbs().maxCoeff() == 0.0)
    throw ParameterError("bpdn_solve: dictionary is identically zero");

  const int m = static_cast<int>(dict_measured.cols());
  SparseSolution sol;
  sol.epsilon = epsilon;
  const double y_norm = y.norm();

  // Zero is feasible and has minimal L1.
  if (y_norm <= epsilon) {
    sol.s = Eigen::VectorXd::Zero(m);
    sol.residual_norm = y_norm;
    sol.l1_norm = 0.0;
    sol.converged = true;
    return sol;
  }

  const double target = std::max(epsilon, opts.epsilon_floor_rel * y_norm);
  sol.epsilon = target;

  BpdnEngine engine(dict_measured, y, opts);

  if (engine.lambda_max() == 0.0) {
    // y is orthogonal to every atom: s = 0 is the best possible iterate
    // but cannot meet the tolerance.
    sol.s = Eigen::VectorXd::Zero(m);
    sol.residual_norm = y_norm;
    sol.l1_norm = 0.0;
    sol.converged = false;
    return sol;
  }

  struct Candidate {
    Eigen::VectorXd s;
    double residual = 0.0;
    double lambda = 0.0;
    bool valid = false;
    bool exact = false;
  };
  Candidate best_feasible;
  Candidate best_any;

  // Penalty search in two phases. Continuation walks lambda down by a
  // fixed ratio so the active set migrates through the path kinks at a
  // scale the proximal iteration can follow; once a feasible stage
  // brackets the target, refinement bisects, preferring the closed-form
  // lambda that puts the certified support's residual exactly on target.
  const double rho = 0.5;
  const double lambda_max = engine.lambda_max();
  double lam_lo = 0.0; // feasible side (residual <= target), once found
  double lam_hi = lambda_max;
  bool bracketed = false;
  double lam = rho * lambda_max;
  long total_iterations = 0;

  for (int round = 0; round < opts.max_bisect; ++round) {
    const StageSolve stage = engine.solve(lam);
    total_iterations += stage.iterations;

    if (!best_any.valid || stage.residual < best_any.residual)
      best_any = {stage.s, stage.residual, lam, true, stage.exact};

    double proposal = std::numeric_limits<double>::quiet_NaN();
    if (stage.can_target && target >= stage.ls_residual) {
      const double delta2 =
          target * target - stage.ls_residual * stage.ls_residual;
      proposal = std::sqrt(std::max(delta2, 0.0) / stage.w_norm2);
    }

    if (stage.residual <= target) {
      if (!best_feasible.valid || lam > best_feasible.lambda)
        best_feasible = {stage.s, stage.residual, lam, true, stage.exact};
      lam_lo = lam;
      bracketed = true;
      // a certified support with the residual on target is the optimum
      if (stage.exact && std::abs(stage.residual - target) <= 1e-9 * target)
        break;
    } else {
      lam_hi = lam;
    }

    if (lam_hi - lam_lo <= 1e-14 * lambda_max) break;

    double next = proposal;
    bool usable = std::isfinite(next) && next > lam_lo && next < lam_hi &&
                  std::abs(next - lam) > 1e-16 * lambda_max;
    if (!bracketed && usable)
      next = std::max(next, lam * rho); // never outrun the continuation
    else if (!usable)
      next = bracketed ? 0.5 * (lam_lo + lam_hi) : lam * rho;
    lam = next;
  }

  sol.iterations = total_iterations;
  if (best_feasible.valid) {
    sol.s = best_feasible.s;
    sol.residual_norm = best_feasible.residual;
    sol.lambda = best_feasible.lambda;
    sol.converged = true;
  } else {
    sol.s = best_any.s;
    sol.residual_norm = best_any.residual;
    sol.lambda = best_any.lambda;
    sol.converged = false;
  }
  sol.l1_norm = sol.s.lpNorm<1>();
  return sol;
}

SparseSolution robust_solve(const Eigen::MatrixXd& dict_measured,
                            const Eigen::VectorXd& y, double epsilon,
                            const SolverOptions& opts) {
  if (opts.weight_e < 0.0)
    throw ParameterError("robust_solve: weight_e must be >= 0");
  const int p = static_cast<int>(dict_measured.rows());
  const int m = static_cast<int>(dict_measured.cols());

  if (opts.weight_e == 0.0) {
    // outlier columns suppressed: exactly the plain solve
    SparseSolution sol = bpdn_solve(dict_measured, y, epsilon, opts);
    sol.e = Eigen::VectorXd::Zero(p);
    return sol;
  }

  Eigen::MatrixXd augmented(p, m + p);
  augmented.leftCols(m) = dict_measured;
  augmented.rightCols(p) =
      opts.weight_e * Eigen::MatrixXd::Identity(p, p);

  SparseSolution inner = bpdn_solve(augmented, y, epsilon, opts);
  SparseSolution sol;
  sol.s = inner.s.head(m);
  sol.e = opts.weight_e * inner.s.tail(p);
  sol.residual_norm = inner.residual_norm;
  sol.l1_norm = sol.s.lpNorm<1>();
  sol.iterations = inner.iterations;
  sol.epsilon = inner.epsilon;
  sol.converged = inner.converged;
  sol.lambda = inner.lambda;
  return sol;
}

} // namespace thermofield
