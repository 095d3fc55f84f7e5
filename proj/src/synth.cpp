#include "thermofield/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thermofield/rng.hpp"

namespace thermofield {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void validate_params(const FieldGrid& grid, const StratificationParams& p) {
  if (p.t_surface_c < p.t_bottom_c)
    throw ParameterError("StratificationParams: t_surface_c must be >= t_bottom_c");
  if (!(p.thermocline_width_m > 0.0))
    throw ParameterError("StratificationParams: thermocline_width_m must be positive");
  if (p.intake_strength_c < 0.0)
    throw ParameterError("StratificationParams: intake_strength_c must be >= 0");
  if (p.perturbation_amplitude_c < 0.0)
    throw ParameterError("StratificationParams: perturbation_amplitude_c must be >= 0");
  if (p.intake_depth_m < 0.0 || p.intake_depth_m > grid.max_depth_m())
    throw ParameterError("StratificationParams: intake_depth_m " +
                         std::to_string(p.intake_depth_m) +
                         " outside water column [0, " +
                         std::to_string(grid.max_depth_m()) + "]");
}

/// Smooth perturbation, separable as P(x) * Q(z) with P in [0, amp] and Q
/// non-increasing in depth, so adding it never breaks per-column
/// monotonicity of the stratified profile.
struct Perturbation {
  Perturbation(const FieldGrid& grid, double amplitude, std::uint64_t seed)
      : amp(amplitude) {
    Rng rng(mix_seed({seed, 0x70657254ULL}));
    for (int i = 0; i < kTerms; ++i) {
      coeff[i] = rng.uniform(-1.0, 1.0);
      phase[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    double total = 0.0;
    for (int i = 0; i < kTerms; ++i) total += std::abs(coeff[i]);
    coeff_scale = total > 0.0 ? 0.5 / total : 0.0;
    q_depth = rng.uniform(0.3, 0.7) * grid.max_depth_m();
    q_width = rng.uniform(0.1, 0.2) * grid.max_depth_m();
  }

  double operator()(double xi, double z) const {
    if (amp == 0.0) return 0.0;
    double s = 0.0;
    for (int i = 0; i < kTerms; ++i)
      s += coeff[i] * std::sin(2.0 * std::numbers::pi * (i + 1) * xi + phase[i]);
    const double p = amp * (0.5 + coeff_scale * s); // in [0, amp]
    const double q = logistic((q_depth - z) / q_width);
    return p * q;
  }

  static constexpr int kTerms = 3;
  double amp;
  double coeff[kTerms];
  double phase[kTerms];
  double coeff_scale = 0.0;
  double q_depth = 0.0;
  double q_width = 1.0;
};

} // namespace

Snapshot generate_snapshot(const FieldGrid& grid, const StratificationParams& p) {
  validate_params(grid, p);
  const Perturbation perturbation(grid, p.perturbation_amplitude_c, p.seed);

  Snapshot snapshot;
  snapshot.label = "intake_" + std::to_string(p.intake_depth_m);
  snapshot.values.resize(grid.n());
  const double delta_t = p.t_surface_c - p.t_bottom_c;
  for (int state = 0; state < grid.n(); ++state) {
    const auto [col, layer] = grid.cell_of(state);
    const double z = grid.layer_mid_depth_m(layer);
    const double x_km = grid.column_mid_position_m(col) / 1000.0;
    const double xi = (col + 0.5) / grid.nx();

    double t = p.t_bottom_c +
               delta_t * logistic((p.thermocline_depth_m - z) / p.thermocline_width_m);
    t += p.longitudinal_gradient_c_per_km * x_km;
    const double dip = (z - p.intake_depth_m) / (2.0 * grid.dz_m());
    t -= p.intake_strength_c * std::exp(-dip * dip);
    t += perturbation(xi, z);
    snapshot.values[state] = t;
  }
  return snapshot;
}

namespace {

bool empty_variation(const LibraryVariation& v) {
  return v.t_surface_c == 0.0 && v.t_bottom_c == 0.0 &&
         v.thermocline_depth_m == 0.0 && v.thermocline_width_m == 0.0 &&
         v.longitudinal_gradient_c_per_km == 0.0 && v.intake_depth_m == 0.0 &&
         v.intake_strength_c == 0.0;
}

} // namespace

StratificationParams library_member_params(const StratificationParams& base,
                                           const LibraryVariation& v,
                                           std::uint64_t seed, int index,
                                           const FieldGrid& grid) {
  // An empty spread means duplicated columns: every member is the base
  // snapshot, perturbation pattern included.
  if (empty_variation(v)) return base;

  Rng rng(mix_seed({seed, 0x6c696272ULL, static_cast<std::uint64_t>(index)}));
  auto jitter = [&rng](double centre, double half_width) {
    return half_width > 0.0 ? centre + rng.uniform(-half_width, half_width) : centre;
  };
  StratificationParams p = base;
  p.t_surface_c = jitter(base.t_surface_c, v.t_surface_c);
  p.t_bottom_c = jitter(base.t_bottom_c, v.t_bottom_c);
  p.thermocline_depth_m = jitter(base.thermocline_depth_m, v.thermocline_depth_m);
  p.thermocline_width_m = jitter(base.thermocline_width_m, v.thermocline_width_m);
  p.longitudinal_gradient_c_per_km =
      jitter(base.longitudinal_gradient_c_per_km, v.longitudinal_gradient_c_per_km);
  p.intake_depth_m = jitter(base.intake_depth_m, v.intake_depth_m);
  p.intake_strength_c = jitter(base.intake_strength_c, v.intake_strength_c);

  // Clamp jittered values back into the valid region.
  p.t_bottom_c = std::min(p.t_bottom_c, p.t_surface_c);
  p.thermocline_width_m = std::max(p.thermocline_width_m, 1e-3);
  p.intake_strength_c = std::max(p.intake_strength_c, 0.0);
  p.intake_depth_m = std::clamp(p.intake_depth_m, 0.0, grid.max_depth_m());
  p.seed = mix_seed({seed, 0x736e6170ULL, static_cast<std::uint64_t>(index)});
  return p;
}

SnapshotLibrary generate_library(GridPtr grid, const StratificationParams& base,
                                 int n_snapshots, const LibraryVariation& variation,
                                 std::uint64_t seed) {
  if (!grid) throw ParameterError("generate_library: null grid");
  if (n_snapshots < 1)
    throw ParameterError("generate_library: n_snapshots must be >= 1");
  validate_params(*grid, base);

  Eigen::MatrixXd columns(grid->n(), n_snapshots);
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n_snapshots));
  for (int j = 0; j < n_snapshots; ++j) {
    const StratificationParams p = library_member_params(base, variation, seed, j, *grid);
    columns.col(j) = generate_snapshot(*grid, p).values;
    labels.push_back("train_" + std::to_string(j));
  }
  return make_library(std::move(grid), std::move(columns), std::move(labels));
}

} // namespace thermofield
