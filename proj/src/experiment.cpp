#include "thermofield/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "thermofield/io.hpp"
#include "thermofield/rng.hpp"

namespace thermofield {

using nlohmann::json;
namespace fs = std::filesystem;

std::string method_name(Method method) {
  switch (method) {
    case Method::gappy_pod: return "gappy_pod";
    case Method::sparse_raw: return "sparse_raw";
    case Method::sparse_pod: return "sparse_pod";
    case Method::robust_sparse: return "robust_sparse";
  }
  throw ParameterError("method_name: invalid method");
}

Method method_from_name(const std::string& name) {
  if (name == "gappy_pod") return Method::gappy_pod;
  if (name == "sparse_raw") return Method::sparse_raw;
  if (name == "sparse_pod") return Method::sparse_pod;
  if (name == "robust_sparse") return Method::robust_sparse;
  throw ParameterError("unknown method '" + name + "'");
}

bool method_uses_pod_basis(Method method) {
  return method == Method::gappy_pod || method == Method::sparse_pod;
}

namespace {

// Seed stream tags keep the derived 64-bit streams disjoint.
constexpr std::uint64_t kStreamLibrary = 1;
constexpr std::uint64_t kStreamTest = 2;
constexpr std::uint64_t kStreamOperator = 3;
constexpr std::uint64_t kStreamNoise = 4;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& context) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) known = true;
    if (!known)
      throw FormatError("config: unknown key '" + item.key() + "' in " + context);
  }
}

StratificationParams parse_base(const json& obj) {
  reject_unknown(obj,
                 {"t_surface_c", "t_bottom_c", "thermocline_depth_m",
                  "thermocline_width_m", "longitudinal_gradient_c_per_km",
                  "intake_depth_m", "intake_strength_c",
                  "perturbation_amplitude_c"},
                 "data.synthetic.base");
  StratificationParams base;
  base.t_surface_c = obj.value("t_surface_c", base.t_surface_c);
  base.t_bottom_c = obj.value("t_bottom_c", base.t_bottom_c);
  base.thermocline_depth_m = obj.value("thermocline_depth_m", base.thermocline_depth_m);
  base.thermocline_width_m = obj.value("thermocline_width_m", base.thermocline_width_m);
  base.longitudinal_gradient_c_per_km =
      obj.value("longitudinal_gradient_c_per_km", base.longitudinal_gradient_c_per_km);
  base.intake_depth_m = obj.value("intake_depth_m", base.intake_depth_m);
  base.intake_strength_c = obj.value("intake_strength_c", base.intake_strength_c);
  base.perturbation_amplitude_c =
      obj.value("perturbation_amplitude_c", base.perturbation_amplitude_c);
  return base;
}

LibraryVariation parse_variation(const json& obj) {
  reject_unknown(obj,
                 {"t_surface_c", "t_bottom_c", "thermocline_depth_m",
                  "thermocline_width_m", "longitudinal_gradient_c_per_km",
                  "intake_depth_m", "intake_strength_c"},
                 "data.synthetic.variation");
  LibraryVariation v;
  v.t_surface_c = obj.value("t_surface_c", 0.0);
  v.t_bottom_c = obj.value("t_bottom_c", 0.0);
  v.thermocline_depth_m = obj.value("thermocline_depth_m", 0.0);
  v.thermocline_width_m = obj.value("thermocline_width_m", 0.0);
  v.longitudinal_gradient_c_per_km = obj.value("longitudinal_gradient_c_per_km", 0.0);
  v.intake_depth_m = obj.value("intake_depth_m", 0.0);
  v.intake_strength_c = obj.value("intake_strength_c", 0.0);
  return v;
}

SolverOptions parse_solver(const json& obj) {
  reject_unknown(obj,
                 {"max_iter", "iterate_tol", "bisect_rel_tol", "max_bisect",
                  "epsilon_floor_rel", "weight_e", "polish_interval"},
                 "solver");
  SolverOptions opts;
  opts.max_iter = obj.value("max_iter", opts.max_iter);
  opts.iterate_tol = obj.value("iterate_tol", opts.iterate_tol);
  opts.bisect_rel_tol = obj.value("bisect_rel_tol", opts.bisect_rel_tol);
  opts.max_bisect = obj.value("max_bisect", opts.max_bisect);
  opts.epsilon_floor_rel = obj.value("epsilon_floor_rel", opts.epsilon_floor_rel);
  opts.weight_e = obj.value("weight_e", opts.weight_e);
  opts.polish_interval = obj.value("polish_interval", opts.polish_interval);
  return opts;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw FormatError("config: expected a JSON object");
  reject_unknown(doc,
                 {"data", "methods", "k_list", "p_list", "placement",
                  "conditions", "trials", "base_seed", "noise", "epsilon",
                  "rescale", "solver", "output_dir"},
                 "top level");
  ExperimentConfig config;

  if (!doc.contains("data"))
    throw FormatError("config: missing 'data' section");
  const json& data = doc.at("data");
  reject_unknown(data, {"source", "synthetic", "files"}, "data");
  const std::string source = data.value("source", "synthetic");
  if (source == "synthetic") {
    config.synthetic = true;
    const json synth = data.value("synthetic", json::object());
    reject_unknown(synth,
                   {"grid_spec", "train_snapshots", "base", "variation"},
                   "data.synthetic");
    if (synth.contains("grid_spec"))
      config.synth.grid_spec_path = synth.at("grid_spec").get<std::string>();
    config.synth.train_snapshots = synth.value("train_snapshots", 50);
    if (synth.contains("base")) config.synth.base = parse_base(synth.at("base"));
    if (synth.contains("variation"))
      config.synth.variation = parse_variation(synth.at("variation"));
  } else if (source == "files") {
    config.synthetic = false;
    if (!data.contains("files"))
      throw FormatError("config: data.source is 'files' but data.files is missing");
    const json& files = data.at("files");
    reject_unknown(files, {"grid_spec", "snapshots_csv", "train_indices", "test_indices"},
                   "data.files");
    for (const char* key : {"grid_spec", "snapshots_csv", "train_indices", "test_indices"})
      if (!files.contains(key))
        throw FormatError("config: data.files is missing '" + std::string(key) + "'");
    config.files.grid_spec = files.at("grid_spec").get<std::string>();
    config.files.snapshots_csv = files.at("snapshots_csv").get<std::string>();
    config.files.train_indices = files.at("train_indices").get<std::vector<int>>();
    config.files.test_indices = files.at("test_indices").get<std::vector<int>>();
  } else {
    throw FormatError("config: data.source must be 'synthetic' or 'files'");
  }

  if (!doc.contains("methods"))
    throw FormatError("config: missing 'methods'");
  for (const auto& entry : doc.at("methods"))
    config.methods.push_back(method_from_name(entry.get<std::string>()));

  config.k_list = doc.value("k_list", std::vector<int>{2});
  config.p_list = doc.value("p_list", std::vector<int>{10});
  config.placement = placement_from_name(doc.value("placement", "random_points"));
  config.conditions = doc.value("conditions", std::vector<double>{25.0});
  config.trials = doc.value("trials", 20);
  config.base_seed = doc.value("base_seed", std::uint64_t{0});

  if (doc.contains("noise")) {
    const json& noise = doc.at("noise");
    reject_unknown(noise, {"gaussian_sigma", "corruption_fraction", "corruption_scale"},
                   "noise");
    config.noise.gaussian_sigma = noise.value("gaussian_sigma", 0.0);
    config.noise.corruption_fraction = noise.value("corruption_fraction", 0.0);
    config.noise.corruption_scale = noise.value("corruption_scale", 0.0);
  }

  if (doc.contains("epsilon")) {
    const json& eps = doc.at("epsilon");
    reject_unknown(eps, {"mode", "scale", "value"}, "epsilon");
    const std::string mode = eps.value("mode", "auto");
    if (mode == "auto") {
      config.epsilon.mode = EpsilonPolicy::Mode::automatic;
      config.epsilon.scale = eps.value("scale", 1.0);
    } else if (mode == "fixed") {
      config.epsilon.mode = EpsilonPolicy::Mode::fixed;
      config.epsilon.value = eps.value("value", 0.0);
    } else {
      throw FormatError("config: epsilon.mode must be 'auto' or 'fixed'");
    }
  }

  config.rescale = doc.value("rescale", false);
  if (doc.contains("solver")) config.solver = parse_solver(doc.at("solver"));
  config.output_dir = doc.value("output_dir", "out");

  validate_config(config);
  return config;
}

json base_to_json(const StratificationParams& base) {
  return json{{"t_surface_c", base.t_surface_c},
              {"t_bottom_c", base.t_bottom_c},
              {"thermocline_depth_m", base.thermocline_depth_m},
              {"thermocline_width_m", base.thermocline_width_m},
              {"longitudinal_gradient_c_per_km", base.longitudinal_gradient_c_per_km},
              {"intake_depth_m", base.intake_depth_m},
              {"intake_strength_c", base.intake_strength_c},
              {"perturbation_amplitude_c", base.perturbation_amplitude_c}};
}

json variation_to_json(const LibraryVariation& v) {
  return json{{"t_surface_c", v.t_surface_c},
              {"t_bottom_c", v.t_bottom_c},
              {"thermocline_depth_m", v.thermocline_depth_m},
              {"thermocline_width_m", v.thermocline_width_m},
              {"longitudinal_gradient_c_per_km", v.longitudinal_gradient_c_per_km},
              {"intake_depth_m", v.intake_depth_m},
              {"intake_strength_c", v.intake_strength_c}};
}

json config_to_json(const ExperimentConfig& config) {
  json data;
  if (config.synthetic) {
    data["source"] = "synthetic";
    json synth;
    if (config.synth.grid_spec_path) synth["grid_spec"] = *config.synth.grid_spec_path;
    synth["train_snapshots"] = config.synth.train_snapshots;
    synth["base"] = base_to_json(config.synth.base);
    synth["variation"] = variation_to_json(config.synth.variation);
    data["synthetic"] = synth;
  } else {
    data["source"] = "files";
    data["files"] = json{{"grid_spec", config.files.grid_spec},
                         {"snapshots_csv", config.files.snapshots_csv},
                         {"train_indices", config.files.train_indices},
                         {"test_indices", config.files.test_indices}};
  }
  std::vector<std::string> methods;
  methods.reserve(config.methods.size());
  for (Method method : config.methods) methods.push_back(method_name(method));

  json eps;
  if (config.epsilon.mode == EpsilonPolicy::Mode::automatic)
    eps = json{{"mode", "auto"}, {"scale", config.epsilon.scale}};
  else
    eps = json{{"mode", "fixed"}, {"value", config.epsilon.value}};

  // output_dir is deliberately absent: the canonical form identifies the
  // experiment, not where its files land
  return json{
      {"data", data},
      {"methods", methods},
      {"k_list", config.k_list},
      {"p_list", config.p_list},
      {"placement", placement_name(config.placement)},
      {"conditions", config.conditions},
      {"trials", config.trials},
      {"base_seed", config.base_seed},
      {"noise", json{{"gaussian_sigma", config.noise.gaussian_sigma},
                     {"corruption_fraction", config.noise.corruption_fraction},
                     {"corruption_scale", config.noise.corruption_scale}}},
      {"epsilon", eps},
      {"rescale", config.rescale},
      {"solver", json{{"max_iter", config.solver.max_iter},
                      {"iterate_tol", config.solver.iterate_tol},
                      {"bisect_rel_tol", config.solver.bisect_rel_tol},
                      {"max_bisect", config.solver.max_bisect},
                      {"epsilon_floor_rel", config.solver.epsilon_floor_rel},
                      {"weight_e", config.solver.weight_e},
                      {"polish_interval", config.solver.polish_interval}}}};
}

} // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "' for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw FormatError("config '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

void validate_config(const ExperimentConfig& config) {
  if (config.methods.empty())
    throw ParameterError("config: methods list is empty");
  if (config.k_list.empty())
    throw ParameterError("config: k_list is empty");
  if (config.p_list.empty())
    throw ParameterError("config: p_list is empty");
  if (config.conditions.empty())
    throw ParameterError("config: conditions list is empty");
  if (config.trials < 1)
    throw ParameterError("config: trials must be >= 1");
  for (int k : config.k_list)
    if (k < 1) throw ParameterError("config: k_list entries must be >= 1");
  for (int p : config.p_list)
    if (p < 1) throw ParameterError("config: p_list entries must be >= 1");
  if (config.placement == Placement::explicit_points)
    throw ParameterError("config: explicit placement is not sweepable; use "
                         "random_points, surface_line or vertical_dam_line");
  validate_noise(config.noise);
  if (config.epsilon.mode == EpsilonPolicy::Mode::automatic &&
      config.epsilon.scale < 0.0)
    throw ParameterError("config: epsilon.scale must be >= 0");
  if (config.epsilon.mode == EpsilonPolicy::Mode::fixed && config.epsilon.value < 0.0)
    throw ParameterError("config: epsilon.value must be >= 0");
  if (config.synthetic) {
    if (config.synth.train_snapshots < 1)
      throw ParameterError("config: train_snapshots must be >= 1");
  } else {
    // train/test hygiene: disjoint row sets, checked before any data is read
    for (int test_index : config.files.test_indices)
      for (int train_index : config.files.train_indices)
        if (test_index == train_index)
          throw ParameterError("config: snapshot row " + std::to_string(test_index) +
                               " appears in both train_indices and test_indices");
    if (config.files.test_indices.size() != config.conditions.size())
      throw ParameterError("config: test_indices must pair 1:1 with conditions");
  }
}

std::string canonical_config(const ExperimentConfig& config) {
  return config_to_json(config).dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string dump = canonical_config(config);
  std::uint64_t hash = 0xcbf29ce484222325ULL; // FNV-1a 64
  for (unsigned char c : dump) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

namespace {

struct PreparedData {
  GridPtr grid;
  SnapshotLibrary centered;
  double energy = 0.0;
  std::uint64_t library_seed = 0;
  // file mode: test columns aligned with conditions
  std::vector<Snapshot> file_tests;
};

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData data;
  if (config.synthetic) {
    GridPtr grid;
    if (config.synth.grid_spec_path)
      grid = std::make_shared<FieldGrid>(load_grid_spec(*config.synth.grid_spec_path));
    else
      grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
    data.library_seed = mix_seed({config.base_seed, kStreamLibrary});
    SnapshotLibrary raw =
        generate_library(grid, config.synth.base, config.synth.train_snapshots,
                         config.synth.variation, data.library_seed);
    data.grid = grid;
    data.centered = center_library(raw);
  } else {
    auto grid = std::make_shared<FieldGrid>(load_grid_spec(config.files.grid_spec));
    SnapshotLibrary all = load_snapshots(config.files.snapshots_csv, grid);
    auto take_column = [&all](int index) {
      if (index < 0 || index >= all.r())
        throw ParameterError("config: snapshot row index " + std::to_string(index) +
                             " outside [0, " + std::to_string(all.r()) + ")");
      Snapshot s;
      s.values = all.columns.col(index);
      s.label = all.labels[static_cast<std::size_t>(index)];
      return s;
    };
    Eigen::MatrixXd train(all.n(),
                          static_cast<Eigen::Index>(config.files.train_indices.size()));
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < config.files.train_indices.size(); ++j) {
      const Snapshot s = take_column(config.files.train_indices[j]);
      train.col(static_cast<Eigen::Index>(j)) = s.values;
      labels.push_back(s.label);
    }
    SnapshotLibrary raw = make_library(grid, std::move(train), std::move(labels));
    data.grid = grid;
    data.centered = center_library(raw);
    for (int index : config.files.test_indices)
      data.file_tests.push_back(take_column(index));
  }
  data.energy = mean_fluctuation_energy(data.centered);
  return data;
}

Snapshot make_test_field(const ExperimentConfig& config, const PreparedData& data,
                         int condition_index, int trial) {
  if (!config.synthetic)
    return data.file_tests[static_cast<std::size_t>(condition_index)];
  StratificationParams params = library_member_params(
      config.synth.base, config.synth.variation,
      mix_seed({config.base_seed, kStreamTest,
                static_cast<std::uint64_t>(condition_index)}),
      trial, *data.grid);
  params.intake_depth_m = config.conditions[static_cast<std::size_t>(condition_index)];
  Snapshot field = generate_snapshot(*data.grid, params);
  field.label = "test_c" + format_double(params.intake_depth_m) + "_t" +
                std::to_string(trial);
  // train/test hygiene: a jittered test field must never duplicate a column
  for (int j = 0; j < data.centered.r(); ++j) {
    const Eigen::VectorXd train_col = data.centered.columns.col(j) + *data.centered.mean;
    if ((field.values - train_col).cwiseAbs().maxCoeff() == 0.0)
      throw DataError("test field for condition " +
                      format_double(params.intake_depth_m) +
                      " duplicates training snapshot " + std::to_string(j) +
                      "; widen the variation or change seeds");
  }
  return field;
}

double resolve_epsilon(const ExperimentConfig& config, int p) {
  if (config.epsilon.mode == EpsilonPolicy::Mode::fixed) return config.epsilon.value;
  return config.epsilon.scale * choose_epsilon(config.noise.gaussian_sigma, p);
}

struct CellKey {
  Method method;
  int k;
  int p;
  double condition;
  Placement placement;

  bool operator<(const CellKey& other) const {
    if (method != other.method) return method < other.method;
    if (k != other.k) return k < other.k;
    if (p != other.p) return p < other.p;
    if (condition != other.condition) return condition < other.condition;
    return placement < other.placement;
  }
};

struct MapAccumulator {
  Eigen::VectorXd sum;
  Eigen::VectorXd example; // trial 0 reconstruction
  int count = 0;
};

struct RunState {
  std::vector<ErrorRecord> records;
  std::map<CellKey, MapAccumulator> maps;
  std::vector<Snapshot> condition_truths;
};

/// Shared per-(placement, p, condition, trial) execution across methods/k.
class CellRunner {
public:
  CellRunner(const ExperimentConfig& config, const PreparedData& data)
      : config_(config), data_(data) {
    for (int k : config.k_list) {
      if (bases_.count(k)) continue;
      try {
        PodBasis basis = compute_pod(data.centered, k);
        if (basis.k() < k) {
          basis_skip_[k] = "k = " + std::to_string(k) +
                           " exceeds library numerical rank " +
                           std::to_string(basis.k());
        } else {
          bases_.emplace(k, std::move(basis));
        }
      } catch (const Error& e) {
        basis_skip_[k] = e.what();
      }
    }
    const bool needs_raw =
        std::any_of(config.methods.begin(), config.methods.end(), [](Method m) {
          return m == Method::sparse_raw || m == Method::robust_sparse;
        });
    if (needs_raw) raw_dict_ = make_raw_dictionary(data.centered);
  }

  void run_cell(Placement placement, int p_index, int condition_index, int trial,
                RunState& state, bool collect_maps) {
    const int p = config_.p_list[static_cast<std::size_t>(p_index)];
    const double condition =
        config_.conditions[static_cast<std::size_t>(condition_index)];
    const std::uint64_t op_seed =
        mix_seed({config_.base_seed, kStreamOperator,
                  static_cast<std::uint64_t>(trial),
                  static_cast<std::uint64_t>(condition_index),
                  static_cast<std::uint64_t>(p_index)});
    const std::uint64_t noise_seed =
        mix_seed({config_.base_seed, kStreamNoise,
                  static_cast<std::uint64_t>(trial),
                  static_cast<std::uint64_t>(condition_index),
                  static_cast<std::uint64_t>(p_index),
                  static_cast<std::uint64_t>(placement)});

    ErrorRecord proto;
    proto.p = p;
    proto.condition = condition;
    proto.trial = trial;
    proto.seed = noise_seed;
    proto.placement = placement;

    // one shared operator + measurement per cell
    MeasurementOperator op;
    try {
      op = build_operator(placement, p, op_seed);
    } catch (const Error& e) {
      skip_all_methods(proto, e.what(), state);
      return;
    }

    const Snapshot truth = make_test_field(config_, data_, condition_index, trial);
    if (trial == 0 && placement == first_placement_) {
      if (static_cast<int>(state.condition_truths.size()) == condition_index &&
          p_index == 0)
        state.condition_truths.push_back(truth);
    }
    NoiseModel noise = config_.noise;
    noise.seed = noise_seed;
    const Eigen::VectorXd y = apply(op, truth, noise);
    const double epsilon = resolve_epsilon(config_, p);

    // k-independent sparse solves are computed once and reused across k
    struct CachedSolve {
      ErrorRecord rec;
      Eigen::VectorXd xhat;
    };
    std::map<Method, CachedSolve> raw_method_cache;

    for (Method method : config_.methods) {
      for (int k : config_.k_list) {
        ErrorRecord rec = proto;
        rec.method = method;
        rec.k = k;
        Eigen::VectorXd xhat;
        if (method_uses_pod_basis(method)) {
          const auto skip = basis_skip_.find(k);
          if (skip != basis_skip_.end()) {
            rec.ok = false;
            rec.skip_reason = skip->second;
            state.records.push_back(rec);
            continue;
          }
          xhat = run_method(method, bases_.at(k), op, y, epsilon, truth, rec);
        } else {
          const auto cached = raw_method_cache.find(method);
          if (cached != raw_method_cache.end()) {
            rec = cached->second.rec;
            rec.k = k;
            xhat = cached->second.xhat;
          } else {
            xhat = run_method(method, PodBasis{}, op, y, epsilon, truth, rec);
            raw_method_cache.emplace(method, CachedSolve{rec, xhat});
          }
        }
        state.records.push_back(rec);
        if (collect_maps && rec.ok)
          accumulate_map(CellKey{method, rec.k, p, condition, placement}, truth,
                         xhat, state);
      }
    }
  }

  void set_first_placement(Placement placement) { first_placement_ = placement; }

private:
  MeasurementOperator build_operator(Placement placement, int p,
                                     std::uint64_t seed) const {
    switch (placement) {
      case Placement::random_points: return random_points(data_.grid, p, seed);
      case Placement::surface_line: return surface_line(data_.grid, p);
      case Placement::vertical_dam_line: return vertical_dam_line(data_.grid, p);
      case Placement::explicit_points: break;
    }
    throw ParameterError("experiment: unsupported placement");
  }

  void skip_all_methods(const ErrorRecord& proto, const std::string& reason,
                        RunState& state) const {
    for (Method method : config_.methods) {
      for (int k : config_.k_list) {
        ErrorRecord rec = proto;
        rec.method = method;
        rec.k = k;
        rec.ok = false;
        rec.skip_reason = reason;
        state.records.push_back(rec);
      }
    }
  }

  Eigen::VectorXd run_method(Method method, const PodBasis& basis,
                             const MeasurementOperator& op,
                             const Eigen::VectorXd& y, double epsilon,
                             const Snapshot& truth, ErrorRecord& rec) {
    try {
      Snapshot xhat;
      if (method == Method::gappy_pod) {
        const ReconstructionResult result = gappy_reconstruct(basis, op, y);
        xhat = result.xhat;
        rec.residual_norm = result.residual_norm;
        rec.ridge_mu = result.ridge_mu;
        rec.converged = true;
      } else {
        const Dictionary& dict =
            method == Method::sparse_pod ? pod_dict(basis) : *raw_dict_;
        const Eigen::MatrixXd measured = select_rows(op, dict.atoms);
        const Eigen::VectorXd y_fluct = y - select_rows(op, dict.mean);
        SparseSolution sol;
        if (method == Method::robust_sparse)
          sol = robust_solve(measured, y_fluct, epsilon, config_.solver);
        else
          sol = bpdn_solve(measured, y_fluct, epsilon, config_.solver);
        xhat = assemble(dict, sol, config_.rescale, data_.energy);
        rec.residual_norm = sol.residual_norm;
        rec.lambda = sol.lambda;
        rec.epsilon_used = sol.epsilon;
        rec.iterations = sol.iterations;
        rec.converged = sol.converged;
      }
      const Eigen::VectorXd& mean = *data_.centered.mean;
      rec.error1 = error1(truth.values, xhat.values);
      rec.error2 = error2(truth.values - mean, xhat.values - mean, mean);
      rec.ok = true;
      return xhat.values;
    } catch (const Error& e) {
      rec.ok = false;
      rec.skip_reason = e.what();
      return Eigen::VectorXd();
    }
  }

  const Dictionary& pod_dict(const PodBasis& basis) {
    const int k = basis.k();
    auto it = pod_dicts_.find(k);
    if (it == pod_dicts_.end())
      it = pod_dicts_.emplace(k, make_pod_dictionary(basis)).first;
    return it->second;
  }

  static void accumulate_map(const CellKey& key, const Snapshot& truth,
                             const Eigen::VectorXd& xhat, RunState& state) {
    MapAccumulator& acc = state.maps[key];
    const Eigen::VectorXd map = error_map(truth.values, xhat);
    if (acc.count == 0) {
      acc.sum = map;
      acc.example = xhat;
    } else {
      acc.sum += map;
    }
    ++acc.count;
  }

  const ExperimentConfig& config_;
  const PreparedData& data_;
  std::map<int, PodBasis> bases_;
  std::map<int, std::string> basis_skip_;
  std::optional<Dictionary> raw_dict_;
  std::map<int, Dictionary> pod_dicts_;
  Placement first_placement_ = Placement::random_points;
};

void sort_records(std::vector<ErrorRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const ErrorRecord& a, const ErrorRecord& b) {
                     if (a.method != b.method) return a.method < b.method;
                     if (a.k != b.k) return a.k < b.k;
                     if (a.p != b.p) return a.p < b.p;
                     if (a.condition != b.condition) return a.condition < b.condition;
                     if (a.placement != b.placement) return a.placement < b.placement;
                     return a.trial < b.trial;
                   });
}

std::vector<AggregateRecord> aggregate(const std::vector<ErrorRecord>& records) {
  std::map<CellKey, AggregateRecord> groups;
  std::map<CellKey, std::pair<double, double>> sums;
  for (const ErrorRecord& rec : records) {
    if (!rec.ok) continue;
    const CellKey key{rec.method, rec.k, rec.p, rec.condition, rec.placement};
    AggregateRecord& agg = groups[key];
    agg.method = rec.method;
    agg.k = rec.k;
    agg.p = rec.p;
    agg.condition = rec.condition;
    agg.placement = rec.placement;
    agg.count += 1;
    sums[key].first += rec.error1;
    sums[key].second += rec.error2;
  }
  std::vector<AggregateRecord> out;
  out.reserve(groups.size());
  for (auto& [key, agg] : groups) {
    agg.mean_error1 = sums[key].first / agg.count;
    agg.mean_error2 = sums[key].second / agg.count;
    out.push_back(agg);
  }
  return out;
}

ExperimentReport finish_report(const ExperimentConfig& config,
                               const PreparedData& data, RunState& state,
                               bool fixed_mode) {
  ExperimentReport report;
  report.config = config;
  report.grid = data.grid;
  report.fixed_mode = fixed_mode;
  report.library_r = data.centered.r();
  report.library_energy = data.energy;
  report.library_seed = data.library_seed;
  sort_records(state.records);
  report.records = std::move(state.records);
  report.aggregates = aggregate(report.records);
  report.condition_truths = std::move(state.condition_truths);

  if (fixed_mode) {
    const std::vector<double> edges = default_band_edges(*data.grid);
    for (auto& [key, acc] : state.maps) {
      MapRecord map_record;
      map_record.method = key.method;
      map_record.k = key.k;
      map_record.p = key.p;
      map_record.condition = key.condition;
      map_record.placement = key.placement;
      map_record.mean_abs_error = acc.sum / acc.count;
      map_record.bands = depth_band_stats(map_record.mean_abs_error, *data.grid, edges);
      map_record.example_reconstruction = acc.example;
      report.maps.push_back(std::move(map_record));
    }

    // cross-placement spread per (method, k, p, condition)
    std::map<std::tuple<Method, int, int, double>, std::pair<double, double>> pair_errors;
    std::map<std::tuple<Method, int, int, double>, int> seen;
    for (const AggregateRecord& agg : report.aggregates) {
      const auto key = std::make_tuple(agg.method, agg.k, agg.p, agg.condition);
      if (agg.placement == Placement::surface_line) {
        pair_errors[key].first = agg.mean_error1;
        seen[key] |= 1;
      } else if (agg.placement == Placement::vertical_dam_line) {
        pair_errors[key].second = agg.mean_error1;
        seen[key] |= 2;
      }
    }
    for (const auto& [key, mask] : seen) {
      if (mask != 3) continue;
      SpreadRecord spread;
      spread.method = std::get<0>(key);
      spread.k = std::get<1>(key);
      spread.p = std::get<2>(key);
      spread.condition = std::get<3>(key);
      spread.err_surface = pair_errors[key].first;
      spread.err_vertical = pair_errors[key].second;
      const double lo = std::min(spread.err_surface, spread.err_vertical);
      spread.spread_pct =
          100.0 * std::abs(spread.err_surface - spread.err_vertical) /
          std::max(lo, 1e-300);
      report.spreads.push_back(spread);
    }
  }
  return report;
}

} // namespace

ExperimentReport run_sweep(const ExperimentConfig& config) {
  validate_config(config);
  const PreparedData data = prepare_data(config);
  CellRunner runner(config, data);
  runner.set_first_placement(config.placement);
  RunState state;
  for (std::size_t ci = 0; ci < config.conditions.size(); ++ci)
    for (int trial = 0; trial < config.trials; ++trial)
      for (std::size_t pi = 0; pi < config.p_list.size(); ++pi)
        runner.run_cell(config.placement, static_cast<int>(pi),
                        static_cast<int>(ci), trial, state, false);
  return finish_report(config, data, state, false);
}

ExperimentReport run_fixed_sensors(const ExperimentConfig& config) {
  validate_config(config);
  if (config.placement != Placement::surface_line &&
      config.placement != Placement::vertical_dam_line)
    throw ParameterError(
        "run_fixed_sensors: placement must be surface_line or vertical_dam_line");
  bool has_pod = false;
  bool has_sparse = false;
  for (Method method : config.methods) {
    if (method == Method::gappy_pod) has_pod = true;
    if (method != Method::gappy_pod) has_sparse = true;
  }
  if (!has_pod || !has_sparse)
    throw ParameterError("run_fixed_sensors: methods must include gappy_pod and "
                         "at least one sparse variant");

  const PreparedData data = prepare_data(config);
  CellRunner runner(config, data);
  const Placement placements[2] = {Placement::surface_line,
                                   Placement::vertical_dam_line};
  runner.set_first_placement(placements[0]);
  RunState state;
  for (Placement placement : placements)
    for (std::size_t ci = 0; ci < config.conditions.size(); ++ci)
      for (int trial = 0; trial < config.trials; ++trial)
        for (std::size_t pi = 0; pi < config.p_list.size(); ++pi)
          runner.run_cell(placement, static_cast<int>(pi), static_cast<int>(ci),
                          trial, state, true);
  return finish_report(config, data, state, true);
}

namespace {

std::string csv_escape_reason(const std::string& reason) {
  std::string out = reason;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

void write_records_csv(const std::vector<ErrorRecord>& records,
                       std::optional<Placement> placement_filter,
                       const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "method,k,p,condition,trial,seed,error1,error2\n";
  for (const ErrorRecord& rec : records) {
    if (!rec.ok) continue;
    if (placement_filter && rec.placement != *placement_filter) continue;
    out << method_name(rec.method) << ',' << rec.k << ',' << rec.p << ','
        << format_double(rec.condition) << ',' << rec.trial << ',' << rec.seed
        << ',' << format_double(rec.error1) << ',' << format_double(rec.error2)
        << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_skipped_csv(const std::vector<ErrorRecord>& records, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "method,k,p,condition,trial,placement,reason\n";
  for (const ErrorRecord& rec : records) {
    if (rec.ok) continue;
    out << method_name(rec.method) << ',' << rec.k << ',' << rec.p << ','
        << format_double(rec.condition) << ',' << rec.trial << ','
        << placement_name(rec.placement) << ',' << csv_escape_reason(rec.skip_reason)
        << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_aggregates_csv(const std::vector<AggregateRecord>& aggregates,
                          const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "method,k,p,condition,placement,mean_error1,mean_error2,trials\n";
  for (const AggregateRecord& agg : aggregates) {
    out << method_name(agg.method) << ',' << agg.k << ',' << agg.p << ','
        << format_double(agg.condition) << ',' << placement_name(agg.placement)
        << ',' << format_double(agg.mean_error1) << ','
        << format_double(agg.mean_error2) << ',' << agg.count << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_spread_csv(const std::vector<SpreadRecord>& spreads, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "method,k,p,condition,err_surface,err_vertical,spread_pct\n";
  for (const SpreadRecord& spread : spreads) {
    out << method_name(spread.method) << ',' << spread.k << ',' << spread.p << ','
        << format_double(spread.condition) << ','
        << format_double(spread.err_surface) << ','
        << format_double(spread.err_vertical) << ','
        << format_double(spread.spread_pct) << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_dense_csv(const Eigen::MatrixXd& dense, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (Eigen::Index row = 0; row < dense.rows(); ++row) {
    for (Eigen::Index col = 0; col < dense.cols(); ++col) {
      if (col > 0) out << ',';
      const double v = dense(row, col);
      if (std::isnan(v))
        out << "NaN"; // dry-cell sentinel
      else
        out << format_double(v);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_bands_csv(const std::vector<DepthBandStats>& bands, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "band_lo_m,band_hi_m,min,q1,median,q3,max,mean,count\n";
  for (const DepthBandStats& band : bands) {
    out << format_double(band.lo_m) << ',' << format_double(band.hi_m) << ','
        << format_double(band.min) << ',' << format_double(band.q1) << ','
        << format_double(band.median) << ',' << format_double(band.q3) << ','
        << format_double(band.max) << ',' << format_double(band.mean) << ','
        << band.count << "\n";
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string map_stem(const MapRecord& map_record) {
  return method_name(map_record.method) + "_k" + std::to_string(map_record.k) +
         "_p" + std::to_string(map_record.p) + "_c" +
         format_double(map_record.condition) + "_" +
         placement_name(map_record.placement);
}

json bands_to_json(const std::vector<DepthBandStats>& bands) {
  json arr = json::array();
  for (const DepthBandStats& band : bands)
    arr.push_back(json{{"lo_m", band.lo_m},
                       {"hi_m", band.hi_m},
                       {"min", band.min},
                       {"q1", band.q1},
                       {"median", band.median},
                       {"q3", band.q3},
                       {"max", band.max},
                       {"mean", band.mean},
                       {"count", band.count}});
  return arr;
}

json report_to_json(const ExperimentReport& report) {
  json records = json::array();
  for (const ErrorRecord& rec : report.records) {
    json entry{{"method", method_name(rec.method)},
               {"k", rec.k},
               {"p", rec.p},
               {"condition", rec.condition},
               {"trial", rec.trial},
               {"seed", rec.seed},
               {"placement", placement_name(rec.placement)},
               {"ok", rec.ok}};
    if (rec.ok) {
      entry["error1"] = rec.error1;
      entry["error2"] = rec.error2;
      entry["residual_norm"] = rec.residual_norm;
      entry["ridge_mu"] = rec.ridge_mu;
      entry["lambda"] = rec.lambda;
      entry["epsilon_used"] = rec.epsilon_used;
      entry["iterations"] = rec.iterations;
      entry["converged"] = rec.converged;
    } else {
      entry["reason"] = rec.skip_reason;
    }
    records.push_back(std::move(entry));
  }

  json aggregates = json::array();
  for (const AggregateRecord& agg : report.aggregates)
    aggregates.push_back(json{{"method", method_name(agg.method)},
                              {"k", agg.k},
                              {"p", agg.p},
                              {"condition", agg.condition},
                              {"placement", placement_name(agg.placement)},
                              {"mean_error1", agg.mean_error1},
                              {"mean_error2", agg.mean_error2},
                              {"count", agg.count}});

  json spreads = json::array();
  for (const SpreadRecord& spread : report.spreads)
    spreads.push_back(json{{"method", method_name(spread.method)},
                           {"k", spread.k},
                           {"p", spread.p},
                           {"condition", spread.condition},
                           {"err_surface", spread.err_surface},
                           {"err_vertical", spread.err_vertical},
                           {"spread_pct", spread.spread_pct}});

  json band_entries = json::array();
  for (const MapRecord& map_record : report.maps)
    band_entries.push_back(json{{"method", method_name(map_record.method)},
                                {"k", map_record.k},
                                {"p", map_record.p},
                                {"condition", map_record.condition},
                                {"placement", placement_name(map_record.placement)},
                                {"bands", bands_to_json(map_record.bands)}});

  return json{{"config", config_to_json(report.config)},
              {"config_hash", config_hash(report.config)},
              // error2 evaluates mean-subtracted fields against the
              // full-field norm; with xhat = mean + fluctuation it
              // coincides with error1
              {"metrics_convention",
               "error2: fluctuation operands, full-field denominator"},
              {"grid", json{{"nx", report.grid->nx()},
                            {"nz", report.grid->nz()},
                            {"dx_m", report.grid->dx_m()},
                            {"dz_m", report.grid->dz_m()},
                            {"n", report.grid->n()}}},
              {"library", json{{"r", report.library_r},
                               {"energy", report.library_energy},
                               {"seed", report.library_seed}}},
              {"records", records},
              {"aggregates", aggregates},
              {"spreads", spreads},
              {"depth_bands", band_entries}};
}

} // namespace

void export_report(const ExperimentReport& report, const std::string& dir,
                   ExportFormat format) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "'");
  const fs::path base(dir);
  const bool fixed_mode = report.fixed_mode;

  const bool want_csv = format != ExportFormat::json;
  const bool want_json = format != ExportFormat::csv;

  if (want_csv) {
    if (fixed_mode) {
      write_records_csv(report.records, Placement::surface_line,
                        base / "records_surface.csv");
      write_records_csv(report.records, Placement::vertical_dam_line,
                        base / "records_vertical.csv");
      write_spread_csv(report.spreads, base / "spread.csv");
      fs::create_directories(base / "maps", ec);
      fs::create_directories(base / "bands", ec);
      fs::create_directories(base / "fields", ec);
      if (ec) throw IoError("cannot create output subdirectories in '" + dir + "'");
      for (const MapRecord& map_record : report.maps) {
        Snapshot map_snapshot{map_record.mean_abs_error, "error"};
        write_dense_csv(snapshot_to_grid(map_snapshot, *report.grid),
                        base / "maps" / ("error_map_" + map_stem(map_record) + ".csv"));
        Snapshot recon{map_record.example_reconstruction, "recon"};
        write_dense_csv(snapshot_to_grid(recon, *report.grid),
                        base / "fields" / ("field_" + map_stem(map_record) + ".csv"));
        write_bands_csv(map_record.bands,
                        base / "bands" / ("bands_" + map_stem(map_record) + ".csv"));
      }
      for (const Snapshot& truth : report.condition_truths)
        write_dense_csv(snapshot_to_grid(truth, *report.grid),
                        base / "fields" / ("field_truth_" + truth.label + ".csv"));
    } else {
      write_records_csv(report.records, std::nullopt, base / "records.csv");
    }
    write_skipped_csv(report.records, base / "skipped.csv");
    write_aggregates_csv(report.aggregates, base / "aggregates.csv");
  }

  if (want_json) {
    std::ofstream out(base / "report.json");
    if (!out) throw IoError("cannot open report.json for writing in '" + dir + "'");
    out << report_to_json(report).dump(2) << "\n";
    if (!out) throw IoError("failed writing report.json in '" + dir + "'");
  }

  json manifest{{"format_version", 1},
                {"config_hash", config_hash(report.config)},
                {"base_seed", report.config.base_seed},
                {"metrics_convention",
                 "error2: fluctuation operands, full-field denominator"},
                {"config", config_to_json(report.config)},
                {"grid", json{{"nx", report.grid->nx()},
                              {"nz", report.grid->nz()},
                              {"dx_m", report.grid->dx_m()},
                              {"dz_m", report.grid->dz_m()},
                              {"n", report.grid->n()}}},
                {"library", json{{"r", report.library_r},
                                 {"energy", report.library_energy},
                                 {"seed", report.library_seed}}}};
  std::ofstream mout(base / "manifest.json");
  if (!mout) throw IoError("cannot open manifest.json for writing in '" + dir + "'");
  mout << manifest.dump(2) << "\n";
  if (!mout) throw IoError("failed writing manifest.json in '" + dir + "'");
}

LoadedReport load_report(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open '" + json_path + "' for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw FormatError("'" + json_path + "': " + e.what());
  }

  LoadedReport loaded;
  for (const json& entry : doc.at("records")) {
    ErrorRecord rec;
    rec.method = method_from_name(entry.at("method").get<std::string>());
    rec.k = entry.at("k").get<int>();
    rec.p = entry.at("p").get<int>();
    rec.condition = entry.at("condition").get<double>();
    rec.trial = entry.at("trial").get<int>();
    rec.seed = entry.at("seed").get<std::uint64_t>();
    rec.placement = placement_from_name(entry.at("placement").get<std::string>());
    rec.ok = entry.at("ok").get<bool>();
    if (rec.ok) {
      rec.error1 = entry.at("error1").get<double>();
      rec.error2 = entry.at("error2").get<double>();
      rec.residual_norm = entry.at("residual_norm").get<double>();
      rec.ridge_mu = entry.at("ridge_mu").get<double>();
      rec.lambda = entry.at("lambda").get<double>();
      rec.epsilon_used = entry.at("epsilon_used").get<double>();
      rec.iterations = entry.at("iterations").get<long>();
      rec.converged = entry.at("converged").get<bool>();
    } else {
      rec.skip_reason = entry.at("reason").get<std::string>();
    }
    loaded.records.push_back(std::move(rec));
  }
  for (const json& entry : doc.at("aggregates")) {
    AggregateRecord agg;
    agg.method = method_from_name(entry.at("method").get<std::string>());
    agg.k = entry.at("k").get<int>();
    agg.p = entry.at("p").get<int>();
    agg.condition = entry.at("condition").get<double>();
    agg.placement = placement_from_name(entry.at("placement").get<std::string>());
    agg.mean_error1 = entry.at("mean_error1").get<double>();
    agg.mean_error2 = entry.at("mean_error2").get<double>();
    agg.count = entry.at("count").get<int>();
    loaded.aggregates.push_back(agg);
  }
  for (const json& entry : doc.at("spreads")) {
    SpreadRecord spread;
    spread.method = method_from_name(entry.at("method").get<std::string>());
    spread.k = entry.at("k").get<int>();
    spread.p = entry.at("p").get<int>();
    spread.condition = entry.at("condition").get<double>();
    spread.err_surface = entry.at("err_surface").get<double>();
    spread.err_vertical = entry.at("err_vertical").get<double>();
    spread.spread_pct = entry.at("spread_pct").get<double>();
    loaded.spreads.push_back(spread);
  }
  return loaded;
}

void generate_dataset(const ExperimentConfig& config, const std::string& dir) {
  if (!config.synthetic)
    throw ParameterError("generate_dataset: config data source must be synthetic");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "'");

  GridPtr grid;
  if (config.synth.grid_spec_path)
    grid = std::make_shared<FieldGrid>(load_grid_spec(*config.synth.grid_spec_path));
  else
    grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  const std::uint64_t library_seed = mix_seed({config.base_seed, kStreamLibrary});
  const SnapshotLibrary lib =
      generate_library(grid, config.synth.base, config.synth.train_snapshots,
                       config.synth.variation, library_seed);
  const fs::path base(dir);
  save_grid_spec(*grid, (base / "grid.json").string());
  save_snapshots(lib, (base / "snapshots.csv").string());
}

std::string validate_run_inputs(const ExperimentConfig& config) {
  validate_config(config);
  const PreparedData data = prepare_data(config);
  std::ostringstream summary;
  summary << "config OK: " << (config.synthetic ? "synthetic" : "file") << " source, "
          << "grid " << data.grid->nx() << "x" << data.grid->nz() << " with n = "
          << data.grid->n() << " wet cells, library r = " << data.centered.r()
          << ", methods = " << config.methods.size() << ", conditions = "
          << config.conditions.size() << ", trials = " << config.trials;
  return summary.str();
}

} // namespace thermofield
