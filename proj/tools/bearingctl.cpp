// Command-line frontend: analyze rigidity, construct targets, run the two
// formation control laws, and re-check recorded traces.
//
// Exit codes: 0 success, 1 validation failure, 2 numeric failure,
// 3 collision-terminated simulation (outputs still written).

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bearings/bearings.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitCollision = 3;

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

// One inner array per agent.
json columns_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(to_json(m.col(c)));
  return arr;
}

void emit_warnings(const bearings::FormationSpec& spec) {
  for (const auto& w : spec.warnings) std::cerr << json{{"warning", w}}.dump() << "\n";
}

int run_analyze(const std::string& spec_path, double rank_tol) {
  const bearings::FormationSpec spec = bearings::parse_spec(spec_path);
  emit_warnings(spec);
  const bearings::Framework f = bearings::spec_framework(spec);

  const bearings::RigidityReport br = bearings::rigidity_report(f, rank_tol);
  const bearings::DistanceRigidityReport dr = bearings::distance_rigidity_report(f, rank_tol);

  json out;
  out["dimension"] = spec.dimension;
  out["agents"] = spec.agent_count();
  out["edges"] = spec.edge_count();
  out["bearing"] = {{"rank", br.rank_R},
                    {"nullity", br.nullity_R},
                    {"rank_complete", br.rank_R_complete},
                    {"required_rank", spec.dimension * spec.agent_count() - spec.dimension - 1},
                    {"infinitesimally_bearing_rigid", br.infinitesimally_bearing_rigid},
                    {"globally_bearing_rigid", br.globally_bearing_rigid},
                    {"bearing_rigid", br.bearing_rigid},
                    {"rank_tolerance", br.rank_tolerance}};
  out["distance"] = {{"rank", dr.rank_RD},
                     {"required_rank", dr.required_rank},
                     {"infinitesimally_distance_rigid", dr.infinitesimally_distance_rigid}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int run_target(const std::string& spec_path, double rank_tol) {
  const bearings::FormationSpec spec = bearings::parse_spec(spec_path);
  emit_warnings(spec);
  const bearings::BearingConstraints c = bearings::spec_constraints(spec);

  const bearings::FeasibilityResult feas = bearings::feasibility_witness(c, rank_tol);

  json out;
  out["feasible_constraints"] = feas.feasible;
  if (feas.witness) out["witness"] = columns_to_json(*feas.witness);

  // Positions fix the centroid and scale; without them the canonical
  // representative (centroid 0, unit scale) is constructed.
  bearings::TargetSolution sol =
      bearings::spec_has_positions(spec)
          ? bearings::compute_target(c, bearings::spec_positions(spec), rank_tol)
          : bearings::compute_target_at(c, Eigen::VectorXd::Zero(spec.dimension), 1.0, rank_tol);

  out["target"] = {{"p_star", columns_to_json(sol.p_star)},
                   {"alpha", sol.alpha},
                   {"centroid", to_json(sol.x_shift)},
                   {"q", to_json(sol.q_basis)},
                   {"feasible", sol.feasible}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string spec_path;
  std::string mode = "global";
  double dt = 1e-3;
  double t_end = 20.0;
  std::uint64_t seed = 0;
  std::optional<double> gamma;
  std::optional<std::string> out;
  int record_every = 1;
  int batch = 1;
  double init_box = 0.0;
  double init_angle = 0.0;
};

std::string batch_out_path(const std::string& base, int run_index) {
  const std::string suffix = ".csv";
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
    return base.substr(0, base.size() - suffix.size()) + "-" + std::to_string(run_index) + suffix;
  return base + "-" + std::to_string(run_index);
}

int run_simulate(const SimulateArgs& args) {
  const bearings::FormationSpec spec = bearings::parse_spec(args.spec_path);
  emit_warnings(spec);
  const bearings::BearingConstraints c = bearings::spec_constraints(spec);
  const Eigen::MatrixXd nominal = bearings::spec_positions(spec);

  bearings::SimConfig cfg;
  cfg.dt = args.dt;
  cfg.t_end = args.t_end;
  cfg.mode = args.mode == "local" ? bearings::SimMode::local : bearings::SimMode::global;
  cfg.gamma = args.gamma;
  cfg.record_every = args.record_every;
  if (args.batch < 1) throw bearings::ValidationError("--batch must be >= 1");
  if (args.init_box < 0.0) throw bearings::ValidationError("--init-box must be >= 0");
  if (args.init_angle < 0.0) throw bearings::ValidationError("--init-angle must be >= 0");
  if (cfg.mode == bearings::SimMode::local && spec.dimension != 3)
    throw bearings::ValidationError("local mode requires dimension 3");

  json runs = json::array();
  bool any_collision = false;
  for (int run = 0; run < args.batch; ++run) {
    cfg.seed = args.seed + static_cast<std::uint64_t>(run);
    bearings::Rng rng(cfg.seed);

    Eigen::MatrixXd p0 = nominal;
    if (args.init_box > 0.0) p0 = bearings::random_positions(nominal, args.init_box, rng);

    bearings::SimulationTrace trace;
    if (cfg.mode == bearings::SimMode::global) {
      trace = bearings::simulate_global(p0, c, cfg);
    } else {
      bearings::LocalFormationState s0;
      s0.positions = p0;
      s0.rotations = args.init_angle > 0.0
                         ? bearings::random_rotations(spec.agent_count(), args.init_angle, rng)
                         : bearings::spec_rotations(spec);
      trace = bearings::simulate_local(s0, c, cfg);
    }

    const bearings::MetricsSummary metrics = bearings::compute_metrics(trace);
    any_collision = any_collision || metrics.collided;

    json entry = bearings::metrics_to_json(metrics, trace);
    entry["seed"] = cfg.seed;
    if (args.out) {
      const std::string csv = args.batch > 1 ? batch_out_path(*args.out, run + 1) : *args.out;
      bearings::write_trace_csv(trace, csv);
      bearings::write_metrics_json(metrics, trace, bearings::metrics_path_for(csv));
      entry["trace"] = csv;
      entry["metrics"] = bearings::metrics_path_for(csv);
    }
    runs.push_back(std::move(entry));
  }

  if (args.batch == 1)
    std::cout << runs[0].dump(2) << "\n";
  else
    std::cout << json{{"runs", runs}}.dump(2) << "\n";
  return any_collision ? kExitCollision : kExitOk;
}

struct VerifyArgs {
  std::string spec_path;
  std::string trace_path;
  double tol_drift = 1e-6;
  double tol_lyapunov = 1e-9;
  double tol_sphere = 1e-6;
  double tol_rotation = 1e-9;
  double rank_tol = bearings::kRankTolerance;
  std::optional<double> gamma;
};

int run_verify(const VerifyArgs& args) {
  const bearings::FormationSpec spec = bearings::parse_spec(args.spec_path);
  emit_warnings(spec);
  const bearings::BearingConstraints c = bearings::spec_constraints(spec);
  const bearings::TraceData data = bearings::read_trace_csv(args.trace_path);

  const int n = spec.agent_count();
  const int d = spec.dimension;
  if (data.n != n || data.d != d)
    throw bearings::ValidationError("trace is for " + std::to_string(data.n) + " agents in R^" +
                                    std::to_string(data.d) + ", spec declares " +
                                    std::to_string(n) + " in R^" + std::to_string(d));

  json checks;
  bool ok = true;
  auto check = [&](const std::string& name, bool passed, const json& detail) {
    checks[name] = {{"passed", passed}, {"detail", detail}};
    ok = ok && passed;
  };

  bool increasing = true;
  for (int s = 1; s < data.sample_count(); ++s)
    increasing = increasing && data.times[s] > data.times[s - 1];
  check("times_strictly_increasing", increasing, {{"samples", data.sample_count()}});

  const bearings::OrientedGraph graph = bearings::spec_graph(spec);
  double min_edge = std::numeric_limits<double>::infinity();
  for (const auto& p : data.positions)
    for (int k = 0; k < graph.edge_count(); ++k)
      min_edge = std::min(min_edge, (p.col(graph.head(k) - 1) - p.col(graph.tail(k) - 1)).norm());
  check("edges_non_degenerate", min_edge > bearings::kSeparationTolerance,
        {{"min_edge_length", min_edge}});

  const Eigen::VectorXd centroid0 = bearings::centroid(data.positions.front());
  const double scale0 = bearings::formation_scale(data.positions.front());
  double max_centroid_drift = 0.0, max_scale_drift = 0.0;
  for (const auto& p : data.positions) {
    max_centroid_drift = std::max(max_centroid_drift, (bearings::centroid(p) - centroid0).norm());
    max_scale_drift = std::max(max_scale_drift,
                               std::abs(bearings::formation_scale(p) - scale0));
  }
  check("centroid_invariant", max_centroid_drift <= args.tol_drift,
        {{"max_drift", max_centroid_drift}, {"tolerance", args.tol_drift}});
  check("scale_invariant", max_scale_drift <= args.tol_drift,
        {{"max_drift", max_scale_drift}, {"tolerance", args.tol_drift}});

  // Dispersion bounds that any centroid-centered cloud obeys:
  // s <= max_i |p_i - centroid| <= s sqrt(n-1), pairwise <= 2 s sqrt(n-1).
  double worst_slack = -std::numeric_limits<double>::infinity();
  for (const auto& p : data.positions) {
    const Eigen::VectorXd mid = bearings::centroid(p);
    const double s = bearings::formation_scale(p);
    const double cap = s * std::sqrt(static_cast<double>(n - 1));
    double max_dev = 0.0;
    for (int i = 0; i < n; ++i) max_dev = std::max(max_dev, (p.col(i) - mid).norm());
    worst_slack = std::max(worst_slack, s - max_dev);
    worst_slack = std::max(worst_slack, max_dev - cap);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        worst_slack = std::max(worst_slack, (p.col(j) - p.col(i)).norm() - 2.0 * cap);
  }
  check("dispersion_bounds", worst_slack <= 1e-9, {{"worst_violation", worst_slack}});

  if (!data.has_rotations()) {
    // Global-mode invariants need the target, reconstructed from the
    // constraints and the first sample's centroid and scale.
    const bearings::TargetSolution sol = bearings::compute_target(
        c, data.positions.front(), args.rank_tol);
    const Eigen::VectorXd p_star = bearings::stack_columns(sol.p_star);
    const Eigen::VectorXd r_star = bearings::centered_offsets(sol.p_star);
    const double r_norm = r_star.norm();

    double max_v_increase = -std::numeric_limits<double>::infinity();
    double max_sphere = 0.0;
    double v_prev = 0.0;
    for (int s = 0; s < data.sample_count(); ++s) {
      const Eigen::VectorXd delta = bearings::stack_columns(data.positions[s]) - p_star;
      const double v = 0.5 * delta.squaredNorm();
      if (s > 0) max_v_increase = std::max(max_v_increase, v - v_prev);
      v_prev = v;
      max_sphere = std::max(max_sphere, std::abs((delta + r_star).norm() - r_norm));
    }
    check("lyapunov_non_increasing", max_v_increase <= args.tol_lyapunov,
          {{"max_increase", max_v_increase}, {"tolerance", args.tol_lyapunov}});
    check("sphere_constraint", max_sphere <= args.tol_sphere,
          {{"max_violation", max_sphere}, {"tolerance", args.tol_sphere}});
  } else {
    double worst = 0.0;
    for (const auto& qs : data.rotations)
      for (const auto& q : qs)
        worst = std::max({worst,
                          (q.transpose() * q - Eigen::Matrix3d::Identity()).norm(),
                          std::abs(q.determinant() - 1.0)});
    check("rotations_orthonormal", worst <= args.tol_rotation,
          {{"worst_defect", worst}, {"tolerance", args.tol_rotation}});
  }

  if (args.gamma) {
    double min_pair = std::numeric_limits<double>::infinity();
    for (const auto& p : data.positions)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          min_pair = std::min(min_pair, (p.col(j) - p.col(i)).norm());
    check("separation_above_gamma", min_pair >= *args.gamma,
          {{"min_pair_distance", min_pair}, {"gamma", *args.gamma}});
  }

  json out;
  out["ok"] = ok;
  out["checks"] = checks;
  std::cout << out.dump(2) << "\n";
  return ok ? kExitOk : kExitValidation;
}

void fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bearing-based formation rigidity analysis and control simulation"};
  app.require_subcommand(1);

  std::string spec_path;
  double rank_tol = bearings::kRankTolerance;

  auto* analyze = app.add_subcommand("analyze", "rigidity classification of a framework");
  analyze->add_option("spec", spec_path, "formation spec (JSON)")->required();
  analyze->add_option("--tol-rank", rank_tol, "relative rank tolerance");

  auto* target = app.add_subcommand("target", "feasibility and target formation from bearings");
  target->add_option("spec", spec_path, "formation spec (JSON)")->required();
  target->add_option("--tol-rank", rank_tol, "relative rank tolerance");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "integrate a formation control law");
  simulate->add_option("spec", sim.spec_path, "formation spec (JSON)")->required();
  simulate->add_option("--mode", sim.mode, "control law frame")
      ->check(CLI::IsMember({"global", "local"}))
      ->capture_default_str();
  simulate->add_option("--dt", sim.dt, "integration step")->capture_default_str();
  simulate->add_option("--t-end", sim.t_end, "horizon")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "seed for random initial conditions")
      ->capture_default_str();
  double gamma_value = 0.0;
  auto* gamma_opt =
      simulate->add_option("--gamma", gamma_value, "terminate when any pair gets closer than this");
  std::string out_path;
  auto* out_opt = simulate->add_option("--out", out_path, "trace CSV path (metrics JSON sibling)");
  simulate->add_option("--record-every", sim.record_every, "sample decimation")
      ->capture_default_str();
  simulate->add_option("--batch", sim.batch, "number of consecutive-seed runs")
      ->capture_default_str();
  simulate->add_option("--init-box", sim.init_box,
                       "halfwidth of the uniform perturbation box around nominal positions");
  simulate->add_option("--init-angle", sim.init_angle,
                       "max random orientation angle (radians, local mode)");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "re-check invariants of a recorded trace");
  verify->add_option("spec", ver.spec_path, "formation spec (JSON)")->required();
  verify->add_option("--trace", ver.trace_path, "trace CSV to check")->required();
  verify->add_option("--tol-drift", ver.tol_drift, "centroid/scale drift tolerance")
      ->capture_default_str();
  verify->add_option("--tol-lyapunov", ver.tol_lyapunov, "per-sample Lyapunov increase slack")
      ->capture_default_str();
  verify->add_option("--tol-sphere", ver.tol_sphere, "sphere constraint tolerance")
      ->capture_default_str();
  verify->add_option("--tol-rotation", ver.tol_rotation, "rotation orthonormality tolerance")
      ->capture_default_str();
  verify->add_option("--tol-rank", ver.rank_tol, "relative rank tolerance");
  double verify_gamma = 0.0;
  auto* verify_gamma_opt =
      verify->add_option("--gamma", verify_gamma, "also check sampled pairwise separation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail("usage", e.what());
    return kExitValidation;
  }

  try {
    if (*analyze) return run_analyze(spec_path, rank_tol);
    if (*target) return run_target(spec_path, rank_tol);
    if (*simulate) {
      if (*gamma_opt) sim.gamma = gamma_value;
      if (*out_opt) sim.out = out_path;
      return run_simulate(sim);
    }
    if (*verify) {
      if (*verify_gamma_opt) ver.gamma = verify_gamma;
      return run_verify(ver);
    }
  } catch (const bearings::NumericError& e) {
    fail("numeric", e.what());
    return kExitNumeric;
  } catch (const bearings::ValidationError& e) {
    fail("validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    fail("internal", e.what());
    return kExitNumeric;
  }
  return kExitValidation;
}
