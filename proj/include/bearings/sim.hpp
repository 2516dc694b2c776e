#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bearings/control_global.hpp"
#include "bearings/control_local.hpp"
#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/rng.hpp"
#include "bearings/so3.hpp"
#include "bearings/target.hpp"

namespace bearings {

enum class SimMode { global, local };

/// Fixed-step integration settings. The horizon is rounded to a whole
/// number of steps; sample decimation thins the recorded trace but never
/// skips t = 0 or the final state.
struct SimConfig {
  double dt = 1e-3;
  double t_end = 20.0;
  SimMode mode = SimMode::global;
  std::uint64_t seed = 0;
  std::optional<double> gamma;  // terminal pairwise-distance threshold, checked at samples
  int record_every = 1;
  double sep_tolerance = kSeparationTolerance;
};

struct CollisionEvent {
  double time = 0.0;
  int i = 0;  // offending pair, 1-based
  int j = 0;
  double distance = 0.0;
};

/// Recorded trajectory with per-sample diagnostics. Step-resolution
/// summaries (drift maxima, Lyapunov increases, sphere violations) are
/// accumulated at every integration step, independent of decimation.
struct SimulationTrace {
  SimMode mode = SimMode::global;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> positions;                  // d x n per sample
  std::vector<std::vector<Eigen::Matrix3d>> rotations;     // local mode only

  // Per-sample metrics.
  std::vector<double> bearing_error;      // sum_k |g_k - g_ref_k|^2
  std::vector<double> delta_norm;         // |p - p*|
  std::vector<double> lyapunov;           // |delta|^2 / 2
  std::vector<double> centroid_drift;
  std::vector<double> scale_drift;
  std::vector<double> min_pair_distance;
  std::vector<double> theta;              // global mode: angle(delta, -r*)
  std::vector<double> sync;               // local mode: max_{i,j} |Q_i^T Q_j - I|
  std::vector<double> input_residual;     // local mode: |h| against estimated Q*

  // References the metrics are measured against.
  Eigen::MatrixXd p_star;                 // d x n
  Eigen::Matrix3d q_star = Eigen::Matrix3d::Identity();  // local mode estimate

  // Step-resolution summaries.
  double max_centroid_drift = 0.0;
  double max_scale_drift = 0.0;
  double max_lyapunov_step_increase = 0.0;  // global mode
  double max_sphere_violation = 0.0;        // global mode

  bool completed = false;  // reached t_end without a terminal event
  std::optional<CollisionEvent> collision;
  std::optional<SyncAssumption> sync_assumption;  // local mode: initial-orientation spread check

  int sample_count() const { return static_cast<int>(times.size()); }
  const Eigen::MatrixXd& final_positions() const { return positions.back(); }
  const std::vector<Eigen::Matrix3d>& final_rotations() const { return rotations.back(); }
};

namespace detail {

inline double min_pairwise_distance(const Eigen::MatrixXd& p, int* arg_i = nullptr,
                                    int* arg_j = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.cols(); ++i)
    for (int j = i + 1; j < p.cols(); ++j) {
      const double dist = (p.col(j) - p.col(i)).norm();
      if (dist < best) {
        best = dist;
        if (arg_i) *arg_i = i + 1;
        if (arg_j) *arg_j = j + 1;
      }
    }
  return best;
}

inline std::optional<CollisionEvent> degenerate_edge(const OrientedGraph& g,
                                                     const Eigen::MatrixXd& p, double t,
                                                     double sep_tol) {
  for (int k = 0; k < g.edge_count(); ++k) {
    const double len = (p.col(g.head(k) - 1) - p.col(g.tail(k) - 1)).norm();
    if (len <= sep_tol) return CollisionEvent{t, g.tail(k), g.head(k), len};
  }
  return std::nullopt;
}

}  // namespace detail

/// Integrates the global-frame law from p0 with classical fixed-step RK4.
/// The target is fixed up front from the bearing constraints and the
/// initial centroid and scale. Terminal events: an edge collapsing below
/// the separation tolerance (checked every step, including inside
/// integrator stages) or, when gamma is set, any pairwise distance
/// dropping below gamma (checked at sample resolution). Non-finite state
/// aborts with a numeric error naming the step.
inline SimulationTrace simulate_global(const Eigen::MatrixXd& p0, const BearingConstraints& c,
                                       const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(cfg.t_end >= cfg.dt)) throw ValidationError("t_end must be at least one step");
  if (cfg.record_every < 1) throw ValidationError("record_every must be >= 1");
  if (cfg.gamma && !(*cfg.gamma >= 0.0)) throw ValidationError("gamma must be >= 0");

  // Fails fast on degenerate initial edges and non-rigid constraints.
  bearing_set(c.graph, p0, cfg.sep_tolerance);
  const TargetSolution target = compute_target(c, p0);
  if (!target.feasible)
    throw ValidationError("bearing constraints have no realization with the initial centroid "
                          "and scale; the error metrics would be meaningless");

  const int d = c.dimension();
  const long n_steps = std::lround(cfg.t_end / cfg.dt);
  if (n_steps < 1) throw ValidationError("horizon shorter than one step");

  SimulationTrace trace;
  trace.mode = SimMode::global;
  trace.p_star = target.p_star;

  const Eigen::VectorXd p_star_vec = stack_columns(target.p_star);
  const Eigen::VectorXd r_star = centered_offsets(target.p_star);
  const double r_star_norm = r_star.norm();
  const Eigen::VectorXd mean_star = p_star_vec - r_star;  // 1 kron target centroid
  const Eigen::VectorXd centroid0 = centroid(p0);
  const double scale0 = formation_scale(p0);

  auto field = [&](const Eigen::VectorXd& p_vec) {
    return control_velocity(unstack_columns(p_vec, d), c, cfg.sep_tolerance);
  };

  Eigen::VectorXd p = stack_columns(p0);
  double v_prev = 0.5 * (p - p_star_vec).squaredNorm();

  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.positions.push_back(unstack_columns(p, d));
  };
  record(0.0);

  if (cfg.gamma) {
    int ci = 0, cj = 0;
    const double dist = detail::min_pairwise_distance(trace.positions.back(), &ci, &cj);
    if (dist < *cfg.gamma) {
      trace.collision = CollisionEvent{0.0, ci, cj, dist};
    }
  }

  for (long step = 1; !trace.collision && step <= n_steps; ++step) {
    const double t = static_cast<double>(step) * cfg.dt;
    try {
      const Eigen::VectorXd k1 = field(p);
      const Eigen::VectorXd k2 = field(p + 0.5 * cfg.dt * k1);
      const Eigen::VectorXd k3 = field(p + 0.5 * cfg.dt * k2);
      const Eigen::VectorXd k4 = field(p + cfg.dt * k3);
      p += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const DegenerateEdgeError& e) {
      // p is still the last committed state; keep it in the trace so the
      // output ends at the moment the pair closed in.
      const double t_prev = static_cast<double>(step - 1) * cfg.dt;
      if (trace.times.back() < t_prev) record(t_prev);
      const Eigen::MatrixXd current = unstack_columns(p, d);
      const double dist = (current.col(e.head() - 1) - current.col(e.tail() - 1)).norm();
      trace.collision = CollisionEvent{t, e.tail(), e.head(), dist};
      break;
    }
    if (!p.allFinite())
      throw NumericError("non-finite state at step " + std::to_string(step) + ", t = " +
                         std::to_string(t));

    const Eigen::MatrixXd p_mat = unstack_columns(p, d);
    if (auto hit = detail::degenerate_edge(c.graph, p_mat, t, cfg.sep_tolerance)) {
      record(t);
      trace.collision = hit;
      break;
    }

    trace.max_centroid_drift =
        std::max(trace.max_centroid_drift, (centroid(p_mat) - centroid0).norm());
    trace.max_scale_drift =
        std::max(trace.max_scale_drift, std::abs(formation_scale(p_mat) - scale0));
    const double v_now = 0.5 * (p - p_star_vec).squaredNorm();
    trace.max_lyapunov_step_increase = std::max(trace.max_lyapunov_step_increase, v_now - v_prev);
    v_prev = v_now;
    trace.max_sphere_violation =
        std::max(trace.max_sphere_violation, std::abs((p - mean_star).norm() - r_star_norm));

    if (step % cfg.record_every == 0 || step == n_steps) {
      record(t);
      if (cfg.gamma) {
        int ci = 0, cj = 0;
        const double dist = detail::min_pairwise_distance(p_mat, &ci, &cj);
        if (dist < *cfg.gamma) {
          trace.collision = CollisionEvent{t, ci, cj, dist};
          break;
        }
      }
    }
  }
  trace.completed = !trace.collision.has_value();

  // Per-sample metrics.
  const int samples = trace.sample_count();
  trace.bearing_error.resize(samples);
  trace.delta_norm.resize(samples);
  trace.lyapunov.resize(samples);
  trace.centroid_drift.resize(samples);
  trace.scale_drift.resize(samples);
  trace.min_pair_distance.resize(samples);
  trace.theta.resize(samples);
  for (int s = 0; s < samples; ++s) {
    const Eigen::MatrixXd& ps = trace.positions[s];
    double be = 0.0;
    for (int k = 0; k < c.edge_count(); ++k) {
      const Eigen::VectorXd e = ps.col(c.graph.head(k) - 1) - ps.col(c.graph.tail(k) - 1);
      const double len = e.norm();
      if (len > cfg.sep_tolerance) be += (e / len - c.directions.col(k)).squaredNorm();
    }
    trace.bearing_error[s] = be;
    const Eigen::VectorXd delta = stack_columns(ps) - p_star_vec;
    trace.delta_norm[s] = delta.norm();
    trace.lyapunov[s] = 0.5 * delta.squaredNorm();
    trace.centroid_drift[s] = (centroid(ps) - centroid0).norm();
    trace.scale_drift[s] = std::abs(formation_scale(ps) - scale0);
    trace.min_pair_distance[s] = detail::min_pairwise_distance(ps);
    trace.theta[s] = error_angle(delta, r_star);
  }
  return trace;
}

/// Integrates the local-frame law in R^3. Positions advance with RK4;
/// orientations advance multiplicatively, Q <- Q exp(skew(w dt)), inside
/// every stage and in the final combination, then get re-projected onto
/// the rotation group so orthonormality never drifts. The target and the
/// common orientation limit Q* are only known after the fact, so delta
/// metrics are filled in a finalize pass using the polar mean of the final
/// orientations.
inline SimulationTrace simulate_local(const LocalFormationState& s0, const BearingConstraints& c,
                                      const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(cfg.t_end >= cfg.dt)) throw ValidationError("t_end must be at least one step");
  if (cfg.record_every < 1) throw ValidationError("record_every must be >= 1");
  if (cfg.gamma && !(*cfg.gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  validate_local_state(s0, c);
  bearing_set(c.graph, s0.positions, cfg.sep_tolerance);
  {
    // Non-rigid or unrealizable constraints would make the finalize-pass
    // target ambiguous; refuse up front rather than after a full run.
    const DegreeOfRigidity dor = degree_of_rigidity(c);
    if (!dor.is_rigid)
      throw ValidationError("bearing constraints are not infinitesimally rigid; the local-frame "
                            "diagnostics have no unique target");
    const TargetSolution probe = compute_target(c, s0.positions);
    if (!probe.feasible)
      throw ValidationError("bearing constraints have no realization with the initial centroid "
                            "and scale; the error metrics would be meaningless");
  }

  const int n = c.graph.vertex_count();
  const long n_steps = std::lround(cfg.t_end / cfg.dt);
  if (n_steps < 1) throw ValidationError("horizon shorter than one step");

  SimulationTrace trace;
  trace.mode = SimMode::local;
  // The convergence guarantees only apply when the initial orientations
  // admit a common frame within a quarter turn of every agent; the run
  // proceeds regardless, tagged so consumers can filter.
  trace.sync_assumption = check_sync_assumption(s0.rotations);

  const Eigen::VectorXd centroid0 = centroid(s0.positions);
  const double scale0 = formation_scale(s0.positions);

  Eigen::MatrixXd p = s0.positions;
  std::vector<Eigen::Matrix3d> q = s0.rotations;

  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.positions.push_back(p);
    trace.rotations.push_back(q);
  };
  record(0.0);

  if (cfg.gamma) {
    int ci = 0, cj = 0;
    const double dist = detail::min_pairwise_distance(p, &ci, &cj);
    if (dist < *cfg.gamma) trace.collision = CollisionEvent{0.0, ci, cj, dist};
  }

  std::vector<Eigen::Matrix3d> q_stage(n);
  for (long step = 1; !trace.collision && step <= n_steps; ++step) {
    const double t = static_cast<double>(step) * cfg.dt;
    try {
      const LocalDerivative d1 = closed_loop_derivative({p, q}, c, cfg.sep_tolerance);

      Eigen::MatrixXd p2 = p + 0.5 * cfg.dt * d1.velocities;
      for (int i = 0; i < n; ++i) q_stage[i] = q[i] * so3_exp(0.5 * cfg.dt * d1.body_rates[i]);
      const LocalDerivative d2 = closed_loop_derivative({p2, q_stage}, c, cfg.sep_tolerance);

      Eigen::MatrixXd p3 = p + 0.5 * cfg.dt * d2.velocities;
      for (int i = 0; i < n; ++i) q_stage[i] = q[i] * so3_exp(0.5 * cfg.dt * d2.body_rates[i]);
      const LocalDerivative d3 = closed_loop_derivative({p3, q_stage}, c, cfg.sep_tolerance);

      Eigen::MatrixXd p4 = p + cfg.dt * d3.velocities;
      for (int i = 0; i < n; ++i) q_stage[i] = q[i] * so3_exp(cfg.dt * d3.body_rates[i]);
      const LocalDerivative d4 = closed_loop_derivative({p4, q_stage}, c, cfg.sep_tolerance);

      p += (cfg.dt / 6.0) *
           (d1.velocities + 2.0 * d2.velocities + 2.0 * d3.velocities + d4.velocities);
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d w = (d1.body_rates[i] + 2.0 * d2.body_rates[i] +
                                   2.0 * d3.body_rates[i] + d4.body_rates[i]) /
                                  6.0;
        q[i] = project_to_rotation(q[i] * so3_exp(cfg.dt * w));
      }
    } catch (const DegenerateEdgeError& e) {
      const double t_prev = static_cast<double>(step - 1) * cfg.dt;
      if (trace.times.back() < t_prev) record(t_prev);
      const double dist = (p.col(e.head() - 1) - p.col(e.tail() - 1)).norm();
      trace.collision = CollisionEvent{t, e.tail(), e.head(), dist};
      break;
    }
    bool finite = p.allFinite();
    for (const auto& qi : q) finite = finite && qi.allFinite();
    if (!finite)
      throw NumericError("non-finite state at step " + std::to_string(step) + ", t = " +
                         std::to_string(t));

    if (auto hit = detail::degenerate_edge(c.graph, p, t, cfg.sep_tolerance)) {
      record(t);
      trace.collision = hit;
      break;
    }

    trace.max_centroid_drift =
        std::max(trace.max_centroid_drift, (centroid(p) - centroid0).norm());
    trace.max_scale_drift =
        std::max(trace.max_scale_drift, std::abs(formation_scale(p) - scale0));

    if (step % cfg.record_every == 0 || step == n_steps) {
      record(t);
      if (cfg.gamma) {
        int ci = 0, cj = 0;
        const double dist = detail::min_pairwise_distance(p, &ci, &cj);
        if (dist < *cfg.gamma) {
          trace.collision = CollisionEvent{t, ci, cj, dist};
          break;
        }
      }
    }
  }
  trace.completed = !trace.collision.has_value();

  // Finalize: estimate the common orientation limit, derive the target the
  // rotated constraints define, then fill the per-sample metrics.
  trace.q_star = mean_rotation(trace.rotations.back());
  BearingConstraints rotated{c.graph, trace.q_star * c.directions};
  const TargetSolution target = compute_target(rotated, s0.positions);
  trace.p_star = target.p_star;
  const Eigen::VectorXd p_star_vec = stack_columns(target.p_star);

  const int samples = trace.sample_count();
  trace.bearing_error.resize(samples);
  trace.delta_norm.resize(samples);
  trace.lyapunov.resize(samples);
  trace.centroid_drift.resize(samples);
  trace.scale_drift.resize(samples);
  trace.min_pair_distance.resize(samples);
  trace.sync.resize(samples);
  trace.input_residual.resize(samples);
  for (int s = 0; s < samples; ++s) {
    const Eigen::MatrixXd& ps = trace.positions[s];
    double be = 0.0;
    for (int k = 0; k < c.edge_count(); ++k) {
      const Eigen::VectorXd e = ps.col(c.graph.head(k) - 1) - ps.col(c.graph.tail(k) - 1);
      const double len = e.norm();
      if (len > cfg.sep_tolerance)
        be += (e / len - trace.q_star * c.directions.col(k)).squaredNorm();
    }
    trace.bearing_error[s] = be;
    const Eigen::VectorXd delta = stack_columns(ps) - p_star_vec;
    trace.delta_norm[s] = delta.norm();
    trace.lyapunov[s] = 0.5 * delta.squaredNorm();
    trace.centroid_drift[s] = (centroid(ps) - centroid0).norm();
    trace.scale_drift[s] = std::abs(formation_scale(ps) - scale0);
    trace.min_pair_distance[s] = detail::min_pairwise_distance(ps);
    trace.sync[s] = sync_error(trace.rotations[s]);
    trace.input_residual[s] =
        input_norm({ps, trace.rotations[s]}, c, trace.q_star, cfg.sep_tolerance);
  }
  return trace;
}

/// Sampled pairwise-distance violations below gamma across the whole trace.
inline std::vector<CollisionEvent> collision_events(const SimulationTrace& trace, double gamma) {
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  std::vector<CollisionEvent> events;
  for (int s = 0; s < trace.sample_count(); ++s) {
    const Eigen::MatrixXd& p = trace.positions[s];
    for (int i = 0; i < p.cols(); ++i)
      for (int j = i + 1; j < p.cols(); ++j) {
        const double dist = (p.col(j) - p.col(i)).norm();
        if (dist < gamma)
          events.push_back(CollisionEvent{trace.times[s], i + 1, j + 1, dist});
      }
  }
  return events;
}

struct MetricsTolerances {
  double centroid_drift = 1e-6;
  double scale_drift = 1e-6;
  double lyapunov_slack = 1e-9;   // global mode
  double sphere = 1e-6;           // global mode
};

/// Final and extreme values of every recorded metric, with pass/fail flags
/// against the configured tolerances.
struct MetricsSummary {
  double final_bearing_error = 0.0;
  double final_delta_norm = 0.0;
  double final_lyapunov = 0.0;
  double final_centroid_drift = 0.0;
  double final_scale_drift = 0.0;
  double final_min_pair_distance = 0.0;
  double final_theta = 0.0;           // global mode
  double final_sync = 0.0;            // local mode
  double final_input_residual = 0.0;  // local mode
  double initial_delta_norm = 0.0;
  double initial_theta = 0.0;
  double max_centroid_drift = 0.0;
  double max_scale_drift = 0.0;
  double max_lyapunov_step_increase = 0.0;
  double max_sphere_violation = 0.0;
  double min_pair_distance_overall = 0.0;
  bool lyapunov_monotone = false;
  bool within_tolerances = false;
  bool completed = false;
  bool collided = false;
  std::optional<SyncAssumption> sync_assumption;  // local mode
};

inline MetricsSummary compute_metrics(const SimulationTrace& trace,
                                      const MetricsTolerances& tol = {}) {
  if (trace.sample_count() == 0) throw ValidationError("trace is empty");
  MetricsSummary s;
  s.final_bearing_error = trace.bearing_error.back();
  s.final_delta_norm = trace.delta_norm.back();
  s.final_lyapunov = trace.lyapunov.back();
  s.final_centroid_drift = trace.centroid_drift.back();
  s.final_scale_drift = trace.scale_drift.back();
  s.final_min_pair_distance = trace.min_pair_distance.back();
  s.initial_delta_norm = trace.delta_norm.front();
  if (trace.mode == SimMode::global) {
    s.final_theta = trace.theta.back();
    s.initial_theta = trace.theta.front();
  } else {
    s.final_sync = trace.sync.back();
    s.final_input_residual = trace.input_residual.back();
    s.sync_assumption = trace.sync_assumption;
  }
  s.max_centroid_drift = trace.max_centroid_drift;
  s.max_scale_drift = trace.max_scale_drift;
  s.max_lyapunov_step_increase = trace.max_lyapunov_step_increase;
  s.max_sphere_violation = trace.max_sphere_violation;
  s.min_pair_distance_overall =
      *std::min_element(trace.min_pair_distance.begin(), trace.min_pair_distance.end());
  s.lyapunov_monotone = trace.max_lyapunov_step_increase <= tol.lyapunov_slack;
  s.completed = trace.completed;
  s.collided = trace.collision.has_value();
  s.within_tolerances = s.max_centroid_drift <= tol.centroid_drift &&
                        s.max_scale_drift <= tol.scale_drift &&
                        (trace.mode == SimMode::local ||
                         (s.lyapunov_monotone && s.max_sphere_violation <= tol.sphere));
  return s;
}

/// Seeded random initial conditions: positions drawn uniformly from an
/// axis-aligned box of the given halfwidth centered on each nominal
/// position, orientations as a uniformly random axis and an angle uniform
/// in [-max_angle, max_angle] about it.
inline Eigen::MatrixXd random_positions(const Eigen::MatrixXd& nominal, double halfwidth,
                                        Rng& rng) {
  Eigen::MatrixXd out = nominal;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      out(i, j) += rng.uniform(-halfwidth, halfwidth);
  return out;
}

inline Eigen::Matrix3d random_rotation(double max_angle, Rng& rng) {
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  } while (axis.norm() < 1e-9);
  axis.normalize();
  return so3_exp(axis * rng.uniform(-max_angle, max_angle));
}

inline std::vector<Eigen::Matrix3d> random_rotations(int n, double max_angle, Rng& rng) {
  std::vector<Eigen::Matrix3d> out(n);
  for (auto& q : out) q = random_rotation(max_angle, rng);
  return out;
}

}  // namespace bearings
