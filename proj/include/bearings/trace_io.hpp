#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bearings/errors.hpp"
#include "bearings/sim.hpp"

namespace bearings {

namespace detail {

/// Full-precision decimal text; 17 significant digits round-trip any double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// Column layout: t, then d coordinates per agent (p<i>_<axis>), then, for
/// local-mode traces, 9 row-major rotation entries per agent (q<i>_<rc>).
inline std::string trace_csv_header(int n, int d, bool with_rotations) {
  std::string h = "t";
  for (int i = 1; i <= n; ++i)
    for (int a = 1; a <= d; ++a) h += ",p" + std::to_string(i) + "_" + std::to_string(a);
  if (with_rotations)
    for (int i = 1; i <= n; ++i)
      for (int r = 1; r <= 3; ++r)
        for (int c = 1; c <= 3; ++c)
          h += ",q" + std::to_string(i) + "_" + std::to_string(r) + std::to_string(c);
  return h;
}

inline void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  if (trace.sample_count() == 0) throw ValidationError("refusing to write an empty trace");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);

  const int n = static_cast<int>(trace.positions.front().cols());
  const int d = static_cast<int>(trace.positions.front().rows());
  const bool with_rotations = trace.mode == SimMode::local;
  out << trace_csv_header(n, d, with_rotations) << "\n";

  for (int s = 0; s < trace.sample_count(); ++s) {
    out << detail::format_double(trace.times[s]);
    const Eigen::MatrixXd& p = trace.positions[s];
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) out << "," << detail::format_double(p(a, i));
    if (with_rotations) {
      const auto& qs = trace.rotations[s];
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) out << "," << detail::format_double(qs[i](r, c));
    }
    out << "\n";
  }
  if (!out) throw ValidationError("write failed: " + path);
}

inline nlohmann::json metrics_to_json(const MetricsSummary& m, const SimulationTrace& trace) {
  nlohmann::json j;
  j["mode"] = trace.mode == SimMode::global ? "global" : "local";
  j["samples"] = trace.sample_count();
  j["completed"] = m.completed;
  j["collided"] = m.collided;
  if (trace.collision) {
    j["collision"] = {{"time", trace.collision->time},
                      {"pair", {trace.collision->i, trace.collision->j}},
                      {"distance", trace.collision->distance}};
  }
  j["final"] = {{"bearing_error", m.final_bearing_error},
                {"delta_norm", m.final_delta_norm},
                {"lyapunov", m.final_lyapunov},
                {"centroid_drift", m.final_centroid_drift},
                {"scale_drift", m.final_scale_drift},
                {"min_pair_distance", m.final_min_pair_distance}};
  j["initial"] = {{"delta_norm", m.initial_delta_norm}};
  j["max"] = {{"centroid_drift", m.max_centroid_drift},
              {"scale_drift", m.max_scale_drift}};
  j["min_pair_distance_overall"] = m.min_pair_distance_overall;
  if (trace.mode == SimMode::global) {
    j["final"]["theta"] = m.final_theta;
    j["initial"]["theta"] = m.initial_theta;
    j["max"]["lyapunov_step_increase"] = m.max_lyapunov_step_increase;
    j["max"]["sphere_violation"] = m.max_sphere_violation;
    j["lyapunov_monotone"] = m.lyapunov_monotone;
  } else {
    j["final"]["sync_error"] = m.final_sync;
    j["final"]["input_residual"] = m.final_input_residual;
    if (m.sync_assumption) j["sync_assumption"] = to_string(*m.sync_assumption);
  }
  j["within_tolerances"] = m.within_tolerances;
  return j;
}

/// Derives the sibling metrics path: trailing ".csv" becomes
/// ".metrics.json", anything else gets the suffix appended.
inline std::string metrics_path_for(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".metrics.json";
  return csv_path + ".metrics.json";
}

inline void write_metrics_json(const MetricsSummary& m, const SimulationTrace& trace,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << metrics_to_json(m, trace).dump(2) << "\n";
  if (!out) throw ValidationError("write failed: " + path);
}

/// Raw samples read back from a trace file. Rotations are present exactly
/// when the header carries q columns.
struct TraceData {
  int n = 0;
  int d = 0;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> positions;
  std::vector<std::vector<Eigen::Matrix3d>> rotations;

  int sample_count() const { return static_cast<int>(times.size()); }
  bool has_rotations() const { return !rotations.empty(); }
};

inline TraceData read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw ValidationError("trace file is empty: " + path);

  std::vector<std::string> columns;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) columns.push_back(tok);
  }
  if (columns.empty() || columns[0] != "t")
    throw ValidationError("trace header must start with column t");

  int n = 0, d = 0, q_cols = 0;
  for (std::size_t c = 1; c < columns.size(); ++c) {
    const std::string& name = columns[c];
    int agent = 0, axis = 0;
    if (std::sscanf(name.c_str(), "p%d_%d", &agent, &axis) == 2 && name[0] == 'p') {
      n = std::max(n, agent);
      d = std::max(d, axis);
    } else if (std::sscanf(name.c_str(), "q%d_%d", &agent, &axis) == 2 && name[0] == 'q') {
      ++q_cols;
      n = std::max(n, agent);
    } else {
      throw ValidationError("unrecognized trace column: " + name);
    }
  }
  const bool with_rotations = q_cols > 0;
  if (n < 1 || d < 1) throw ValidationError("trace header declares no position columns");
  const std::size_t expected = 1 + static_cast<std::size_t>(n) * d +
                               (with_rotations ? static_cast<std::size_t>(n) * 9 : 0);
  if (columns.size() != expected)
    throw ValidationError("trace header has " + std::to_string(columns.size()) +
                          " columns, expected " + std::to_string(expected));

  TraceData data;
  data.n = n;
  data.d = d;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(expected);
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    }
    if (row.size() != expected)
      throw ValidationError("line " + std::to_string(line_no) + " has " +
                            std::to_string(row.size()) + " values, expected " +
                            std::to_string(expected));
    data.times.push_back(row[0]);
    Eigen::MatrixXd p(d, n);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) p(a, i) = row[1 + i * d + a];
    data.positions.push_back(std::move(p));
    if (with_rotations) {
      std::vector<Eigen::Matrix3d> qs(n);
      const std::size_t base = 1 + static_cast<std::size_t>(n) * d;
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) qs[i](r, c) = row[base + i * 9 + r * 3 + c];
      data.rotations.push_back(std::move(qs));
    }
  }
  if (data.times.empty()) throw ValidationError("trace file has no samples: " + path);
  return data;
}

}  // namespace bearings
