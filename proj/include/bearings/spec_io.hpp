#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/graph.hpp"
#include "bearings/so3.hpp"
#include "bearings/target.hpp"

namespace bearings {

/// One agent as declared in a formation file. Position is optional (target
/// construction can run from constraints alone); orientation is optional
/// and only meaningful in dimension 3.
struct AgentSpec {
  int id = 0;
  std::optional<Eigen::VectorXd> position;
  std::optional<Eigen::Matrix3d> orientation;
};

/// Parsed formation file in canonical form: agents sorted by id, edges in
/// canonical (min, max) lexicographic order, bearings stored per canonical
/// edge with the matching direction. Serializing and re-parsing reproduces
/// the structure exactly.
struct FormationSpec {
  int dimension = 2;
  std::vector<AgentSpec> agents;
  std::vector<std::pair<int, int>> edges;
  std::optional<Eigen::MatrixXd> bearings;  // d x m, canonical edge order
  std::vector<std::string> warnings;        // load-time notes, not serialized

  int agent_count() const { return static_cast<int>(agents.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
};

namespace detail {

[[noreturn]] inline void spec_error(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

inline double number_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) spec_error(where, "expected a number");
  return j.get<double>();
}

inline int integer_at(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) spec_error(where, "expected an integer");
  return j.get<int>();
}

inline Eigen::VectorXd vector_at(const nlohmann::json& j, int length, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != length)
    spec_error(where, "expected an array of " + std::to_string(length) + " numbers");
  Eigen::VectorXd v(length);
  for (int i = 0; i < length; ++i) v(i) = number_at(j[i], where + "/" + std::to_string(i));
  return v;
}

}  // namespace detail

inline FormationSpec parse_spec_json(const nlohmann::json& j) {
  if (!j.is_object()) detail::spec_error("", "top-level value must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "dimension" && key != "agents" && key != "edges" && key != "bearings")
      detail::spec_error("/" + key, "unknown field");
  }

  FormationSpec spec;
  if (!j.contains("dimension")) detail::spec_error("/dimension", "missing");
  spec.dimension = detail::integer_at(j["dimension"], "/dimension");
  if (spec.dimension < 2) detail::spec_error("/dimension", "must be >= 2");

  if (!j.contains("agents") || !j["agents"].is_array() || j["agents"].empty())
    detail::spec_error("/agents", "must be a non-empty array");
  const auto& agents = j["agents"];
  const int n = static_cast<int>(agents.size());
  spec.agents.resize(n);
  std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
  for (int a = 0; a < n; ++a) {
    const std::string where = "/agents/" + std::to_string(a);
    const auto& ja = agents[a];
    if (!ja.is_object()) detail::spec_error(where, "expected an object");
    if (!ja.contains("id")) detail::spec_error(where + "/id", "missing");
    const int id = detail::integer_at(ja["id"], where + "/id");
    if (id < 1 || id > n)
      detail::spec_error(where + "/id",
                         "ids must be contiguous 1.." + std::to_string(n) + ", got " +
                             std::to_string(id));
    if (seen[id]) detail::spec_error(where + "/id", "duplicate id " + std::to_string(id));
    seen[id] = true;

    AgentSpec agent;
    agent.id = id;
    if (ja.contains("position"))
      agent.position = detail::vector_at(ja["position"], spec.dimension, where + "/position");
    if (ja.contains("orientation")) {
      if (spec.dimension != 3)
        detail::spec_error(where + "/orientation", "orientations require dimension 3");
      const Eigen::VectorXd flat = detail::vector_at(ja["orientation"], 9, where + "/orientation");
      Eigen::Matrix3d q;
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) q(r, col) = flat(3 * r + col);
      if (!is_rotation(q))
        detail::spec_error(where + "/orientation", "matrix is not a rotation");
      agent.orientation = q;
    }
    for (const auto& [key, value] : ja.items()) {
      (void)value;
      if (key != "id" && key != "position" && key != "orientation")
        detail::spec_error(where + "/" + key, "unknown field");
    }
    spec.agents[id - 1] = std::move(agent);
  }

  if (!j.contains("edges") || !j["edges"].is_array())
    detail::spec_error("/edges", "must be an array");
  std::vector<std::pair<int, int>> edges;
  for (int k = 0; k < static_cast<int>(j["edges"].size()); ++k) {
    const std::string where = "/edges/" + std::to_string(k);
    const auto& je = j["edges"][k];
    if (!je.is_array() || je.size() != 2) detail::spec_error(where, "expected a pair [i, j]");
    edges.emplace_back(detail::integer_at(je[0], where + "/0"),
                       detail::integer_at(je[1], where + "/1"));
  }
  // Delegated validation covers range, self-loops, and duplicates.
  try {
    spec.edges = build_graph(n, edges).edges;
  } catch (const ValidationError& e) {
    detail::spec_error("/edges", e.what());
  }

  if (j.contains("bearings")) {
    if (!j["bearings"].is_array()) detail::spec_error("/bearings", "must be an array");
    const int m = spec.edge_count();
    OrientedGraph g = orient(build_graph(n, spec.edges));
    Eigen::MatrixXd dirs(spec.dimension, m);
    std::vector<bool> covered(m, false);
    for (int k = 0; k < static_cast<int>(j["bearings"].size()); ++k) {
      const std::string where = "/bearings/" + std::to_string(k);
      const auto& jb = j["bearings"][k];
      if (!jb.is_object() || !jb.contains("edge") || !jb.contains("g"))
        detail::spec_error(where, "expected an object with fields edge and g");
      const auto& je = jb["edge"];
      if (!je.is_array() || je.size() != 2)
        detail::spec_error(where + "/edge", "expected a pair [i, j]");
      const int i = detail::integer_at(je[0], where + "/edge/0");
      const int jv = detail::integer_at(je[1], where + "/edge/1");
      const int index = (i >= 1 && i <= n && jv >= 1 && jv <= n) ? g.edge_index(i, jv) : -1;
      if (index < 0)
        detail::spec_error(where + "/edge", "(" + std::to_string(i) + "," + std::to_string(jv) +
                                                ") is not a declared edge");
      if (covered[index])
        detail::spec_error(where + "/edge", "duplicate bearing for edge (" + std::to_string(i) +
                                                "," + std::to_string(jv) + ")");
      covered[index] = true;

      Eigen::VectorXd gvec = detail::vector_at(jb["g"], spec.dimension, where + "/g");
      const double norm = gvec.norm();
      if (std::abs(norm - 1.0) > 1e-6)
        detail::spec_error(where + "/g", "bearing norm " + std::to_string(norm) +
                                             " deviates from 1 by more than 1e-6");
      if (std::abs(norm - 1.0) > 1e-9) {
        spec.warnings.push_back(where + "/g: bearing norm deviates from 1 by " +
                                std::to_string(std::abs(norm - 1.0)) + "; renormalized");
      }
      gvec /= norm;
      // Entries are directed i -> j; flip onto the canonical direction.
      dirs.col(index) = (i < jv) ? gvec : Eigen::VectorXd(-gvec);
    }
    for (int k = 0; k < m; ++k)
      if (!covered[k])
        detail::spec_error("/bearings", "no bearing given for edge (" +
                                            std::to_string(spec.edges[k].first) + "," +
                                            std::to_string(spec.edges[k].second) + ")");
    spec.bearings = std::move(dirs);
  }
  return spec;
}

inline FormationSpec parse_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("JSON syntax error in " + path + ": " + e.what());
  }
  return parse_spec_json(j);
}

inline nlohmann::json spec_to_json(const FormationSpec& spec) {
  nlohmann::json j;
  j["dimension"] = spec.dimension;
  j["agents"] = nlohmann::json::array();
  for (const auto& agent : spec.agents) {
    nlohmann::json ja;
    ja["id"] = agent.id;
    if (agent.position) {
      auto arr = nlohmann::json::array();
      for (Eigen::Index i = 0; i < agent.position->size(); ++i) arr.push_back((*agent.position)(i));
      ja["position"] = std::move(arr);
    }
    if (agent.orientation) {
      auto arr = nlohmann::json::array();
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) arr.push_back((*agent.orientation)(r, c));
      ja["orientation"] = std::move(arr);
    }
    j["agents"].push_back(std::move(ja));
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : spec.edges) j["edges"].push_back(nlohmann::json::array({a, b}));
  if (spec.bearings) {
    j["bearings"] = nlohmann::json::array();
    for (int k = 0; k < spec.edge_count(); ++k) {
      nlohmann::json jb;
      jb["edge"] = nlohmann::json::array({spec.edges[k].first, spec.edges[k].second});
      auto arr = nlohmann::json::array();
      for (int i = 0; i < spec.dimension; ++i) arr.push_back((*spec.bearings)(i, k));
      jb["g"] = std::move(arr);
      j["bearings"].push_back(std::move(jb));
    }
  }
  return j;
}

inline void write_spec(const FormationSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << spec_to_json(spec).dump(2) << "\n";
  if (!out) throw ValidationError("write failed: " + path);
}

inline OrientedGraph spec_graph(const FormationSpec& spec) {
  return build_oriented_graph(spec.agent_count(), spec.edges);
}

inline Eigen::MatrixXd spec_positions(const FormationSpec& spec) {
  Eigen::MatrixXd p(spec.dimension, spec.agent_count());
  for (const auto& agent : spec.agents) {
    if (!agent.position)
      throw ValidationError("agent " + std::to_string(agent.id) +
                            " has no position; this operation needs every position");
    p.col(agent.id - 1) = *agent.position;
  }
  return p;
}

inline bool spec_has_positions(const FormationSpec& spec) {
  for (const auto& agent : spec.agents)
    if (!agent.position) return false;
  return true;
}

inline Framework spec_framework(const FormationSpec& spec,
                                double sep_tolerance = kSeparationTolerance) {
  return make_framework(spec_graph(spec), spec_positions(spec), sep_tolerance);
}

inline BearingConstraints spec_constraints(const FormationSpec& spec) {
  if (!spec.bearings)
    throw ValidationError("spec declares no bearings; this operation needs bearing constraints");
  return make_bearing_constraints(spec_graph(spec), *spec.bearings);
}

/// Orientations with identity filled in for agents that declare none.
inline std::vector<Eigen::Matrix3d> spec_rotations(const FormationSpec& spec) {
  if (spec.dimension != 3) throw ValidationError("orientations require dimension 3");
  std::vector<Eigen::Matrix3d> out(spec.agent_count(), Eigen::Matrix3d::Identity());
  for (const auto& agent : spec.agents)
    if (agent.orientation) out[agent.id - 1] = *agent.orientation;
  return out;
}

}  // namespace bearings
