#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "shb/analysis.hpp"
#include "shb/dynamics.hpp"
#include "shb/expr_graph.hpp"
#include "shb/heavyball.hpp"
#include "shb/problems.hpp"

namespace shb {

using json = nlohmann::json;

// Graph document: {input_dim, sample_dim, nodes: [{id, op, inputs, payload}], output, artifacts}.
json graph_to_json(const ExprGraph& g);
ExprGraph graph_from_json(const json& j);

// Problem document: {name, graph, support, probs, growth, f_star, clarke_oracle, box, clarke_critical_set}.
json problem_to_json(const StochasticProblem& pb);
StochasticProblem problem_from_json(const json& j);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

/// Catalog name, or a path to a problem document.
StochasticProblem resolve_problem(const std::string& name_or_path);

/// Header: k,tau,alpha,beta,w0..,y0..,F,E,v0..,V0..,u0..,xi
void write_run_csv(std::ostream& os, const RunRecord& rec);
/// Header: t,w0..,y0..,E
void write_di_csv(std::ostream& os, const DITrajectory& traj);
/// Header: w0..,y0..,weight
void write_occupation_csv(std::ostream& os, const OccupationGrid& grid);

json summary_json(const RunRecord& rec);
json report_json(const AccumulationReport& rep);
json perturbed_json(const PerturbedReport& rep);
json avoidance_json(const AvoidanceStats& stats, const AvoidanceParams& params);

/// Shortest round-trip decimal for a double.
std::string format_double(double x);

} // namespace shb
