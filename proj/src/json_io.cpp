#include "shb/json_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

namespace shb {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// ------------------------------------------------------------------ graphs

json graph_to_json(const ExprGraph& g) {
    json nodes = json::array();
    for (std::size_t i = 0; i < g.nodes().size(); ++i) {
        const Node& n = g.nodes()[i];
        json jn{{"id", i}, {"op", std::string(op_name(n.op))}};
        json inputs = json::array();
        switch (n.op) {
        case Op::constant: jn["payload"] = n.constant; break;
        case Op::input:
        case Op::sample: jn["payload"] = n.index; break;
        case Op::add:
        case Op::mul:
        case Op::max2: inputs = {n.in[0], n.in[1]}; break;
        default: inputs = {n.in[0]}; break;
        }
        jn["inputs"] = inputs;
        nodes.push_back(std::move(jn));
    }
    json artifacts = json::array();
    for (const Artifact& a : g.artifacts()) artifacts.push_back({{"anchor", a.anchor}, {"radius", a.radius}});
    return {{"input_dim", g.input_dim()},
            {"sample_dim", g.sample_dim()},
            {"nodes", nodes},
            {"output", g.output()},
            {"artifacts", artifacts}};
}

namespace {

std::size_t arity(Op op) {
    switch (op) {
    case Op::constant:
    case Op::input:
    case Op::sample: return 0;
    case Op::add:
    case Op::mul:
    case Op::max2: return 2;
    default: return 1;
    }
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(where + ": field '" + key + "' has the wrong type");
    }
}

} // namespace

ExprGraph graph_from_json(const json& j) {
    if (!j.is_object()) throw InputError("graph document must be an object");
    const auto input_dim = field<std::size_t>(j, "input_dim", "graph");
    const auto sample_dim = field<std::size_t>(j, "sample_dim", "graph");
    if (input_dim == 0) throw InputError("graph: input_dim must be >= 1");
    GraphBuilder b(input_dim, sample_dim);

    if (!j.contains("nodes")) throw InputError("graph: missing field 'nodes'");
    const json& nodes = j.at("nodes");
    if (!nodes.is_array() || nodes.empty()) throw InputError("graph: 'nodes' must be a nonempty array");
    std::map<long long, std::size_t> index_of;
    for (const json& jn : nodes) {
        const auto id = field<long long>(jn, "id", "node");
        const std::string where = "node " + std::to_string(id);
        if (index_of.count(id)) throw InputError(where + ": duplicate id");
        const auto opname = field<std::string>(jn, "op", where);
        const auto op = op_from_name(opname);
        if (!op) throw InputError(where + ": unknown op '" + opname + "'");

        Node n;
        n.op = *op;
        const json inputs = jn.value("inputs", json::array());
        if (!inputs.is_array() || inputs.size() != arity(*op))
            throw InputError(where + ": op '" + opname + "' takes " + std::to_string(arity(*op)) + " inputs");
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            if (!inputs[k].is_number_integer()) throw InputError(where + ": inputs must be node ids");
            const auto ref = inputs[k].get<long long>();
            auto it = index_of.find(ref);
            if (it == index_of.end())
                throw InputError(where + ": input " + std::to_string(ref) + " is not an earlier node");
            n.in[k] = it->second;
        }
        if (*op == Op::constant) n.constant = field<double>(jn, "payload", where);
        if (*op == Op::input || *op == Op::sample) n.index = field<std::size_t>(jn, "payload", where);
        index_of[id] = b.push(n).value;
    }
    const auto out = field<long long>(j, "output", "graph");
    auto it = index_of.find(out);
    if (it == index_of.end()) throw InputError("graph: output id " + std::to_string(out) + " is not a node");

    for (const json& ja : j.value("artifacts", json::array()))
        b.artifact(field<Vec>(ja, "anchor", "artifact"), field<double>(ja, "radius", "artifact"));
    return b.build(NodeId{it->second});
}

// ---------------------------------------------------------------- problems

json problem_to_json(const StochasticProblem& pb) {
    json boxes = json::array();
    for (const Box& b : pb.clarke_critical_set) boxes.push_back({{"lo", b.lo}, {"hi", b.hi}});
    json j{{"name", pb.name},
           {"graph", graph_to_json(*pb.graph)},
           {"support", pb.dist.support()},
           {"probs", pb.dist.probs()},
           {"growth", {{"kappa", pb.growth.kappa}, {"psi", pb.growth.psi_coeffs}}},
           {"f_star", pb.f_star},
           {"box", {{"lo", pb.box.lo}, {"hi", pb.box.hi}}},
           {"clarke_critical_set", boxes}};
    if (pb.has_clarke()) j["clarke_oracle"] = pb.clarke_tag;
    return j;
}

StochasticProblem problem_from_json(const json& j) {
    if (!j.is_object()) throw InputError("problem document must be an object");
    StochasticProblem pb;
    pb.name = j.value("name", std::string("custom"));
    if (!j.contains("graph")) throw InputError("problem: missing field 'graph'");
    pb.graph = std::make_shared<const ExprGraph>(graph_from_json(j.at("graph")));
    auto support = field<std::vector<Vec>>(j, "support", "problem");
    auto probs = field<Vec>(j, "probs", "problem");
    try {
        pb.dist = Distribution::make(std::move(support), std::move(probs));
    } catch (const ValidationError& e) {
        throw InputError(std::string("problem: ") + e.what());
    }
    if (!j.contains("growth")) throw InputError("problem: missing field 'growth'");
    const json& g = j.at("growth");
    pb.growth = GrowthBound{field<Vec>(g, "kappa", "growth"), field<Vec>(g, "psi", "growth")};
    if (!j.contains("f_star") || !j.at("f_star").is_number())
        throw InputError("problem: 'f_star' must be a finite number");
    pb.f_star = j.at("f_star").get<double>();
    pb.clarke_tag = j.value("clarke_oracle", std::string());
    if (j.contains("box")) {
        pb.box = Box{field<Vec>(j.at("box"), "lo", "box"), field<Vec>(j.at("box"), "hi", "box")};
    } else {
        pb.box = Box{Vec(pb.dim(), -1.0), Vec(pb.dim(), 1.0)};
    }
    for (const json& b : j.value("clarke_critical_set", json::array()))
        pb.clarke_critical_set.push_back(Box{field<Vec>(b, "lo", "box"), field<Vec>(b, "hi", "box")});
    pb.validate();
    return pb;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

StochasticProblem resolve_problem(const std::string& name_or_path) {
    for (const auto& n : catalog::names())
        if (n == name_or_path) return catalog::by_name(n);
    if (std::filesystem::exists(name_or_path)) return problem_from_json(read_json_file(name_or_path));
    throw InputError("'" + name_or_path + "' is neither a catalog problem nor a readable file");
}

// -------------------------------------------------------------------- CSV

namespace {

void put_span(std::ostream& os, std::span<const double> v) {
    for (double x : v) os << ',' << format_double(x);
}

void put_names(std::ostream& os, const char* stem, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) os << ',' << stem << i;
}

} // namespace

void write_run_csv(std::ostream& os, const RunRecord& rec) {
    const std::size_t p = rec.dim();
    os << "k,tau,alpha,beta";
    put_names(os, "w", p);
    put_names(os, "y", p);
    os << ",F,E";
    put_names(os, "v", p);
    put_names(os, "V", p);
    put_names(os, "u", p);
    os << ",xi\n";
    for (std::size_t k = 0; k < rec.size(); ++k) {
        os << k << ',' << format_double(rec.tau(k)) << ',' << format_double(rec.alpha(k)) << ','
           << format_double(rec.beta(k));
        put_span(os, rec.w(k));
        put_span(os, rec.y(k));
        os << ',' << format_double(rec.F(k)) << ',' << format_double(rec.E(k));
        put_span(os, rec.v(k));
        put_span(os, rec.V(k));
        put_span(os, rec.u(k));
        os << ',' << rec.xi(k) << '\n';
    }
}

void write_di_csv(std::ostream& os, const DITrajectory& traj) {
    os << "t";
    put_names(os, "w", traj.dim);
    put_names(os, "y", traj.dim);
    os << ",E\n";
    for (std::size_t n = 0; n < traj.size(); ++n) {
        os << format_double(traj.t[n]);
        put_span(os, traj.w[n]);
        put_span(os, traj.y[n]);
        os << ',' << format_double(traj.E[n]) << '\n';
    }
}

void write_occupation_csv(std::ostream& os, const OccupationGrid& grid) {
    for (std::size_t i = 0; i < grid.dim(); ++i) os << 'w' << i << ',';
    for (std::size_t i = 0; i < grid.dim(); ++i) os << 'y' << i << ',';
    os << "weight\n";
    for (const auto& [cell, wt] : grid.weights()) {
        auto [w, y] = grid.center(cell);
        std::string line;
        for (double x : w) line += format_double(x) + ',';
        for (double x : y) line += format_double(x) + ',';
        os << line << format_double(wt) << '\n';
    }
}

// ---------------------------------------------------------------- reports

json summary_json(const RunRecord& rec) {
    json j;
    j["status"] = rec.status == RunStatus::ok ? "ok" : "diverged";
    if (!rec.message.empty()) j["message"] = rec.message;
    j["form"] = rec.form() == Form::A ? "A" : "B";
    j["rows"] = rec.size();
    if (rec.empty()) return j;
    const std::size_t last = rec.size() - 1;
    j["final"] = {{"k", last},
                  {"tau", rec.tau(last)},
                  {"w", Vec(rec.w(last).begin(), rec.w(last).end())},
                  {"y", Vec(rec.y(last).begin(), rec.y(last).end())},
                  {"F", rec.F(last)},
                  {"E", rec.E(last)}};
    const VelocityBound vb = velocity_bound(rec);
    j["max_y_norm"] = vb.max_y;
    j["velocity_bound"] = {{"rhs", vb.rhs}, {"sup_V", vb.sup_V}, {"tail", vb.tail}, {"holds", vb.holds()}};
    j["noise_tail_sup"] = noise_tail_sup(rec);
    double emin = INFINITY, emax = -INFINITY;
    std::size_t increases = 0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        emin = std::min(emin, rec.E(k));
        emax = std::max(emax, rec.E(k));
        if (k > 0 && rec.E(k) > rec.E(k - 1)) ++increases;
    }
    j["energy"] = {{"initial", rec.E(0)}, {"final", rec.E(last)}, {"min", emin}, {"max", emax},
                   {"increases", increases}};
    return j;
}

namespace {

json candidate_json(const CandidateReport& c) {
    json j{{"w", c.w},           {"y", c.y},           {"weight", c.weight},     {"df_gap", c.df_gap},
           {"y_norm", c.y_norm}, {"energy", c.energy}, {"critical", c.critical}, {"artificial", c.artificial}};
    j["clarke_gap"] = c.clarke_gap ? json(*c.clarke_gap) : json(nullptr);
    return j;
}

} // namespace

json report_json(const AccumulationReport& rep) {
    json cands = json::array();
    for (const auto& c : rep.essential) cands.push_back(candidate_json(c));
    json j{{"essential_candidates", cands},
           {"energy_minimal", rep.energy_minimal ? candidate_json(*rep.energy_minimal) : json(nullptr)},
           {"objective_oscillation", rep.oscillation},
           {"essential_criticality", rep.essential_criticality},
           {"minimal_criticality", rep.minimal_criticality},
           {"objective_convergence", rep.objective_convergence},
           {"any_artificial", rep.any_artificial}};
    j["clarke_criticality"] = rep.clarke_criticality ? json(*rep.clarke_criticality) : json(nullptr);
    const ReportParams& p = rep.params;
    j["params"] = {{"eps", p.eps},         {"theta", p.theta},
                   {"burn_in", p.burn_in}, {"gap_tol", p.gap_tol},
                   {"y_tol", p.y_tol},     {"oscillation_tol", p.oscillation_tol},
                   {"tail_fraction", p.tail_fraction}};
    return j;
}

json perturbed_json(const PerturbedReport& rep) {
    json windows = json::array();
    for (const auto& w : rep.windows)
        windows.push_back({{"t_start", w.t_start}, {"t_end", w.t_end}, {"residual", w.residual}});
    return {{"windows", windows}, {"sup_residual", rep.sup_residual}, {"delta_max", rep.delta_max}};
}

json avoidance_json(const AvoidanceStats& stats, const AvoidanceParams& params) {
    json runs = json::array();
    for (const auto& r : stats.runs) {
        json jr{{"seed", r.seed},
                {"w1", r.w1},
                {"w0", r.w0},
                {"hit", r.hit},
                {"first_hit", r.first_hit},
                {"final_w", r.final_w},
                {"final_df_gap", r.final_df_gap},
                {"status", r.status == RunStatus::ok ? "ok" : "diverged"}};
        jr["final_clarke_gap"] = r.final_clarke_gap ? json(*r.final_clarke_gap) : json(nullptr);
        if (!r.message.empty()) jr["message"] = r.message;
        runs.push_back(std::move(jr));
    }
    return {{"n_runs", params.n_runs},
            {"K", params.K},
            {"init_box", {params.box_lo, params.box_hi}},
            {"master_seed", params.master_seed},
            {"gap_tol", params.gap_tol},
            {"hits", stats.hits},
            {"diverged", stats.diverged},
            {"gap_ok", stats.gap_ok},
            {"gap_ok_fraction", stats.gap_ok_fraction},
            {"clarke_gap_quantiles",
             {{"q50", stats.gap_quantiles.at(0)},
              {"q90", stats.gap_quantiles.at(1)},
              {"q95", stats.gap_quantiles.at(2)},
              {"q99", stats.gap_quantiles.at(3)}}},
            {"runs", runs}};
}

} // namespace shb
