#include "shb/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "shb/verification.hpp"

namespace fs = std::filesystem;

namespace shb {

json default_config() {
    return {
        {"kind", "run"},
        {"problem", "abs1d"},
        {"schedule", {{"family", "power"}, {"a", 1.0}, {"gamma", 0.75}, {"r", 1.0}}},
        {"form", "A"},
        {"policy", "zero"},
        {"init", {{"mode", "uniform-box"}, {"lo", nullptr}, {"hi", nullptr}}},
        {"seed", 1},
        {"K", 100000},
        {"n_seeds", 1},
        {"analysis",
         {{"eps", 0.05},
          {"theta", 0.05},
          {"burn_in", 0.2},
          {"gap_tol", 0.05},
          {"y_tol", 0.05},
          {"oscillation_tol", 0.02},
          {"tail_fraction", 0.1},
          {"noise_tail_tol", 0.05}}},
        {"di",
         {{"h", 1e-3}, {"T", 20.0}, {"selector", "least-norm"}, {"w0", nullptr}, {"y0", nullptr}, {"window", 5.0}}},
        {"avoidance",
         {{"n_runs", 1000}, {"K", 10000}, {"lo", -2.0}, {"hi", 2.0}, {"gap_tol", 0.1}, {"adversarial_anchor", nullptr}}},
        {"check", {{"scale", 1.0}}},
        {"execution", "parallel"},
        {"write_runs", false},
        {"out", "out"},
    };
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ValidationError("override '" + std::string(assignment) + "' is not of the form key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ValidationError("override key '" + key + "' has an empty component");
        if (!node->is_object()) throw ValidationError("override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

namespace {

void merge_defaults(json& doc, const json& defaults, const std::string& prefix) {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string path = prefix + it.key();
        if (!defaults.contains(it.key())) {
            if (prefix.rfind("init.", 0) == 0 || prefix == "init.") continue;
            throw ValidationError("unknown config key '" + path + "'");
        }
    }
    for (auto it = defaults.begin(); it != defaults.end(); ++it) {
        if (!doc.contains(it.key())) {
            doc[it.key()] = it.value();
        } else if (it.value().is_object() && doc[it.key()].is_object() && it.key() != "init") {
            merge_defaults(doc[it.key()], it.value(), prefix + it.key() + ".");
        }
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config field '" + where + key + "' is missing or has the wrong type");
    }
}

std::optional<Vec> opt_vec(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return get<Vec>(j, key, where);
}

double positive(double x, const std::string& name) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError(name + " must be a positive finite number");
    return x;
}

} // namespace

ExperimentConfig parse_config(const json& input) {
    if (!input.is_object()) throw ValidationError("config must be a JSON object");
    json doc = input;
    merge_defaults(doc, default_config(), "");

    ExperimentConfig c;
    c.resolved = doc;
    c.kind = get<std::string>(doc, "kind", "");
    if (c.kind != "run" && c.kind != "sweep" && c.kind != "avoidance" && c.kind != "di" && c.kind != "check")
        throw ValidationError("unknown experiment kind '" + c.kind + "'");
    c.problem = get<std::string>(doc, "problem", "");

    const json& s = doc.at("schedule");
    const auto fam = family_from_name(get<std::string>(s, "family", "schedule."));
    if (!fam) throw ValidationError("schedule.family must be 'power' or 'constant-ratio-power'");
    c.family = *fam;
    c.a = get<double>(s, "a", "schedule.");
    c.gamma = get<double>(s, "gamma", "schedule.");
    c.r = get<double>(s, "r", "schedule.");
    (void)c.schedule();   // validates the step-size conditions up front

    const auto form = get<std::string>(doc, "form", "");
    if (form == "A") c.form = Form::A;
    else if (form == "B") c.form = Form::B;
    else throw ValidationError("form must be 'A' or 'B'");

    const auto rule = rule_from_name(get<std::string>(doc, "policy", ""));
    if (!rule) throw ValidationError("policy must be one of left, right, zero, midpoint");
    c.policy = *rule;

    const json& in = doc.at("init");
    const auto mode = in.value("mode", std::string("uniform-box"));
    if (mode == "fixed") {
        c.init.mode = InitSpec::Mode::fixed;
        c.init.w0 = get<Vec>(in, "w0", "init.");
        if (auto w1 = opt_vec(in, "w1", "init.")) c.init.w1 = *w1;
        if (auto y0 = opt_vec(in, "y0", "init.")) c.init.y0 = *y0;
        if (!c.init.w1.empty() && !c.init.y0.empty())
            throw ValidationError("init: give either y0 or w1, not both");
    } else if (mode == "uniform-box") {
        c.init.mode = InitSpec::Mode::uniform_box;
        if (in.contains("lo") && !in.at("lo").is_null()) c.init.lo = get<double>(in, "lo", "init.");
        if (in.contains("hi") && !in.at("hi").is_null()) c.init.hi = get<double>(in, "hi", "init.");
        if (c.init.lo && c.init.hi && !(*c.init.lo < *c.init.hi)) throw ValidationError("init: need lo < hi");
    } else {
        throw ValidationError("init.mode must be 'fixed' or 'uniform-box'");
    }

    c.seed = get<std::uint64_t>(doc, "seed", "");
    c.K = get<std::size_t>(doc, "K", "");
    if (c.K == 0) throw ValidationError("K must be >= 1");
    c.n_seeds = get<std::size_t>(doc, "n_seeds", "");
    if (c.n_seeds == 0) throw ValidationError("n_seeds must be >= 1");

    const json& an = doc.at("analysis");
    c.analysis.eps = positive(get<double>(an, "eps", "analysis."), "analysis.eps");
    c.analysis.theta = get<double>(an, "theta", "analysis.");
    if (!(c.analysis.theta > 0.0 && c.analysis.theta <= 1.0)) throw ValidationError("analysis.theta must lie in (0, 1]");
    c.analysis.burn_in = get<double>(an, "burn_in", "analysis.");
    if (!(c.analysis.burn_in >= 0.0 && c.analysis.burn_in < 1.0))
        throw ValidationError("analysis.burn_in must lie in [0, 1)");
    c.analysis.gap_tol = positive(get<double>(an, "gap_tol", "analysis."), "analysis.gap_tol");
    c.analysis.y_tol = positive(get<double>(an, "y_tol", "analysis."), "analysis.y_tol");
    c.analysis.oscillation_tol = positive(get<double>(an, "oscillation_tol", "analysis."), "analysis.oscillation_tol");
    c.analysis.tail_fraction = get<double>(an, "tail_fraction", "analysis.");
    if (!(c.analysis.tail_fraction > 0.0 && c.analysis.tail_fraction <= 1.0))
        throw ValidationError("analysis.tail_fraction must lie in (0, 1]");
    c.noise_tail_tol = positive(get<double>(an, "noise_tail_tol", "analysis."), "analysis.noise_tail_tol");

    const json& di = doc.at("di");
    c.di.h = positive(get<double>(di, "h", "di."), "di.h");
    c.di.T = get<double>(di, "T", "di.");
    if (!(c.di.T >= c.di.h)) throw ValidationError("di.T must be >= di.h");
    const auto sel = get<std::string>(di, "selector", "di.");
    if (sel == "least-norm") c.di.selector = DiSelector::least_norm;
    else if (sel == "policy-fixed") c.di.selector = DiSelector::policy_fixed;
    else throw ValidationError("di.selector must be 'least-norm' or 'policy-fixed'");
    c.di.w0 = opt_vec(di, "w0", "di.");
    c.di.y0 = opt_vec(di, "y0", "di.");
    c.di.window = positive(get<double>(di, "window", "di."), "di.window");

    const json& av = doc.at("avoidance");
    c.avoidance.n_runs = get<std::size_t>(av, "n_runs", "avoidance.");
    if (c.avoidance.n_runs == 0) throw ValidationError("avoidance.n_runs must be >= 1");
    c.avoidance.K = get<std::size_t>(av, "K", "avoidance.");
    if (c.avoidance.K == 0) throw ValidationError("avoidance.K must be >= 1");
    c.avoidance.box_lo = get<double>(av, "lo", "avoidance.");
    c.avoidance.box_hi = get<double>(av, "hi", "avoidance.");
    if (!(c.avoidance.box_lo < c.avoidance.box_hi)) throw ValidationError("avoidance: need lo < hi");
    c.avoidance.gap_tol = positive(get<double>(av, "gap_tol", "avoidance."), "avoidance.gap_tol");
    c.avoidance.master_seed = c.seed;
    c.avoidance.policy = SelectionPolicy::uniform(c.policy);
    c.adversarial_anchor = opt_vec(av, "adversarial_anchor", "avoidance.");

    c.check_scale = positive(get<double>(doc.at("check"), "scale", "check."), "check.scale");
    const auto exec = get<std::string>(doc, "execution", "");
    if (exec == "parallel") c.execution = Execution::parallel;
    else if (exec == "serial") c.execution = Execution::serial;
    else throw ValidationError("execution must be 'serial' or 'parallel'");
    c.write_runs = get<bool>(doc, "write_runs", "");
    c.out = get<std::string>(doc, "out", "");
    return c;
}

Init make_init(const ExperimentConfig& cfg, const StochasticProblem& pb, std::uint64_t run_seed) {
    const std::size_t p = pb.dim();
    if (cfg.init.mode == InitSpec::Mode::fixed) {
        if (cfg.init.w0.size() != p) throw ValidationError("init.w0 has dimension " + std::to_string(cfg.init.w0.size()) +
                                                           ", problem has " + std::to_string(p));
        if (!cfg.init.w1.empty()) {
            if (cfg.init.w1.size() != p) throw ValidationError("init.w1 has the wrong dimension");
            return Init::two_positions(cfg.init.w1, cfg.init.w0);
        }
        Vec y0 = cfg.init.y0.empty() ? Vec(p, 0.0) : cfg.init.y0;
        if (y0.size() != p) throw ValidationError("init.y0 has the wrong dimension");
        return Init::position_velocity(cfg.init.w0, y0);
    }
    Rng rng(derive_seed(run_seed, 1));
    Vec w0(p), w1(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double lo = cfg.init.lo.value_or(pb.box.lo[i]);
        const double hi = cfg.init.hi.value_or(pb.box.hi[i]);
        w0[i] = rng.uniform(lo, hi);
    }
    if (cfg.form == Form::A) return Init::position_velocity(w0, Vec(p, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        const double lo = cfg.init.lo.value_or(pb.box.lo[i]);
        const double hi = cfg.init.hi.value_or(pb.box.hi[i]);
        w1[i] = rng.uniform(lo, hi);
    }
    return Init::two_positions(w1, w0);
}

SeedSummary summarize_seed(const ExperimentConfig& cfg, const StochasticProblem& pb, std::size_t index,
                           RunRecord* keep, AccumulationReport* report) {
    SeedSummary s;
    s.index = index;
    s.seed = derive_seed(cfg.seed, index);
    RunRecord rec;
    try {
        rec = run(pb, cfg.schedule(), make_init(cfg, pb, s.seed), SelectionPolicy::uniform(cfg.policy), s.seed,
                  cfg.K, cfg.form);
    } catch (const DivergenceError& e) {
        s.status = RunStatus::diverged;
        s.message = e.what();
        if (keep) *keep = e.partial();
        return s;
    }
    const std::size_t last = rec.size() - 1;
    const CriticalityGap g = criticality_gap(pb, rec.w(last));
    s.final_df_gap = g.conservative;
    s.final_clarke_gap = g.clarke;
    s.final_y_norm = norm(rec.y(last));
    s.noise_tail_sup = noise_tail_sup(rec);
    s.velocity_bound = velocity_bound(rec).holds();
    AccumulationReport rep = theorem_report(rec, pb, cfg.analysis);
    s.oscillation = rep.oscillation;
    s.essential_criticality = rep.essential_criticality;
    s.candidates = rep.essential.size();
    if (report) *report = std::move(rep);
    if (keep) *keep = std::move(rec);
    return s;
}

namespace {

json seed_json(const SeedSummary& s) {
    json j{{"index", s.index},
           {"seed", s.seed},
           {"status", s.status == RunStatus::ok ? "ok" : "diverged"},
           {"final_df_gap", s.final_df_gap},
           {"final_y_norm", s.final_y_norm},
           {"oscillation", s.oscillation},
           {"noise_tail_sup", s.noise_tail_sup},
           {"essential_criticality", s.essential_criticality},
           {"velocity_bound", s.velocity_bound},
           {"essential_candidates", s.candidates}};
    j["final_clarke_gap"] = s.final_clarke_gap ? json(*s.final_clarke_gap) : json(nullptr);
    if (!s.message.empty()) j["message"] = s.message;
    return j;
}

json quantile_block(const Vec& v) {
    auto q = [&](double p) { return v.empty() ? json(nullptr) : json(quantile(v, p)); };
    return {{"count", v.size()}, {"q50", q(0.5)}, {"q90", q(0.9)}, {"q95", q(0.95)}, {"q99", q(0.99)}, {"max", q(1.0)}};
}

std::string seed_dir_name(std::size_t i) {
    std::ostringstream os;
    os << "seed_" << std::setw(4) << std::setfill('0') << i;
    return os.str();
}

class Manifest {
public:
    Manifest(const ExperimentConfig& cfg, std::string command_line) : cfg_(cfg) {
        doc_ = {{"tool", "shb"},
                {"version", SHB_VERSION},
                {"kind", cfg.kind},
                {"command_line", std::move(command_line)},
                {"config", cfg.resolved},
                {"master_seed", cfg.seed},
                {"seed_derivation", "splitmix64(master + (index + 1) * 0x9e3779b97f4a7c15)"},
                {"files", json::array()},
                {"status", "running"}};
#ifdef __VERSION__
        doc_["compiler"] = __VERSION__;
#endif
    }
    void file(const std::string& name) { doc_["files"].push_back(name); }
    void set(const std::string& key, json value) { doc_[key] = std::move(value); }
    void write(const std::string& status) {
        doc_["status"] = status;
        write_json_file((fs::path(cfg_.out) / "manifest.json").string(), doc_);
    }

private:
    const ExperimentConfig& cfg_;
    json doc_;
};

template <class Writer>
void write_csv(const fs::path& path, Writer&& w) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    w(out);
}

} // namespace

SweepResult sweep(const ExperimentConfig& cfg, const StochasticProblem& pb, Execution exec) {
    SweepResult res;
    res.seeds.resize(cfg.n_seeds);
    const fs::path root = fs::path(cfg.out) / "seeds";
    fs::create_directories(root);
    for (std::size_t i = 0; i < cfg.n_seeds; ++i) fs::create_directories(root / seed_dir_name(i));

    for_each_index(cfg.n_seeds, exec, [&](std::size_t i) {
        RunRecord rec;
        AccumulationReport rep;
        SeedSummary s = summarize_seed(cfg, pb, i, &rec, &rep);
        const fs::path dir = root / seed_dir_name(i);
        json summary = summary_json(rec);
        summary["seed"] = s.seed;
        write_json_file((dir / "summary.json").string(), summary);
        if (s.status == RunStatus::ok) write_json_file((dir / "report.json").string(), report_json(rep));
        if (cfg.write_runs) write_csv(dir / "run.csv", [&](std::ostream& os) { write_run_csv(os, rec); });
        res.seeds[i] = std::move(s);
    });

    Vec clarke, ynorm, osc, tail;
    std::size_t ok = 0, diverged = 0, essential = 0, noise_ok = 0, osc_ok = 0;
    for (const auto& s : res.seeds) {
        if (s.status != RunStatus::ok) {
            ++diverged;
            continue;
        }
        ++ok;
        if (s.final_clarke_gap) clarke.push_back(*s.final_clarke_gap);
        ynorm.push_back(s.final_y_norm);
        osc.push_back(s.oscillation);
        tail.push_back(s.noise_tail_sup);
        essential += s.essential_criticality;
        noise_ok += s.noise_tail_sup <= cfg.noise_tail_tol;
        osc_ok += s.oscillation <= cfg.analysis.oscillation_tol;
    }
    res.aggregate = {{"n_seeds", cfg.n_seeds},
                     {"convergent", ok},
                     {"diverged", diverged},
                     {"final_clarke_gap", quantile_block(clarke)},
                     {"final_y_norm", quantile_block(ynorm)},
                     {"objective_oscillation", quantile_block(osc)},
                     {"noise_tail_sup", quantile_block(tail)},
                     {"essential_criticality_count", essential},
                     {"oscillation_ok_count", osc_ok},
                     {"noise_tail_ok_count", noise_ok},
                     {"tolerances",
                      {{"gap_tol", cfg.analysis.gap_tol},
                       {"y_tol", cfg.analysis.y_tol},
                       {"oscillation_tol", cfg.analysis.oscillation_tol},
                       {"noise_tail_tol", cfg.noise_tail_tol}}}};
    return res;
}

namespace {

ExitCode do_run(const ExperimentConfig& cfg, const StochasticProblem& pb, Manifest& man, std::ostream& log) {
    const fs::path out(cfg.out);
    RunRecord rec;
    AccumulationReport rep;
    const SeedSummary s = summarize_seed(cfg, pb, 0, &rec, &rep);
    man.set("seeds", json::array({s.seed}));

    write_csv(out / "run.csv", [&](std::ostream& os) { write_run_csv(os, rec); });
    man.file("run.csv");
    json summary = summary_json(rec);
    summary["seed"] = s.seed;
    summary["noise_tail_ok"] = s.noise_tail_sup <= cfg.noise_tail_tol;
    write_json_file((out / "summary.json").string(), summary);
    man.file("summary.json");
    if (s.status != RunStatus::ok) {
        log << "diverged: " << s.message << '\n';
        man.write("diverged");
        return ExitCode::divergence;
    }
    write_json_file((out / "report.json").string(), report_json(rep));
    man.file("report.json");
    write_csv(out / "occupation.csv",
              [&](std::ostream& os) { write_occupation_csv(os, occupation(rec, cfg.analysis.eps, cfg.analysis.burn_in)); });
    man.file("occupation.csv");
    log << "run " << pb.name << ": " << rec.size() - 1 << " steps, essential candidates " << rep.essential.size()
        << ", oscillation " << rep.oscillation << ", noise tail " << s.noise_tail_sup << '\n';
    man.write("ok");
    return ExitCode::ok;
}

ExitCode do_sweep(const ExperimentConfig& cfg, const StochasticProblem& pb, Manifest& man, std::ostream& log) {
    const fs::path out(cfg.out);
    const SweepResult res = sweep(cfg, pb, cfg.execution);
    json seeds = json::array(), rows = json::array();
    for (const auto& s : res.seeds) {
        seeds.push_back(s.seed);
        rows.push_back(seed_json(s));
        man.file("seeds/" + seed_dir_name(s.index) + "/summary.json");
    }
    man.set("seeds", seeds);
    json agg = res.aggregate;
    agg["per_seed"] = rows;
    write_json_file((out / "aggregate.json").string(), agg);
    man.file("aggregate.json");
    write_csv(out / "aggregate.csv", [&](std::ostream& os) {
        os << "index,seed,status,final_clarke_gap,final_df_gap,final_y_norm,oscillation,noise_tail_sup,"
              "essential_criticality\n";
        for (const auto& s : res.seeds)
            os << s.index << ',' << s.seed << ',' << (s.status == RunStatus::ok ? "ok" : "diverged") << ','
               << (s.final_clarke_gap ? format_double(*s.final_clarke_gap) : "") << ','
               << format_double(s.final_df_gap) << ',' << format_double(s.final_y_norm) << ','
               << format_double(s.oscillation) << ',' << format_double(s.noise_tail_sup) << ','
               << (s.essential_criticality ? 1 : 0) << '\n';
    });
    man.file("aggregate.csv");
    log << "sweep " << pb.name << ": " << res.aggregate["convergent"] << " convergent, " << res.aggregate["diverged"]
        << " diverged\n";
    man.write("ok");
    return ExitCode::ok;
}

ExitCode do_avoidance(const ExperimentConfig& cfg, const StochasticProblem& pb, Manifest& man, std::ostream& log) {
    const fs::path out(cfg.out);
    const AvoidanceStats stats = avoidance_experiment(pb, cfg.schedule(), cfg.avoidance, cfg.execution);
    json doc = avoidance_json(stats, cfg.avoidance);

    // adversarial start: zero-noise copy of the problem placed exactly on the anchor
    Vec anchor = cfg.adversarial_anchor.value_or(
        pb.graph->artifacts().empty() ? Vec(pb.dim(), 0.0) : pb.graph->artifacts().front().anchor);
    if (anchor.size() != pb.dim()) throw ValidationError("avoidance.adversarial_anchor has the wrong dimension");
    StochasticProblem adv = pb;
    Vec mean(pb.dist.sample_dim(), 0.0);
    for (std::size_t i = 0; i < pb.dist.size(); ++i) axpy(pb.dist.prob(i), pb.dist.point(i), mean);
    adv.dist = Distribution::point_mass(mean);
    double kmax = 0.0;
    for (double k : pb.growth.kappa) kmax = std::max(kmax, k);
    adv.growth.kappa = {kmax};
    const std::uint64_t adv_seed = derive_seed(cfg.seed, cfg.avoidance.n_runs);
    ReportParams params = cfg.analysis;
    const AdversarialResult ar = adversarial_run(adv, cfg.schedule(), anchor, cfg.avoidance.K, adv_seed, params);
    const CriticalityGap g0 = criticality_gap(adv, anchor);
    doc["adversarial"] = {{"anchor", anchor},
                          {"sample", mean},
                          {"seed", adv_seed},
                          {"stalled", ar.stalled},
                          {"df_gap", g0.conservative},
                          {"clarke_gap", g0.clarke ? json(*g0.clarke) : json(nullptr)},
                          {"report", report_json(ar.report)}};
    write_json_file((out / "avoidance.json").string(), doc);
    man.file("avoidance.json");
    json seeds = json::array();
    for (const auto& r : stats.runs) seeds.push_back(r.seed);
    man.set("seeds", seeds);
    log << "avoidance " << pb.name << ": " << stats.hits << " exact hits in " << cfg.avoidance.n_runs
        << " runs, Clarke gap <= " << cfg.avoidance.gap_tol << " in " << stats.gap_ok << " runs; adversarial "
        << (ar.stalled ? "stalled" : "moved") << '\n';
    man.write("ok");
    return ExitCode::ok;
}

ExitCode do_di(const ExperimentConfig& cfg, const StochasticProblem& pb, Manifest& man, std::ostream& log) {
    const fs::path out(cfg.out);
    auto [w0, y0] = di_start(pb);
    if (cfg.di.w0) w0 = *cfg.di.w0;
    if (cfg.di.y0) y0 = *cfg.di.y0;
    if (w0.size() != pb.dim() || y0.size() != pb.dim()) throw ValidationError("di.w0 / di.y0 have the wrong dimension");
    const DITrajectory traj =
        di_euler(pb, w0, y0, cfg.r, cfg.di.h, cfg.di.T, cfg.di.selector, SelectionPolicy::uniform(cfg.policy));
    write_csv(out / "di.csv", [&](std::ostream& os) { write_di_csv(os, traj); });
    man.file("di.csv");
    json energy{{"h", traj.h}, {"T", traj.T}, {"r", traj.r}, {"E0", traj.E.front()}, {"ET", traj.E.back()},
                {"dissipation_defect", dissipation_defect(traj)}};
    write_json_file((out / "energy.json").string(), energy);
    man.file("energy.json");
    if (pb.dim() == 1) {
        const PerturbedReport rep = perturbed_solution_check(interpolate(traj), pb, traj.r, Vec{traj.h}, cfg.di.window);
        write_json_file((out / "perturbed.json").string(), perturbed_json(rep));
        man.file("perturbed.json");
    } else {
        man.set("perturbed", "not computed: the perturbed-solution check supports 1D problems only");
    }
    log << "di " << pb.name << ": " << traj.size() - 1 << " steps, E " << traj.E.front() << " -> " << traj.E.back()
        << '\n';
    man.write("ok");
    return ExitCode::ok;
}

ExitCode do_check(const ExperimentConfig& cfg, Manifest& man, std::ostream& log) {
    const fs::path out(cfg.out);
    SuiteOptions opts;
    opts.scale = cfg.check_scale;
    opts.seed = cfg.seed;
    const auto results = run_invariant_suite(opts);
    json arr = json::array();
    std::size_t failed = 0;
    for (const auto& r : results) {
        failed += !r.passed;
        arr.push_back({{"name", r.name},
                       {"problem", r.problem},
                       {"passed", r.passed},
                       {"value", r.value},
                       {"tolerance", r.tolerance},
                       {"detail", r.detail}});
        log << (r.passed ? "PASS " : "FAIL ") << r.name << " [" << r.problem << "] value " << r.value << " tol "
            << r.tolerance << " (" << r.detail << ")\n";
    }
    write_json_file((out / "check.json").string(), {{"checks", arr}, {"failed", failed}, {"total", results.size()}});
    man.file("check.json");
    log << results.size() - failed << "/" << results.size() << " checks passed\n";
    man.write(failed == 0 ? "ok" : "failed");
    return failed == 0 ? ExitCode::ok : ExitCode::failure;
}

} // namespace

ExitCode run_experiment(const ExperimentConfig& cfg, const std::string& command_line, std::ostream& log) {
    fs::create_directories(cfg.out);
    Manifest man(cfg, command_line);
    try {
        if (cfg.kind == "check") return do_check(cfg, man, log);
        const StochasticProblem pb = resolve_problem(cfg.problem);
        man.set("problem", problem_to_json(pb));
        if (cfg.kind == "run") return do_run(cfg, pb, man, log);
        if (cfg.kind == "sweep") return do_sweep(cfg, pb, man, log);
        if (cfg.kind == "avoidance") return do_avoidance(cfg, pb, man, log);
        if (cfg.kind == "di") return do_di(cfg, pb, man, log);
    } catch (const Error& e) {
        man.set("error", e.what());
        man.write("error");
        throw;
    }
    throw ValidationError("unknown experiment kind '" + cfg.kind + "'");
}

} // namespace shb
