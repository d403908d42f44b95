#include "shb/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "shb/analysis.hpp"
#include "shb/json_io.hpp"

namespace shb {

namespace {

constexpr std::array<KinkRule, 4> kRules{KinkRule::left, KinkRule::right, KinkRule::zero, KinkRule::midpoint};

CheckResult make(std::string name, const StochasticProblem& pb, double value, double tol, std::string detail = {}) {
    CheckResult r;
    r.name = std::move(name);
    r.problem = pb.name;
    r.value = value;
    r.tolerance = tol;
    r.passed = value <= tol;
    r.detail = std::move(detail);
    return r;
}

std::size_t draw_index(const StochasticProblem& pb, Rng& rng) { return sample(pb, rng); }

Vec uniform_in_box(const StochasticProblem& pb, Rng& rng) {
    Vec w(pb.dim());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(pb.box.lo[i], pb.box.hi[i]);
    return w;
}

bool in_any_box(const std::vector<Box>& boxes, std::span<const double> w, double tol) {
    for (const Box& b : boxes)
        if (b.contains(w, tol)) return true;
    return false;
}

} // namespace

Vec probe_point(const StochasticProblem& pb, Rng& rng) {
    const auto& arts = pb.graph->artifacts();
    if (!arts.empty() && rng.uniform01() < 0.05)
        return arts[static_cast<std::size_t>(rng.next() % arts.size())].anchor;
    Vec w(pb.dim());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double lo = pb.box.lo[i], hi = pb.box.hi[i];
        const double x = rng.uniform(lo, hi);
        w[i] = rng.uniform01() < 0.3 ? std::clamp(std::round(2.0 * x) / 2.0, lo, hi) : x;
    }
    if (w.size() >= 2 && rng.uniform01() < 0.2) w[1] = w[0];
    return w;
}

SelectionPolicy random_policy(const ExprGraph& g, Rng& rng) {
    SelectionPolicy p;
    p.fallback = kRules[rng.next() % kRules.size()];
    for (std::size_t i = 0; i < g.nodes().size(); ++i)
        if (is_nonsmooth(g.nodes()[i].op) && rng.uniform01() < 0.5) p.per_node[i] = kRules[rng.next() % kRules.size()];
    return p;
}

PolyCurve random_curve(const StochasticProblem& pb, Rng& rng, std::size_t segments) {
    PolyCurve c;
    for (std::size_t i = 0; i <= segments; ++i) c.push_back(probe_point(pb, rng));
    return c;
}

CheckResult check_selection_membership(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    std::size_t skipped = 0, kinks = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const Vec w = probe_point(pb, rng);
        const Vec& s = pb.dist.point(draw_index(pb, rng));
        const SelectionPolicy pol = random_policy(*pb.graph, rng);
        const Vec v = pb.graph->backprop(w, s, pol);
        try {
            const ConvexSet S = pb.graph->conservative_set(w, s);
            if (!S.is_point()) ++kinks;
            worst = std::max(worst, S.distance(v));
        } catch (const CapabilityError&) {
            ++skipped;
        }
    }
    std::ostringstream os;
    os << n << " probes, " << kinks << " at kinks, " << skipped << " beyond set capability";
    return make("selection-membership", pb, worst, 1e-9, os.str());
}

CheckResult check_gradient_consistency(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    constexpr double h = 1e-8;
    double worst = 0.0;
    std::size_t used = 0;
    const SelectionPolicy pol;
    for (std::size_t t = 0; t < n; ++t) {
        Vec w = uniform_in_box(pb, rng);
        const Vec& s = pb.dist.point(draw_index(pb, rng));
        if (pb.graph->kink_margin(w, s) <= 1e-6 || pb.graph->artifact_at(w)) continue;
        ++used;
        const Vec g = pb.graph->backprop(w, s, pol);
        const double scale = std::max(1.0, norm(g));
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double keep = w[i];
            w[i] = keep + h;
            const double fp = pb.graph->eval(w, s);
            w[i] = keep - h;
            const double fm = pb.graph->eval(w, s);
            w[i] = keep;
            worst = std::max(worst, std::fabs((fp - fm) / (2.0 * h) - g[i]) / scale);
        }
    }
    return make("gradient-consistency", pb, worst, 1e-5, std::to_string(used) + " kink-free probes");
}

CheckResult check_conservativity(const StochasticProblem& pb, std::size_t curves, std::size_t m,
                                 std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t c = 0; c < curves; ++c) {
        const PolyCurve curve = random_curve(pb, rng, 10);
        const Vec& s = pb.dist.point(draw_index(pb, rng));
        const SelectionPolicy pol = random_policy(*pb.graph, rng);
        const double len = curve_length(curve);
        const double res = path_integral_residual(*pb.graph, s, curve, m, pol);
        if (len > 0.0) worst = std::max(worst, res / len);
    }
    return make("conservativity", pb, worst, 1e-2,
                std::to_string(curves) + " curves, m = " + std::to_string(m) + ", residual / length");
}

CheckResult check_expected_conservativity(const StochasticProblem& pb, std::size_t curves, std::size_t m,
                                          std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t c = 0; c < curves; ++c) {
        const PolyCurve curve = random_curve(pb, rng, 10);
        const SelectionPolicy pol = random_policy(*pb.graph, rng);
        const double len = curve_length(curve);
        const double res = expected_path_integral_residual(pb, curve, m, pol);
        if (len > 0.0) worst = std::max(worst, res / len);
    }
    return make("expected-conservativity", pb, worst, 1e-2,
                std::to_string(curves) + " curves, m = " + std::to_string(m) + ", residual / length");
}

CheckResult check_growth_bound(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    double worst = -INFINITY;
    for (std::size_t t = 0; t < n; ++t) {
        const Vec w = probe_point(pb, rng);
        const std::size_t idx = draw_index(pb, rng);
        const Vec& s = pb.dist.point(idx);
        const double bound = pb.growth.bound(idx, norm(w));
        const Vec v = pb.graph->backprop(w, s, random_policy(*pb.graph, rng));
        worst = std::max(worst, norm(v) - bound * (1.0 + 1e-12));
        try {
            const ConvexSet D = pb.graph->conservative_set(w, s);
            for (const Vec& x : D.vertices())
                worst = std::max(worst, norm(x) - bound * (1.0 + 1e-12));
        } catch (const CapabilityError&) {
        }
    }
    return make("growth-bound", pb, worst, 0.0, "max of ||d|| - kappa psi(||w||)");
}

CheckResult check_artifact_locality(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const Vec anchor = probe_point(pb, rng);
    json doc = graph_to_json(*pb.graph);
    doc["artifacts"].push_back({{"anchor", anchor}, {"radius", 1.5}});
    const ExprGraph aug = graph_from_json(doc);

    std::size_t mismatches = 0, compared = 0;
    for (std::size_t t = 0; t < n; ++t) {
        Vec w = probe_point(pb, rng);
        if (rng.uniform01() < 0.1) w = anchor;
        const Vec& s = pb.dist.point(draw_index(pb, rng));
        try {
            const ConvexSet plain = pb.graph->conservative_set(w, s);
            const ConvexSet with = aug.conservative_set(w, s);
            ++compared;
            if (w == anchor) {
                // the augmented set must contain the ball and the plain set
                bool ok = true;
                for (const Vec& x : ball_vertices(pb.dim(), 1.5)) ok = ok && with.distance(x) <= 1e-9;
                for (const Vec& x : plain.vertices()) ok = ok && with.distance(x) <= 1e-9;
                if (!ok) ++mismatches;
            } else if (plain.vertices() != with.vertices()) {
                ++mismatches;
            }
        } catch (const CapabilityError&) {
        }
    }
    return make("artifact-locality", pb, static_cast<double>(mismatches), 0.0,
                std::to_string(compared) + " sets compared");
}

CheckResult check_aumann_membership(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const Vec w = probe_point(pb, rng);
        const ConvexSet S = expected_conservative_set(pb, w);
        for (KinkRule r : kRules) worst = std::max(worst, S.distance(expected_oracle(pb, w, SelectionPolicy::uniform(r))));
        worst = std::max(worst, S.distance(expected_oracle(pb, w, random_policy(*pb.graph, rng))));
    }
    return make("aumann-membership", pb, worst, 1e-9, std::to_string(n) + " points x 5 policies");
}

CheckResult check_clarke_agreement(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    if (!pb.has_clarke()) return make("clarke-agreement", pb, 0.0, 0.0, "no analytic oracle; skipped");
    Rng rng(seed);
    double worst = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const Vec w = uniform_in_box(pb, rng);
        bool smooth = !pb.graph->artifact_at(w);
        for (const Vec& s : pb.dist.support()) smooth = smooth && pb.graph->kink_margin(w, s) > 0.0;
        if (!smooth) continue;
        ++used;
        const ConvexSet D = expected_conservative_set(pb, w);
        const ConvexSet C = *clarke_subdifferential(pb, w);
        if (!D.is_point() || !C.is_point()) {
            worst = INFINITY;
            continue;
        }
        const Vec& a = D.vertices()[0];
        worst = std::max(worst, distance(a, C.vertices()[0]) / (1.0 + norm(a)));
    }
    return make("clarke-agreement", pb, worst, 1e-9, std::to_string(used) + " kink-free points");
}

CheckResult check_critical_set(const StochasticProblem& pb, double spacing) {
    if (!pb.has_clarke()) return make("critical-set", pb, 0.0, 0.0, "no analytic oracle; skipped");
    const double inv = std::round(1.0 / spacing);
    auto coord = [&](long long i) { return static_cast<double>(i) / inv; };
    std::vector<std::pair<long long, long long>> ranges;
    for (std::size_t d = 0; d < pb.dim(); ++d)
        ranges.emplace_back(static_cast<long long>(std::ceil(pb.box.lo[d] * inv - 1e-9)),
                            static_cast<long long>(std::floor(pb.box.hi[d] * inv + 1e-9)));
    std::size_t mismatches = 0, points = 0, critical = 0;
    std::vector<long long> idx;
    for (const auto& r : ranges) idx.push_back(r.first);
    Vec w(pb.dim());
    while (true) {
        for (std::size_t d = 0; d < w.size(); ++d) w[d] = coord(idx[d]);
        const auto gap = clarke_subdifferential(pb, w)->distance(Vec(pb.dim(), 0.0));
        const bool is_crit = gap <= 1e-6;
        critical += is_crit;
        if (is_crit != in_any_box(pb.clarke_critical_set, w, 1e-12)) ++mismatches;
        ++points;
        std::size_t d = 0;
        while (d < idx.size() && ++idx[d] > ranges[d].second) idx[d] = ranges[d].first, ++d;
        if (d == idx.size()) break;
    }
    return make("critical-set", pb, static_cast<double>(mismatches), 0.0,
                std::to_string(points) + " grid points, " + std::to_string(critical) + " critical");
}

CheckResult check_lower_bound(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    double worst = -INFINITY;
    for (std::size_t t = 0; t < n; ++t) {
        const Vec w = probe_point(pb, rng);
        worst = std::max(worst, pb.f_star - expected_value(pb, w) - 1e-12 * (1.0 + std::fabs(pb.f_star)));
    }
    return make("lower-bound", pb, worst, 0.0, "max of F* - F(w)");
}

CheckResult check_form_equivalence(const StochasticProblem& pb, const StepSchedule& sched, std::size_t seeds,
                                   std::size_t K, std::uint64_t master) {
    double worst = 0.0;
    for (std::size_t i = 0; i < seeds; ++i) {
        const std::uint64_t seed = derive_seed(master, i);
        Rng init(derive_seed(seed, 1));
        const Vec w0 = uniform_in_box(pb, init);
        Vec y0(pb.dim());
        for (auto& c : y0) c = init.uniform(-1.0, 1.0);
        const Init in = Init::position_velocity(w0, y0);
        const RunRecord a = run(pb, sched, in, SelectionPolicy{}, seed, K, Form::A);
        const RunRecord b = run(pb, sched, in, SelectionPolicy{}, seed, K, Form::B);
        double dev = 0.0, wmax = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const Vec wa(a.w(k).begin(), a.w(k).end()), wb(b.w(k).begin(), b.w(k).end());
            dev = std::max(dev, distance(wa, wb));
            wmax = std::max(wmax, norm(wa));
        }
        worst = std::max(worst, dev / (1.0 + wmax));
    }
    return make("form-equivalence", pb, worst, 1e-9,
                std::to_string(seeds) + " seeds x " + std::to_string(K) + " steps, deviation / (1 + max ||w||)");
}

CheckResult check_martingale(const StochasticProblem& pb, std::size_t draws, std::uint64_t seed) {
    Rng rng(seed);
    const Vec w = uniform_in_box(pb, rng);
    const SelectionPolicy pol;
    const Vec V = expected_oracle(pb, w, pol);
    std::vector<Vec> us;
    Vec mean(pb.dim(), 0.0);
    for (std::size_t i = 0; i < draws; ++i) {
        const std::size_t idx = draw_index(pb, rng);
        us.push_back(sub(pb.graph->backprop(w, pb.dist.point(idx), pol), V));
        axpy(1.0 / static_cast<double>(draws), us.back(), mean);
    }
    double var = 0.0;
    for (const Vec& u : us) var += norm2(sub(u, mean));
    var /= static_cast<double>(draws > 1 ? draws - 1 : 1);
    const double bound = 3.0 * std::sqrt(var) / std::sqrt(static_cast<double>(draws));
    return make("martingale-noise", pb, norm(mean), bound, "||mean of u|| vs 3 std / sqrt(n)");
}

CheckResult check_schedule_asymptotics(const StepSchedule& sched, std::size_t K) {
    double worst = 0.0;
    bool ranges_ok = true;
    for (std::size_t k = 0; k <= K; ++k) {
        const double a = sched.alpha(k), b = sched.beta(k);
        ranges_ok = ranges_ok && a > 0.0 && b > 0.0 && b < 1.0;
        if (a / sched.r() < StepSchedule::kBetaCap) worst = std::max(worst, std::fabs(a / b - sched.r()));
    }
    CheckResult r;
    r.name = "schedule-asymptotics";
    r.problem = "-";
    r.value = ranges_ok ? worst : INFINITY;
    r.tolerance = 1e-6;
    r.passed = r.value <= r.tolerance;
    r.detail = std::string(family_name(sched.family())) + ", " + std::to_string(K) + " indices";
    return r;
}

CheckResult check_velocity_bound(const StochasticProblem& pb, const StepSchedule& sched, std::size_t seeds,
                                 std::size_t K, std::uint64_t master) {
    double worst = -INFINITY;
    std::size_t diverged = 0;
    for (std::size_t i = 0; i < seeds; ++i) {
        const std::uint64_t seed = derive_seed(master, i);
        Rng init(derive_seed(seed, 1));
        const Vec w0 = uniform_in_box(pb, init);
        Vec y0(pb.dim());
        for (auto& c : y0) c = init.uniform(-1.0, 1.0);
        try {
            const RunRecord rec =
                run(pb, sched, Init::position_velocity(w0, y0), SelectionPolicy{}, seed, K, Form::A);
            const VelocityBound vb = velocity_bound(rec);
            worst = std::max(worst, vb.max_y - vb.rhs);
        } catch (const DivergenceError&) {
            ++diverged;
        }
    }
    return make("velocity-bound", pb, worst, 1e-6,
                "max of max||y|| - bound; " + std::to_string(diverged) + " divergent runs skipped");
}

CheckResult check_occupation(const StochasticProblem& pb, const StepSchedule& sched, std::size_t K,
                             std::uint64_t seed) {
    Rng init(seed);
    const Vec w0 = uniform_in_box(pb, init);
    const RunRecord rec =
        run(pb, sched, Init::position_velocity(w0, Vec(pb.dim(), 0.0)), SelectionPolicy{}, seed, K, Form::A);
    ReportParams params;
    std::vector<std::string> failures;

    const OccupationGrid grid = occupation(rec, params.eps, params.burn_in);
    if (std::fabs(grid.total() - 1.0) > 1e-12) failures.push_back("normalization");

    const auto first = static_cast<std::size_t>(std::floor(params.burn_in * static_cast<double>(rec.size())));
    const double reach = params.eps * std::sqrt(2.0 * static_cast<double>(pb.dim()));
    const auto coarse = essential_candidates(grid, params.theta);
    for (const Candidate& c : coarse) {
        double best = INFINITY;
        for (std::size_t k = first; k < rec.size(); ++k) {
            Vec z(rec.w(k).begin(), rec.w(k).end());
            z.insert(z.end(), rec.y(k).begin(), rec.y(k).end());
            Vec cz = c.w;
            cz.insert(cz.end(), c.y.begin(), c.y.end());
            best = std::min(best, distance(z, cz));
        }
        if (best > reach) failures.push_back("essential candidate far from iterates");
    }

    const AccumulationReport rep = theorem_report(rec, pb, params);
    if (rep.energy_minimal)
        for (const auto& c : rep.essential)
            if (c.w == rep.energy_minimal->w && c.y == rep.energy_minimal->y &&
                c.critical != rep.energy_minimal->critical)
                failures.push_back("report consistency");

    const auto fine = essential_candidates(occupation(rec, params.eps / 2, params.burn_in), params.theta);
    for (const Candidate& f : fine) {
        double best = INFINITY;
        for (const Candidate& c : coarse)
            best = std::min(best, std::sqrt(norm2(sub(f.w, c.w)) + norm2(sub(f.y, c.y))));
        if (!coarse.empty() && best > params.eps + 1e-12) failures.push_back("refinement moved a candidate");
    }

    std::string detail = std::to_string(coarse.size()) + " essential candidates";
    for (const auto& f : failures) detail += "; " + f;
    return make("occupation", pb, static_cast<double>(failures.size()), 0.0, detail);
}

std::vector<Vec> known_equilibria(const StochasticProblem& pb) {
    std::vector<Vec> cands{Vec(pb.dim(), 0.0)};
    for (const Box& b : pb.clarke_critical_set) {
        cands.push_back(b.lo);
        cands.push_back(b.hi);
        Vec mid(pb.dim());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (b.lo[i] + b.hi[i]);
        cands.push_back(mid);
    }
    std::vector<Vec> out;
    const Vec zero(pb.dim(), 0.0);
    for (const Vec& w : cands) {
        if (std::find(out.begin(), out.end(), w) != out.end()) continue;
        try {
            if (expected_conservative_set(pb, w).distance(zero) == 0.0) out.push_back(w);
        } catch (const CapabilityError&) {
        }
    }
    return out;
}

CheckResult check_equilibrium(const StochasticProblem& pb, const Vec& w, std::size_t steps) {
    constexpr double h = 1e-2;
    const DITrajectory traj =
        di_euler(pb, w, Vec(pb.dim(), 0.0), 1.0, h, static_cast<double>(steps) * h, DiSelector::least_norm);
    std::size_t moved = 0;
    for (std::size_t n = 0; n < traj.size(); ++n) {
        if (traj.w[n] != w) ++moved;
        for (double c : traj.y[n])
            if (c != 0.0) {
                ++moved;
                break;
            }
    }
    std::ostringstream os;
    os << "w = [";
    for (std::size_t i = 0; i < w.size(); ++i) os << (i ? ", " : "") << w[i];
    os << "], " << traj.size() - 1 << " steps";
    return make("equilibrium-stationary", pb, static_cast<double>(moved), 0.0, os.str());
}

HalvingStudy energy_halving_study(const StochasticProblem& pb, const Vec& w0, const Vec& y0, double r,
                                  double h, double T) {
    HalvingStudy hs;
    hs.h_coarse = h;
    hs.violation_coarse = std::fabs(dissipation_defect(di_euler(pb, w0, y0, r, h, T, DiSelector::least_norm)));
    hs.violation_half = std::fabs(dissipation_defect(di_euler(pb, w0, y0, r, h / 2, T, DiSelector::least_norm)));
    hs.C = std::max(hs.violation_coarse / h, hs.violation_half / (h / 2));
    return hs;
}

CheckResult check_energy_window(const StochasticProblem& pb, const Vec& w0, const Vec& y0, double r, double h,
                                double T, double C) {
    const DITrajectory traj = di_euler(pb, w0, y0, r, h, T, DiSelector::least_norm);
    const double excess = dissipation_window_excess(traj, C * h);
    return make("energy-window", pb, excess, 1e-12,
                "h = " + format_double(h) + ", C = " + format_double(C));
}

CheckResult check_fattening_monotone(const StochasticProblem& pb, std::size_t n, std::uint64_t seed) {
    if (pb.dim() > 2) return make("fattening-monotone", pb, 0.0, 0.0, "p > 2; skipped");
    Rng rng(seed);
    const double res = pb.dim() == 1 ? 0.01 : 0.02;
    std::size_t violations = 0, yes = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const Vec z = probe_point(pb, rng);
        Vec y(pb.dim());
        for (auto& c : y) c = rng.uniform(-2.0, 2.0);
        double d1 = rng.uniform(0.0, 0.3), d2 = rng.uniform(0.0, 0.3);
        if (d1 > d2) std::swap(d1, d2);
        const FattenedResult a = fattened_contains(pb, d1, z, y, res);
        const FattenedResult b = fattened_contains(pb, d2, z, y, res);
        if (a.verdict == Verdict::yes) {
            ++yes;
            if (b.verdict != Verdict::yes) ++violations;
            // certificate must be genuine
            if (distance(*a.z_cert, z) > d1 + 1e-12 || distance(*a.y_cert, y) > d1 + 1e-12) ++violations;
        }
    }
    return make("fattening-monotone", pb, static_cast<double>(violations), 0.0,
                std::to_string(n) + " probes, " + std::to_string(yes) + " members at the smaller radius");
}

CheckResult check_shadowing(const StochasticProblem& pb, const StepSchedule& sched, std::uint64_t seed) {
    const Vec w0(pb.dim(), 3.0);
    const RunRecord rec =
        run(pb, sched, Init::position_velocity(w0, Vec(pb.dim(), 0.0)), SelectionPolicy{}, seed, 100000, Form::A);
    const InterpolatedPath path = interpolate(rec);
    Vec eps;
    for (std::size_t k : {100u, 1000u, 10000u}) eps.push_back(shadowing_distance(path, pb, sched.r(), k, 5.0, 1e-3));
    const bool mono = eps[0] >= eps[1] && eps[1] >= eps[2] && eps[2] < eps[0];
    std::ostringstream os;
    os << "eps(1e2, 1e3, 1e4) = " << eps[0] << ", " << eps[1] << ", " << eps[2];
    return make("shadowing", pb, mono ? 0.0 : 1.0, 0.0, os.str());
}

std::pair<Vec, Vec> di_start(const StochasticProblem& pb) {
    const std::size_t p = pb.dim();
    if (pb.name == "abs1d") return {{1.0}, {0.0}};
    if (pb.name == "flat1d") return {{2.5}, {0.0}};
    if (pb.name == "artifact1d") return {{2.0}, {0.0}};
    if (pb.name == "ell1") return {{2.5, -2.0}, {0.0, 0.0}};
    if (pb.name == "ridge2d") return {{1.5, 0.5}, {0.0, 0.0}};
    Vec w(p);
    for (std::size_t i = 0; i < p; ++i) w[i] = 0.5 * (pb.box.lo[i] + pb.box.hi[i]) + 0.25 * (pb.box.hi[i] - pb.box.lo[i]);
    return {w, Vec(p, 0.0)};
}

std::vector<CheckResult> run_invariant_suite(const SuiteOptions& opts) {
    auto count = [&](double n) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * opts.scale))); };
    const StepSchedule sched = StepSchedule::make(ScheduleFamily::power, 1.0, 0.75, 1.0);
    std::vector<CheckResult> out;
    std::uint64_t salt = 0;
    auto next = [&] { return derive_seed(opts.seed, salt++); };

    for (const std::string& name : catalog::names()) {
        const StochasticProblem pb = catalog::by_name(name);
        out.push_back(check_selection_membership(pb, count(1e4), next()));
        out.push_back(check_gradient_consistency(pb, count(1e4), next()));
        out.push_back(check_conservativity(pb, count(100), 10000, next()));
        out.push_back(check_expected_conservativity(pb, count(20), 1000, next()));
        out.push_back(check_growth_bound(pb, count(1e4), next()));
        out.push_back(check_artifact_locality(pb, count(1e3), next()));
        out.push_back(check_aumann_membership(pb, count(1e3), next()));
        out.push_back(check_clarke_agreement(pb, count(1e3), next()));
        out.push_back(check_critical_set(pb, 1e-2));
        out.push_back(check_lower_bound(pb, count(1e5), next()));
        out.push_back(check_form_equivalence(pb, sched, count(20), 10000, next()));
        out.push_back(check_martingale(pb, 1000, next()));
        out.push_back(check_velocity_bound(pb, sched, count(5), 10000, next()));
        out.push_back(check_occupation(pb, sched, 20000, next()));
        for (const Vec& w : known_equilibria(pb)) out.push_back(check_equilibrium(pb, w, 10000));
        const auto [w0, y0] = di_start(pb);
        const HalvingStudy hs = energy_halving_study(pb, w0, y0, 1.0, 1e-2, 20.0);
        out.push_back(check_energy_window(pb, w0, y0, 1.0, 1e-2, 20.0, hs.C));
        out.push_back(check_fattening_monotone(pb, count(100), next()));
    }
    out.push_back(check_schedule_asymptotics(sched, 100000));
    out.push_back(check_schedule_asymptotics(StepSchedule::make(ScheduleFamily::power, 0.1, 0.6, 2.0), 100000));
    out.push_back(check_schedule_asymptotics(StepSchedule::make(ScheduleFamily::power, 3.0, 1.0, 0.5), 100000));
    out.push_back(check_schedule_asymptotics(StepSchedule::make(ScheduleFamily::constant_ratio_power, 3.0, 0.8, 0.5), 100000));
    out.push_back(check_shadowing(catalog::abs1d(), sched, next()));
    out.push_back(check_shadowing(catalog::flat1d(), sched, next()));
    return out;
}

} // namespace shb
