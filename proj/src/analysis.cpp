#include "shb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shb/dynamics.hpp"

namespace shb {

OccupationGrid::Cell OccupationGrid::cell_of(std::span<const double> w, std::span<const double> y) const {
    Cell c(2 * dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        c[i] = std::llround(w[i] / eps_);
        c[dim_ + i] = std::llround(y[i] / eps_);
    }
    return c;
}

std::pair<Vec, Vec> OccupationGrid::center(const Cell& c) const {
    Vec w(dim_), y(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        w[i] = static_cast<double>(c[i]) * eps_;
        y[i] = static_cast<double>(c[dim_ + i]) * eps_;
    }
    return {w, y};
}

double OccupationGrid::total() const {
    double s = 0.0;
    for (const auto& [cell, wt] : weights_) s += wt;
    return s;
}

void OccupationGrid::add(std::span<const double> w, std::span<const double> y, double weight) {
    weights_[cell_of(w, y)] += weight;
    if (lo_.empty()) {
        lo_.assign(w.begin(), w.end());
        lo_.insert(lo_.end(), y.begin(), y.end());
        hi_ = lo_;
        return;
    }
    for (std::size_t i = 0; i < dim_; ++i) {
        lo_[i] = std::min(lo_[i], w[i]);
        hi_[i] = std::max(hi_[i], w[i]);
        lo_[dim_ + i] = std::min(lo_[dim_ + i], y[i]);
        hi_[dim_ + i] = std::max(hi_[dim_ + i], y[i]);
    }
}

void OccupationGrid::normalize() {
    const double t = total();
    if (t > 0.0)
        for (auto& [cell, wt] : weights_) wt /= t;
}

OccupationGrid occupation(const RunRecord& rec, double eps, double burn_in) {
    if (!(eps > 0.0)) throw ValidationError("occupation cell side must be > 0");
    if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ValidationError("burn-in fraction must lie in [0, 1)");
    const auto first = static_cast<std::size_t>(std::floor(burn_in * static_cast<double>(rec.size())));
    if (first >= rec.size()) throw ValidationError("no rows left after burn-in");
    OccupationGrid g(rec.dim(), eps);
    for (std::size_t k = first; k < rec.size(); ++k) g.add(rec.w(k), rec.y(k), rec.alpha(k));
    g.normalize();
    return g;
}

std::vector<Candidate> essential_candidates(const OccupationGrid& grid, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("essential threshold must lie in (0, 1]");
    std::vector<std::pair<OccupationGrid::Cell, double>> picked;
    for (const auto& [cell, wt] : grid.weights())
        if (wt >= theta) picked.emplace_back(cell, wt);
    std::stable_sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<Candidate> out;
    for (const auto& [cell, wt] : picked) {
        auto [w, y] = grid.center(cell);
        out.push_back({std::move(w), std::move(y), wt});
    }
    return out;
}

namespace {

// Backward partial sums S_k = sum_{i=k}^{K-1} beta_i u_{i+1}; returns sup over k >= from of ||S_k||.
double tail_sup(const RunRecord& rec, std::size_t from) {
    const std::size_t rows = rec.size();
    if (rows < 2) return 0.0;
    const std::size_t K = rows - 1;
    Vec S(rec.dim(), 0.0);
    double sup = 0.0;
    for (std::size_t i = K; i-- > from;) {
        const auto u = rec.u(i + 1);
        const double b = rec.beta(i);
        for (std::size_t j = 0; j < S.size(); ++j) S[j] += b * u[j];
        sup = std::max(sup, norm(S));
    }
    return sup;
}

} // namespace

double noise_tail_sup(const RunRecord& rec) {
    if (rec.size() < 2) return 0.0;
    return tail_sup(rec, (rec.size() - 1) / 2);
}

VelocityBound velocity_bound(const RunRecord& rec) {
    VelocityBound vb;
    if (rec.empty()) return vb;
    vb.y0 = norm(rec.y(0));
    for (std::size_t k = 0; k < rec.size(); ++k) vb.max_y = std::max(vb.max_y, norm(rec.y(k)));
    for (std::size_t k = 1; k < rec.size(); ++k) vb.sup_V = std::max(vb.sup_V, norm(rec.V(k)));
    vb.tail = tail_sup(rec, 0);
    vb.rhs = std::max(vb.y0 + vb.tail, vb.sup_V + vb.tail) + vb.tail;
    return vb;
}

double objective_oscillation(const RunRecord& rec, double fraction) {
    if (rec.empty()) return 0.0;
    const std::size_t n = rec.size();
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = n - std::min(count, n); k < n; ++k) {
        lo = std::min(lo, rec.F(k));
        hi = std::max(hi, rec.F(k));
    }
    return hi - lo;
}

double quantile(Vec values, double q) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(i);
    return values[i] + frac * (values[i + 1] - values[i]);
}

namespace {

CandidateReport describe(const StochasticProblem& pb, double r, Vec w, Vec y, double weight,
                         const ReportParams& params) {
    CandidateReport c;
    const CriticalityGap gap = criticality_gap(pb, w);
    c.df_gap = gap.conservative;
    c.clarke_gap = gap.clarke;
    c.y_norm = norm(y);
    c.energy = energy(pb, w, y, r);
    c.weight = weight;
    c.critical = c.df_gap <= params.gap_tol && c.y_norm <= params.y_tol;
    c.artificial = c.df_gap <= params.gap_tol && gap.clarke && *gap.clarke > params.gap_tol;
    c.w = std::move(w);
    c.y = std::move(y);
    return c;
}

} // namespace

AccumulationReport theorem_report(const RunRecord& rec, const StochasticProblem& pb, const ReportParams& params) {
    AccumulationReport rep;
    rep.params = params;
    const OccupationGrid grid = occupation(rec, params.eps, params.burn_in);

    for (auto& cand : essential_candidates(grid, params.theta))
        rep.essential.push_back(describe(pb, rec.r(), std::move(cand.w), std::move(cand.y), cand.weight, params));

    rep.essential_criticality = !rep.essential.empty();
    bool clarke_all = true, clarke_known = !rep.essential.empty();
    for (const auto& c : rep.essential) {
        rep.essential_criticality = rep.essential_criticality && c.critical;
        rep.any_artificial = rep.any_artificial || c.artificial;
        if (!c.clarke_gap) clarke_known = false;
        else clarke_all = clarke_all && *c.clarke_gap <= params.gap_tol && c.y_norm <= params.y_tol;
    }
    if (clarke_known) rep.clarke_criticality = clarke_all;

    // cells seen in the tail, weighted as in the occupation grid
    const std::size_t n = rec.size();
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(params.tail_fraction * static_cast<double>(n))));
    std::map<OccupationGrid::Cell, double> tail;
    for (std::size_t k = n - std::min(count, n); k < n; ++k) tail[grid.cell_of(rec.w(k), rec.y(k))] += rec.alpha(k);
    double best_energy = INFINITY;
    OccupationGrid::Cell best_cell;
    for (const auto& [cell, wt] : tail) {
        auto [w, y] = grid.center(cell);
        const double e = energy(pb, w, y, rec.r());
        if (e < best_energy) {
            best_energy = e;
            best_cell = cell;
        }
    }
    if (!best_cell.empty()) {
        auto [w, y] = grid.center(best_cell);
        auto it = grid.weights().find(best_cell);
        const double wt = it == grid.weights().end() ? 0.0 : it->second;
        rep.energy_minimal = describe(pb, rec.r(), std::move(w), std::move(y), wt, params);
        rep.minimal_criticality = rep.energy_minimal->critical;
    }

    rep.oscillation = objective_oscillation(rec, params.tail_fraction);
    rep.objective_convergence = rep.oscillation <= params.oscillation_tol;
    return rep;
}

AvoidanceStats avoidance_experiment(const StochasticProblem& pb, const StepSchedule& sched,
                                    const AvoidanceParams& params, Execution exec) {
    if (!pb.graph->has_nonsmooth_nodes() && pb.graph->artifacts().empty())
        throw ValidationError("avoidance experiment needs a problem with kinks or artifacts");
    if (params.n_runs == 0) throw ValidationError("avoidance experiment needs at least one run");
    if (!(params.box_lo < params.box_hi)) throw ValidationError("initialization box must have lo < hi");

    const std::size_t p = pb.dim();
    AvoidanceStats stats;
    stats.runs.resize(params.n_runs);

    for_each_index(params.n_runs, exec, [&](std::size_t i) {
        AvoidanceRun& out = stats.runs[i];
        out.seed = derive_seed(params.master_seed, i);
        Rng init_rng(derive_seed(out.seed, 1));
        out.w1.resize(p);
        out.w0.resize(p);
        for (auto& c : out.w1) c = init_rng.uniform(params.box_lo, params.box_hi);
        for (auto& c : out.w0) c = init_rng.uniform(params.box_lo, params.box_hi);

        RunRecord rec;
        try {
            rec = run(pb, sched, Init::two_positions(out.w1, out.w0), params.policy, out.seed, params.K, Form::B);
        } catch (const DivergenceError& e) {
            rec = e.partial();
            out.status = RunStatus::diverged;
            out.message = e.what();
        }
        for (std::size_t k = 0; k < rec.size(); ++k) {
            if (hits_nonsmooth_locus(pb, rec.w(k))) {
                out.hit = true;
                out.first_hit = static_cast<std::int64_t>(k);
                break;
            }
        }
        if (!rec.empty()) {
            out.final_w.assign(rec.w(rec.size() - 1).begin(), rec.w(rec.size() - 1).end());
            if (out.status == RunStatus::ok) {
                const CriticalityGap g = criticality_gap(pb, out.final_w);
                out.final_df_gap = g.conservative;
                out.final_clarke_gap = g.clarke;
            }
        }
    });

    Vec gaps;
    for (const auto& r : stats.runs) {
        if (r.hit) ++stats.hits;
        if (r.status == RunStatus::diverged) ++stats.diverged;
        if (r.final_clarke_gap) {
            gaps.push_back(*r.final_clarke_gap);
            if (*r.final_clarke_gap <= params.gap_tol) ++stats.gap_ok;
        }
    }
    stats.gap_ok_fraction = static_cast<double>(stats.gap_ok) / static_cast<double>(params.n_runs);
    for (double q : {0.5, 0.9, 0.95, 0.99}) stats.gap_quantiles.push_back(quantile(gaps, q));
    return stats;
}

AdversarialResult adversarial_run(const StochasticProblem& pb, const StepSchedule& sched, const Vec& anchor,
                                  std::size_t K, std::uint64_t seed, const ReportParams& params) {
    AdversarialResult res;
    res.record = run(pb, sched, Init::position_velocity(anchor, Vec(anchor.size(), 0.0)), SelectionPolicy{}, seed,
                     K, Form::A);
    res.stalled = true;
    for (std::size_t k = 0; k < res.record.size() && res.stalled; ++k) {
        const auto w = res.record.w(k);
        const auto y = res.record.y(k);
        for (std::size_t i = 0; i < anchor.size(); ++i)
            if (w[i] != anchor[i] || y[i] != 0.0) res.stalled = false;
    }
    res.report = theorem_report(res.record, pb, params);
    return res;
}

} // namespace shb
