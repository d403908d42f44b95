#include "shb/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shb {

double energy(const StochasticProblem& pb, std::span<const double> w, std::span<const double> y, double r) {
    return expected_value(pb, w) + 0.5 * r * norm2(y);
}

DITrajectory di_euler(const StochasticProblem& pb, const Vec& w0, const Vec& y0, double r, double h, double T,
                      DiSelector selector, const SelectionPolicy& policy) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("di_euler needs a step h > 0");
    if (!(T >= h) || !std::isfinite(T)) throw ValidationError("di_euler needs a horizon T >= h");
    if (!(r > 0.0)) throw ValidationError("di_euler needs r > 0");
    if (w0.size() != pb.dim() || y0.size() != pb.dim()) throw InputError("initial state has wrong dimension");

    const auto steps = static_cast<std::size_t>(std::llround(T / h));
    DITrajectory out;
    out.h = h;
    out.T = static_cast<double>(steps) * h;
    out.r = r;
    out.dim = pb.dim();
    out.t.reserve(steps + 1);
    out.w.reserve(steps + 1);
    out.y.reserve(steps + 1);
    out.d.reserve(steps + 1);
    out.E.reserve(steps + 1);

    auto select = [&](const Vec& w, const Vec& y) {
        if (selector == DiSelector::policy_fixed) return expected_oracle(pb, w, policy);
        return expected_conservative_set(pb, w).nearest_point(y);
    };

    Vec w = w0, y = y0;
    for (std::size_t n = 0; n <= steps; ++n) {
        out.t.push_back(static_cast<double>(n) * h);
        out.E.push_back(energy(pb, w, y, r));
        Vec d = select(w, y);
        out.w.push_back(w);
        out.y.push_back(y);
        if (n == steps) {
            out.d.push_back(std::move(d));
            break;
        }
        Vec w1(w.size()), y1(y.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            w1[i] = w[i] - h * r * y[i];
            y1[i] = y[i] + h * (d[i] - y[i]);
        }
        out.d.push_back(std::move(d));
        if (!all_finite(w1) || !all_finite(y1) || max_abs(w1) > kDivergenceBound ||
            max_abs(y1) > kDivergenceBound)
            throw DivergenceError("di_euler left the admissible region at step " + std::to_string(n + 1), {},
                                  IterateState{n, w, y, out.t.back()});
        w = std::move(w1);
        y = std::move(y1);
    }
    return out;
}

namespace {

// Prefix trapezoid integral of r ||y||^2.
Vec dissipation_prefix(const DITrajectory& traj) {
    Vec I(traj.size(), 0.0);
    for (std::size_t n = 1; n < traj.size(); ++n) {
        const double dt = traj.t[n] - traj.t[n - 1];
        I[n] = I[n - 1] + 0.5 * dt * traj.r * (norm2(traj.y[n - 1]) + norm2(traj.y[n]));
    }
    return I;
}

} // namespace

double dissipation_defect(const DITrajectory& traj) {
    const Vec I = dissipation_prefix(traj);
    return traj.E.back() - traj.E.front() + I.back();
}

double dissipation_window_excess(const DITrajectory& traj, double c) {
    const Vec I = dissipation_prefix(traj);
    double best = -INFINITY;
    double running_min = INFINITY;
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const double H = traj.E[n] + I[n] - c * traj.t[n];
        if (n > 0) best = std::max(best, H - running_min);
        running_min = std::min(running_min, H);
    }
    return best;
}

InterpolatedPath::InterpolatedPath(std::size_t dim, Vec tau, std::vector<Vec> w, std::vector<Vec> y)
    : dim_(dim), tau_(std::move(tau)), w_(std::move(w)), y_(std::move(y)) {
    if (tau_.empty()) throw InputError("interpolated path needs at least one knot");
    if (w_.size() != tau_.size() || y_.size() != tau_.size())
        throw InputError("interpolated path knot arrays differ in length");
}

InterpolatedPath::Point InterpolatedPath::at(double tau) const {
    if (tau <= tau_.front()) return {w_.front(), y_.front()};
    if (tau >= tau_.back()) return {w_.back(), y_.back()};
    const auto it = std::upper_bound(tau_.begin(), tau_.end(), tau);
    const std::size_t k = static_cast<std::size_t>(it - tau_.begin()) - 1;
    if (tau == tau_[k]) return {w_[k], y_[k]};
    const double lam = (tau - tau_[k]) / (tau_[k + 1] - tau_[k]);
    Point p{Vec(dim_), Vec(dim_)};
    for (std::size_t i = 0; i < dim_; ++i) {
        p.w[i] = w_[k][i] + lam * (w_[k + 1][i] - w_[k][i]);
        p.y[i] = y_[k][i] + lam * (y_[k + 1][i] - y_[k][i]);
    }
    return p;
}

InterpolatedPath interpolate(const RunRecord& rec) {
    if (rec.empty()) throw InputError("cannot interpolate an empty record");
    Vec tau(rec.size());
    std::vector<Vec> w(rec.size()), y(rec.size());
    for (std::size_t k = 0; k < rec.size(); ++k) {
        tau[k] = rec.tau(k);
        w[k].assign(rec.w(k).begin(), rec.w(k).end());
        y[k].assign(rec.y(k).begin(), rec.y(k).end());
    }
    return InterpolatedPath(rec.dim(), std::move(tau), std::move(w), std::move(y));
}

InterpolatedPath interpolate(const DITrajectory& traj) {
    Vec tau(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n) tau[n] = static_cast<double>(n) * traj.h * traj.r;
    return InterpolatedPath(traj.dim, std::move(tau), traj.w, traj.y);
}

FattenedResult fattened_contains(const StochasticProblem& pb, double delta, const Vec& z, const Vec& y,
                                 double resolution) {
    const std::size_t p = pb.dim();
    if (p > 2) throw CapabilityError("fattened membership supports p <= 2 (got p = " + std::to_string(p) + ")");
    if (!(delta >= 0.0)) throw ValidationError("fattening radius must be >= 0");
    if (delta > 0.0 && !(resolution > 0.0)) throw ValidationError("probe resolution must be > 0");
    if (z.size() != p || y.size() != p) throw InputError("fattened membership: dimension mismatch");

    constexpr double kTol = 1e-12;
    FattenedResult res;
    res.best_distance = INFINITY;

    auto probe = [&](const Vec& zp) {
        const ConvexSet S = expected_conservative_set(pb, zp);
        const Vec q = S.nearest_point(y);
        const double d = distance(q, y);
        if (d < res.best_distance) res.best_distance = d;
        if (d <= delta + kTol) {
            res.verdict = Verdict::yes;
            res.z_cert = zp;
            res.y_cert = q;
            return true;
        }
        return false;
    };

    if (probe(z)) return res;
    if (delta == 0.0) {
        res.verdict = Verdict::no;
        return res;
    }

    auto range = [&](double c) {
        return std::pair<long long, long long>{static_cast<long long>(std::ceil((c - delta) / resolution)),
                                               static_cast<long long>(std::floor((c + delta) / resolution))};
    };
    const auto [a0, b0] = range(z[0]);
    if (p == 1) {
        for (long long j = a0; j <= b0; ++j) {
            const Vec zp{static_cast<double>(j) * resolution};
            if (std::fabs(zp[0] - z[0]) <= delta && probe(zp)) return res;
        }
    } else {
        const auto [a1, b1] = range(z[1]);
        for (long long i = a0; i <= b0; ++i)
            for (long long j = a1; j <= b1; ++j) {
                const Vec zp{static_cast<double>(i) * resolution, static_cast<double>(j) * resolution};
                if (distance(zp, z) <= delta && probe(zp)) return res;
            }
    }
    res.verdict = res.best_distance <= delta + resolution ? Verdict::unknown : Verdict::no;
    return res;
}

PerturbedReport perturbed_solution_check(const InterpolatedPath& path, const StochasticProblem& pb, double r,
                                         const Vec& deltas, double window) {
    if (pb.dim() != 1)
        throw CapabilityError("perturbed-solution check supports 1D problems only (got p = " +
                              std::to_string(pb.dim()) + ")");
    if (path.dim() != 1) throw InputError("path dimension does not match the problem");
    if (!(r > 0.0)) throw ValidationError("perturbed-solution check needs r > 0");
    if (!(window > 0.0)) throw ValidationError("window length must be > 0");
    const std::size_t n = path.size();
    if (!deltas.empty() && deltas.size() != 1 && deltas.size() + 1 < n)
        throw InputError("delta sequence shorter than the number of knot intervals");

    PerturbedReport rep;
    rep.U.assign(n > 0 ? n - 1 : 0, 0.0);
    Vec t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = path.tau(k) / r;

    // prefix integrals of the (w, y) residual in time t
    Vec Pw(n, 0.0), Py(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double dt = t[k + 1] - t[k];
        double uw = 0.0, uy = 0.0;
        const double wk = path.w(k)[0], yk = path.y(k)[0];
        const double delta = deltas.empty() ? (path.tau(k + 1) - path.tau(k)) * std::fabs(yk)
                                            : (deltas.size() == 1 ? deltas[0] : deltas[k]);
        rep.delta_max = std::max(rep.delta_max, delta);
        if (dt > 0.0) {
            const double wdot = (path.w(k + 1)[0] - wk) / dt;
            const double ydot = (path.y(k + 1)[0] - yk) / dt;
            uw = wdot + r * yk;
            const double target = ydot + yk;

            double best_q = 0.0, best_d = INFINITY;
            auto consider = [&](double wp) {
                const ConvexSet S = expected_conservative_set(pb, Vec{wp});
                const double q = S.nearest_point(Vec{target})[0];
                const double d = std::fabs(target - q);
                if (d < best_d) {
                    best_d = d;
                    best_q = q;
                }
            };
            consider(wk);
            const double wn = path.w(k + 1)[0];
            // knot times are partial sums, so tau differences carry relative error ~ eps * tau / alpha
            if (std::fabs(wn - wk) <= delta * (1.0 + 1e-9)) consider(wn);
            const double move = std::min(delta, best_d);
            const double dsel = best_q + std::copysign(move, target - best_q);
            uy = target - dsel;
        }
        rep.U[k] = uy;
        Pw[k + 1] = Pw[k] + uw * dt;
        Py[k + 1] = Py[k] + uy * dt;
    }

    auto residual = [&](std::size_t a, std::size_t b) { return std::hypot(Pw[b] - Pw[a], Py[b] - Py[a]); };

    // consecutive windows
    std::size_t start = 0;
    while (start + 1 < n) {
        std::size_t end = start;
        while (end + 1 < n && t[end + 1] <= t[start] + window) ++end;
        if (end == start) end = start + 1;
        rep.windows.push_back({t[start], t[end], residual(start, end)});
        start = end;
    }

    // sliding windows anchored at every knot
    std::size_t end = 0;
    for (std::size_t a = 0; a < n; ++a) {
        if (end < a) end = a;
        while (end + 1 < n && t[end + 1] <= t[a] + window) ++end;
        rep.sup_residual = std::max(rep.sup_residual, residual(a, end));
    }
    return rep;
}

double shadowing_distance(const InterpolatedPath& path, const StochasticProblem& pb, double r, std::size_t k,
                          double T, double h) {
    if (k >= path.size()) throw InputError("shadowing start index beyond the path");
    const DITrajectory di = di_euler(pb, path.w(k), path.y(k), r, h, T, DiSelector::least_norm);
    double sup = 0.0;
    for (std::size_t n = 0; n < di.size(); ++n) {
        const auto z = path.at(path.tau(k) + r * di.t[n]);
        const double d = std::sqrt(norm2(sub(z.w, di.w[n])) + norm2(sub(z.y, di.y[n])));
        sup = std::max(sup, d);
    }
    return sup;
}

} // namespace shb
