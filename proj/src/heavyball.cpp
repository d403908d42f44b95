#include "shb/heavyball.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shb/dynamics.hpp"

namespace shb {

std::string_view family_name(ScheduleFamily f) {
    switch (f) {
    case ScheduleFamily::power: return "power";
    case ScheduleFamily::constant_ratio_power: return "constant-ratio-power";
    case ScheduleFamily::constant: return "constant";
    }
    return "power";
}

std::optional<ScheduleFamily> family_from_name(std::string_view name) {
    if (name == "power") return ScheduleFamily::power;
    if (name == "constant-ratio-power") return ScheduleFamily::constant_ratio_power;
    return std::nullopt;
}

StepSchedule StepSchedule::make(ScheduleFamily family, double a, double gamma, double r) {
    if (family == ScheduleFamily::constant)
        throw ValidationError("constant step sizes violate sum alpha_k^2 < inf; use constant_unchecked in tests");
    if (!(a > 0.0) || !std::isfinite(a))
        throw ValidationError("step-size condition violated: alpha_k > 0 requires a > 0 (got a = " +
                              std::to_string(a) + ")");
    if (!(gamma > 0.5))
        throw ValidationError("step-size condition violated: sum alpha_k^2 < inf requires gamma > 1/2 (got gamma = " +
                              std::to_string(gamma) + ")");
    if (!(gamma <= 1.0))
        throw ValidationError("step-size condition violated: sum alpha_k = inf requires gamma <= 1 (got gamma = " +
                              std::to_string(gamma) + ")");
    if (!(r > 0.0) || !std::isfinite(r))
        throw ValidationError("momentum condition violated: alpha_k / beta_k -> r requires r > 0 (got r = " +
                              std::to_string(r) + ")");
    StepSchedule s;
    s.family_ = family;
    s.a_ = a;
    s.gamma_ = gamma;
    s.r_ = r;
    if (family == ScheduleFamily::constant_ratio_power) {
        // smallest k0 with (a / r) (k0 + 1)^-gamma < 1
        std::size_t k0 = 0;
        const double ratio = a / r;
        if (ratio >= 1.0) k0 = static_cast<std::size_t>(std::ceil(std::pow(ratio, 1.0 / gamma))) - 1;
        while (ratio * std::pow(static_cast<double>(k0 + 1), -gamma) >= 1.0) ++k0;
        s.offset_ = k0;
    }
    return s;
}

StepSchedule StepSchedule::constant_unchecked(double alpha, double beta) {
    StepSchedule s;
    s.family_ = ScheduleFamily::constant;
    s.a_ = alpha;
    s.gamma_ = 0.0;
    s.beta_const_ = beta;
    s.r_ = alpha / beta;
    return s;
}

double StepSchedule::alpha(std::size_t k) const {
    if (family_ == ScheduleFamily::constant) return a_;
    return a_ * std::pow(static_cast<double>(k + offset_ + 1), -gamma_);
}

double StepSchedule::beta(std::size_t k) const {
    switch (family_) {
    case ScheduleFamily::constant: return beta_const_;
    case ScheduleFamily::constant_ratio_power: return alpha(k) / r_;
    case ScheduleFamily::power: break;
    }
    return std::fmin(alpha(k) / r_, kBetaCap);
}

StepSchedule::SecondOrder StepSchedule::second_order(std::size_t k) const {
    if (k == 0) throw std::out_of_range("second-order coefficients are undefined at k = 0");
    const double ak = alpha(k);
    const double bprev = beta(k - 1);
    return {ak * bprev, ak * (1.0 - bprev) / alpha(k - 1)};
}

void RunRecord::push(const RunRow& row) {
    tau_.push_back(row.tau);
    alpha_.push_back(row.alpha);
    beta_.push_back(row.beta);
    F_.push_back(row.F);
    E_.push_back(row.E);
    xi_.push_back(row.xi);
    w_.insert(w_.end(), row.w.begin(), row.w.end());
    y_.insert(y_.end(), row.y.begin(), row.y.end());
    v_.insert(v_.end(), row.v.begin(), row.v.end());
    V_.insert(V_.end(), row.V.begin(), row.V.end());
    u_.insert(u_.end(), row.u.begin(), row.u.end());
}

RunRow RunRecord::row(std::size_t i) const {
    auto vec = [](std::span<const double> s) { return Vec(s.begin(), s.end()); };
    RunRow r;
    r.k = i;
    r.tau = tau_[i];
    r.alpha = alpha_[i];
    r.beta = beta_[i];
    r.w = vec(w(i));
    r.y = vec(y(i));
    r.F = F_[i];
    r.E = E_[i];
    r.v = vec(v(i));
    r.V = vec(V(i));
    r.u = vec(u(i));
    r.xi = xi_[i];
    return r;
}

namespace {

bool admissible(const Vec& x) {
    for (double c : x)
        if (!std::isfinite(c) || std::fabs(c) > kDivergenceBound) return false;
    return true;
}

RunRow initial_row(const StochasticProblem& pb, const StepSchedule& sched, const Vec& w0, const Vec& y0,
                   const SelectionPolicy& policy) {
    RunRow row;
    row.k = 0;
    row.tau = 0.0;
    row.alpha = sched.alpha(0);
    row.beta = sched.beta(0);
    row.w = w0;
    row.y = y0;
    row.F = expected_value(pb, w0);
    row.E = row.F + 0.5 * sched.r() * norm2(y0);
    row.V = expected_oracle(pb, w0, policy);
    row.v = row.V;
    row.u = Vec(pb.dim(), 0.0);
    row.xi = -1;
    return row;
}

} // namespace

StepResult shb_step(const IterateState& st, const StochasticProblem& pb, const StepSchedule& sched,
                    const SelectionPolicy& policy, Rng& rng) {
    const double a = sched.alpha(st.k);
    const double b = sched.beta(st.k);

    Vec w1 = st.w;
    axpy(-a, st.y, w1);
    if (!admissible(w1))
        throw DivergenceError("iterate w_" + std::to_string(st.k + 1) + " left the admissible region", {}, st);

    const std::size_t idx = sample(pb, rng);
    OracleDraw draw = oracle_draw(pb, w1, idx, policy);

    Vec y1(st.y.size());
    for (std::size_t i = 0; i < y1.size(); ++i) y1[i] = b * draw.v[i] + (1.0 - b) * st.y[i];
    if (!admissible(y1))
        throw DivergenceError("velocity y_" + std::to_string(st.k + 1) + " left the admissible region", {}, st);

    StepResult out;
    out.next = IterateState{st.k + 1, w1, y1, st.tau + a};
    RunRow& row = out.row;
    row.k = st.k + 1;
    row.tau = out.next.tau;
    row.alpha = sched.alpha(row.k);
    row.beta = sched.beta(row.k);
    row.F = expected_value(pb, w1);
    row.E = row.F + 0.5 * sched.r() * norm2(y1);
    row.u = sub(draw.v, draw.V);
    row.w = std::move(w1);
    row.y = std::move(y1);
    row.v = std::move(draw.v);
    row.V = std::move(draw.V);
    row.xi = static_cast<std::int64_t>(idx);
    return out;
}

SecondOrderStepResult shb_step_second_order(const PositionPair& pair, const StochasticProblem& pb,
                                            const StepSchedule& sched, const SelectionPolicy& policy,
                                            Rng& rng) {
    const std::size_t k = pair.k;
    const auto [mu, nu] = sched.second_order(k);
    const double a = sched.alpha(k);

    const std::size_t idx = sample(pb, rng);
    OracleDraw draw = oracle_draw(pb, pair.w, idx, policy);

    Vec next(pair.w.size());
    for (std::size_t i = 0; i < next.size(); ++i)
        next[i] = pair.w[i] - mu * draw.v[i] + nu * (pair.w[i] - pair.w_prev[i]);

    Vec y(pair.w.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (pair.w[i] - next[i]) / a;
    if (!admissible(next) || !admissible(y)) {
        IterateState last{k, pair.w, Vec(pair.w.size(), 0.0), pair.tau};
        for (std::size_t i = 0; i < pair.w.size(); ++i)
            last.y[i] = (pair.w_prev[i] - pair.w[i]) / sched.alpha(k - 1);
        throw DivergenceError("iterate w_" + std::to_string(k + 1) + " left the admissible region", {}, last);
    }

    SecondOrderStepResult out;
    out.next = PositionPair{k + 1, next, pair.w, pair.tau + a};
    RunRow& row = out.row;
    row.k = k;
    row.tau = pair.tau;
    row.alpha = a;
    row.beta = sched.beta(k);
    row.w = pair.w;
    row.F = expected_value(pb, pair.w);
    row.E = row.F + 0.5 * sched.r() * norm2(y);
    row.y = std::move(y);
    row.u = sub(draw.v, draw.V);
    row.v = std::move(draw.v);
    row.V = std::move(draw.V);
    row.xi = static_cast<std::int64_t>(idx);
    return out;
}

std::pair<Vec, Vec> Init::as_position_velocity(const StepSchedule& sched) const {
    if (kind == Kind::position_velocity) return {first, second};
    // y_0 = (w_0 - w_1) / alpha_0
    return {second, scale(1.0 / sched.alpha(0), sub(second, first))};
}

std::pair<Vec, Vec> Init::as_two_positions(const StepSchedule& sched) const {
    if (kind == Kind::two_positions) return {first, second};
    Vec w1 = first;
    axpy(-sched.alpha(0), second, w1);
    return {w1, first};
}

RunRecord run(const StochasticProblem& pb, const StepSchedule& sched, const Init& init,
              const SelectionPolicy& policy, std::uint64_t seed, std::size_t K, Form form) {
    if (K == 0) throw ValidationError("run needs K >= 1 iterations");
    if (init.first.size() != pb.dim() || init.second.size() != pb.dim())
        throw InputError("initial condition has wrong dimension");

    Rng rng(seed);
    RunRecord rec(pb.dim(), form, sched.r());

    auto fail = [&](const DivergenceError& e) -> void {
        rec.status = RunStatus::diverged;
        rec.message = e.what();
        throw DivergenceError(e.what(), rec, e.last_finite());
    };

    if (form == Form::A) {
        auto [w0, y0] = init.as_position_velocity(sched);
        rec.push(initial_row(pb, sched, w0, y0, policy));
        IterateState st{0, std::move(w0), std::move(y0), 0.0};
        for (std::size_t k = 0; k < K; ++k) {
            try {
                StepResult r = shb_step(st, pb, sched, policy, rng);
                rec.push(r.row);
                st = std::move(r.next);
            } catch (const DivergenceError& e) {
                fail(e);
            }
        }
        return rec;
    }

    auto [w1, w0] = init.as_two_positions(sched);
    Vec y0(pb.dim());
    for (std::size_t i = 0; i < y0.size(); ++i) y0[i] = (w0[i] - w1[i]) / sched.alpha(0);
    if (!admissible(w1) || !admissible(y0)) {
        rec.status = RunStatus::diverged;
        rec.message = "initial pair left the admissible region";
        throw DivergenceError(rec.message, rec, IterateState{0, w0, y0, 0.0});
    }
    rec.push(initial_row(pb, sched, w0, y0, policy));
    PositionPair pair{1, std::move(w1), std::move(w0), sched.alpha(0)};
    for (std::size_t k = 1; k <= K; ++k) {
        try {
            SecondOrderStepResult r = shb_step_second_order(pair, pb, sched, policy, rng);
            rec.push(r.row);
            pair = std::move(r.next);
        } catch (const DivergenceError& e) {
            fail(e);
        }
    }
    return rec;
}

} // namespace shb
