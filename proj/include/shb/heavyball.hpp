#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shb/errors.hpp"
#include "shb/expr_graph.hpp"
#include "shb/linalg.hpp"
#include "shb/problems.hpp"

namespace shb {

enum class ScheduleFamily {
    /// alpha_k = a (k+1)^-gamma, beta_k = min(alpha_k / r, 1 - 1e-9)
    power,
    /// Same decay with the index shifted by the smallest k0 >= 0 making
    /// alpha_0 / r < 1, so alpha_k / beta_k == r for every k.
    constant_ratio_power,
    /// Fixed (alpha, beta); test-only, bypasses validation.
    constant,
};

std::string_view family_name(ScheduleFamily f);
std::optional<ScheduleFamily> family_from_name(std::string_view name);

/// Step sizes (alpha_k, beta_k) with exponential memory alpha_k / beta_k -> r.
class StepSchedule {
public:
    static constexpr double kBetaCap = 1.0 - 1e-9;

    /// Throws ValidationError naming the violated step-size condition.
    static StepSchedule make(ScheduleFamily family, double a, double gamma, double r);
    static StepSchedule constant_unchecked(double alpha, double beta);

    double alpha(std::size_t k) const;
    double beta(std::size_t k) const;
    double r() const { return r_; }
    double a() const { return a_; }
    double gamma() const { return gamma_; }
    ScheduleFamily family() const { return family_; }
    std::size_t index_offset() const { return offset_; }

    struct SecondOrder {
        double mu;
        double nu;
    };
    /// mu_k = alpha_k beta_{k-1}, nu_k = alpha_k (1 - beta_{k-1}) / alpha_{k-1}.
    /// Throws std::out_of_range for k == 0.
    SecondOrder second_order(std::size_t k) const;

private:
    ScheduleFamily family_ = ScheduleFamily::power;
    double a_ = 1.0;
    double gamma_ = 1.0;
    double r_ = 1.0;
    double beta_const_ = 0.5;
    std::size_t offset_ = 0;
};

enum class Form { A, B };

struct IterateState {
    std::size_t k = 0;
    Vec w;
    Vec y;
    double tau = 0.0;
};

/// Pair (w_k, w_{k-1}) driving the second-order recursion.
struct PositionPair {
    std::size_t k = 1;
    Vec w;
    Vec w_prev;
    double tau = 0.0;   // accumulated time at index k
};

/// One recorded step. `xi` is -1 on row 0 where no sample is drawn (there
/// v = V = V(w_0) and u = 0).
struct RunRow {
    std::size_t k = 0;
    double tau = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    Vec w, y;
    double F = 0.0;
    double E = 0.0;
    Vec v, V, u;
    std::int64_t xi = -1;
};

enum class RunStatus { ok, diverged };

/// Column-major trajectory record: one row per iterate k = 0..K.
class RunRecord {
public:
    RunRecord() = default;
    RunRecord(std::size_t dim, Form form, double r) : dim_(dim), form_(form), r_(r) {}

    void push(const RunRow& row);
    std::size_t size() const { return tau_.size(); }
    bool empty() const { return tau_.empty(); }
    std::size_t dim() const { return dim_; }
    Form form() const { return form_; }
    double r() const { return r_; }

    double tau(std::size_t i) const { return tau_[i]; }
    double alpha(std::size_t i) const { return alpha_[i]; }
    double beta(std::size_t i) const { return beta_[i]; }
    double F(std::size_t i) const { return F_[i]; }
    double E(std::size_t i) const { return E_[i]; }
    std::int64_t xi(std::size_t i) const { return xi_[i]; }
    std::span<const double> w(std::size_t i) const { return {w_.data() + i * dim_, dim_}; }
    std::span<const double> y(std::size_t i) const { return {y_.data() + i * dim_, dim_}; }
    std::span<const double> v(std::size_t i) const { return {v_.data() + i * dim_, dim_}; }
    std::span<const double> V(std::size_t i) const { return {V_.data() + i * dim_, dim_}; }
    std::span<const double> u(std::size_t i) const { return {u_.data() + i * dim_, dim_}; }
    RunRow row(std::size_t i) const;

    RunStatus status = RunStatus::ok;
    std::string message;

private:
    std::size_t dim_ = 0;
    Form form_ = Form::A;
    double r_ = 1.0;
    Vec tau_, alpha_, beta_, F_, E_;
    std::vector<std::int64_t> xi_;
    Vec w_, y_, v_, V_, u_;
};

/// Thrown when an iterate leaves the finite / |x| <= 1e12 region.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, RunRecord partial, IterateState last)
        : Error(what), partial_(std::move(partial)), last_(std::move(last)) {}
    const RunRecord& partial() const { return partial_; }
    const IterateState& last_finite() const { return last_; }

private:
    RunRecord partial_;
    IterateState last_;
};

inline constexpr double kDivergenceBound = 1e12;

struct StepResult {
    IterateState next;
    RunRow row;   // describes index next.k
};

/// w_{k+1} = w_k - alpha_k y_k; y_{k+1} = beta_k v(w_{k+1}, xi_{k+1}) + (1 - beta_k) y_k.
StepResult shb_step(const IterateState& state, const StochasticProblem& pb, const StepSchedule& sched,
                    const SelectionPolicy& policy, Rng& rng);

struct SecondOrderStepResult {
    PositionPair next;
    RunRow row;   // describes index k of the input pair, y_k backfilled
};

/// w_{k+1} = w_k - mu_k v(w_k, xi_k) + nu_k (w_k - w_{k-1}).
SecondOrderStepResult shb_step_second_order(const PositionPair& pair, const StochasticProblem& pb,
                                            const StepSchedule& sched, const SelectionPolicy& policy,
                                            Rng& rng);

/// Initial condition, either (w_0, y_0) or (w_1, w_0).
struct Init {
    enum class Kind { position_velocity, two_positions };
    Kind kind = Kind::position_velocity;
    Vec first;
    Vec second;

    static Init position_velocity(Vec w0, Vec y0) { return {Kind::position_velocity, std::move(w0), std::move(y0)}; }
    static Init two_positions(Vec w1, Vec w0) { return {Kind::two_positions, std::move(w1), std::move(w0)}; }
    /// (w_0, y_0) under the schedule's alpha_0.
    std::pair<Vec, Vec> as_position_velocity(const StepSchedule& sched) const;
    /// (w_1, w_0) under the schedule's alpha_0.
    std::pair<Vec, Vec> as_two_positions(const StepSchedule& sched) const;
};

/// K iterations of either form; rows 0..K. Throws DivergenceError with the
/// partial record, ValidationError for K == 0.
RunRecord run(const StochasticProblem& pb, const StepSchedule& sched, const Init& init,
              const SelectionPolicy& policy, std::uint64_t seed, std::size_t K, Form form);

} // namespace shb
