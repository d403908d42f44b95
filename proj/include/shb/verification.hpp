#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "shb/dynamics.hpp"
#include "shb/heavyball.hpp"
#include "shb/problems.hpp"

namespace shb {

struct CheckResult {
    std::string name;
    std::string problem;
    bool passed = false;
    double value = 0.0;       // worst observed quantity
    double tolerance = 0.0;   // bound it was compared against
    std::string detail;
};

/// Random probe inside the problem box. About a third of the coordinates snap
/// to the half-integer lattice and 2D probes sometimes tie their coordinates,
/// so kinks and artifact anchors are hit with positive frequency.
Vec probe_point(const StochasticProblem& pb, Rng& rng);

/// Random kink rules: random fallback plus random per-node overrides.
SelectionPolicy random_policy(const ExprGraph& g, Rng& rng);

/// Random polygonal curve with `segments` pieces inside the box.
PolyCurve random_curve(const StochasticProblem& pb, Rng& rng, std::size_t segments);

// Each check draws its own randomness from `seed`.
CheckResult check_selection_membership(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);
CheckResult check_gradient_consistency(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);
CheckResult check_conservativity(const StochasticProblem& pb, std::size_t curves, std::size_t m,
                                 std::uint64_t seed);
CheckResult check_expected_conservativity(const StochasticProblem& pb, std::size_t curves, std::size_t m,
                                          std::uint64_t seed);
CheckResult check_growth_bound(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);
CheckResult check_artifact_locality(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);
CheckResult check_aumann_membership(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);
CheckResult check_clarke_agreement(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);
CheckResult check_critical_set(const StochasticProblem& pb, double spacing);
CheckResult check_lower_bound(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);

CheckResult check_form_equivalence(const StochasticProblem& pb, const StepSchedule& sched, std::size_t seeds,
                                   std::size_t K, std::uint64_t master);
CheckResult check_martingale(const StochasticProblem& pb, std::size_t draws, std::uint64_t seed);
CheckResult check_schedule_asymptotics(const StepSchedule& sched, std::size_t K);
CheckResult check_velocity_bound(const StochasticProblem& pb, const StepSchedule& sched, std::size_t seeds,
                                 std::size_t K, std::uint64_t master);
CheckResult check_occupation(const StochasticProblem& pb, const StepSchedule& sched, std::size_t K,
                             std::uint64_t seed);

/// Points w with 0 in D_F(w) used as DI equilibria.
std::vector<Vec> known_equilibria(const StochasticProblem& pb);
CheckResult check_equilibrium(const StochasticProblem& pb, const Vec& w, std::size_t steps);

struct HalvingStudy {
    double h_coarse = 0.0;
    double violation_coarse = 0.0;
    double violation_half = 0.0;
    double C = 0.0;   // max(violation / h) over the halving pair
};
/// |E(T) - E(0) + int r||y||^2| at h and h/2 from z0.
HalvingStudy energy_halving_study(const StochasticProblem& pb, const Vec& w0, const Vec& y0, double r,
                                  double h, double T);
CheckResult check_energy_window(const StochasticProblem& pb, const Vec& w0, const Vec& y0, double r, double h,
                                double T, double C);
CheckResult check_fattening_monotone(const StochasticProblem& pb, std::size_t n, std::uint64_t seed);
CheckResult check_shadowing(const StochasticProblem& pb, const StepSchedule& sched, std::uint64_t seed);

/// Default DI starting point for energy studies on a catalog problem.
std::pair<Vec, Vec> di_start(const StochasticProblem& pb);

struct SuiteOptions {
    double scale = 1.0;   // multiplies every probe count
    std::uint64_t seed = 20240601;
};

/// Every invariant on every catalog problem.
std::vector<CheckResult> run_invariant_suite(const SuiteOptions& opts);

} // namespace shb
