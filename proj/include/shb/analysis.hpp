#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shb/heavyball.hpp"
#include "shb/parallel.hpp"
#include "shb/problems.hpp"

namespace shb {

/// alpha-weighted visitation frequencies of (w, y) over cells of side eps
/// centred on the lattice eps * Z^{2p}.
class OccupationGrid {
public:
    using Cell = std::vector<long long>;

    OccupationGrid(std::size_t dim, double eps) : dim_(dim), eps_(eps) {}

    std::size_t dim() const { return dim_; }
    double eps() const { return eps_; }
    const std::map<Cell, double>& weights() const { return weights_; }
    Cell cell_of(std::span<const double> w, std::span<const double> y) const;
    /// Centre of a cell split back into (w, y).
    std::pair<Vec, Vec> center(const Cell& c) const;
    double total() const;
    Vec box_lo() const { return lo_; }
    Vec box_hi() const { return hi_; }

    void add(std::span<const double> w, std::span<const double> y, double weight);
    void normalize();

private:
    std::size_t dim_;
    double eps_;
    std::map<Cell, double> weights_;
    Vec lo_, hi_;
};

/// Rows k >= floor(burn_in * rows) weighted by alpha_k and normalized to sum 1.
OccupationGrid occupation(const RunRecord& rec, double eps, double burn_in);

struct Candidate {
    Vec w;
    Vec y;
    double weight = 0.0;
};

/// Cell centres with weight >= theta, heaviest first (ties by cell index).
std::vector<Candidate> essential_candidates(const OccupationGrid& grid, double theta);

/// sup over k >= K/2 of ||sum_{i=k}^{K-1} beta_i u_{i+1}||, K = rows - 1.
double noise_tail_sup(const RunRecord& rec);

struct VelocityBound {
    double max_y = 0.0;
    double y0 = 0.0;
    double sup_V = 0.0;
    double tail = 0.0;   // sup over all k of ||sum_{i=k}^{K-1} beta_i u_{i+1}||
    double rhs = 0.0;    // max(||y_0|| + tail, sup ||V|| + tail) + tail
    bool holds(double slack = 1e-6) const { return max_y <= rhs + slack; }
};

/// Bound on max_k ||y_k|| computed from the run's own record.
VelocityBound velocity_bound(const RunRecord& rec);

struct ReportParams {
    double eps = 0.05;
    double theta = 0.05;
    double burn_in = 0.2;
    double gap_tol = 0.05;
    double y_tol = 0.05;
    double oscillation_tol = 0.02;
    double tail_fraction = 0.1;
};

struct CandidateReport {
    Vec w;
    Vec y;
    double weight = 0.0;
    double df_gap = 0.0;
    std::optional<double> clarke_gap;
    double y_norm = 0.0;
    double energy = 0.0;
    bool critical = false;     // df_gap <= gap_tol and ||y|| <= y_tol
    bool artificial = false;   // critical for D_F but not for the Clarke subdifferential
};

struct AccumulationReport {
    std::vector<CandidateReport> essential;
    /// Energy-minimal point among the cells visited over the last tail_fraction of rows.
    std::optional<CandidateReport> energy_minimal;
    double oscillation = 0.0;
    bool essential_criticality = false;   // every essential candidate critical, at least one exists
    bool minimal_criticality = false;
    bool objective_convergence = false;
    std::optional<bool> clarke_criticality;
    bool any_artificial = false;
    ReportParams params;
};

AccumulationReport theorem_report(const RunRecord& rec, const StochasticProblem& pb, const ReportParams& params);

/// max - min of F(w_k) over the last `fraction` of rows.
double objective_oscillation(const RunRecord& rec, double fraction);

/// Linear-interpolation quantile of an unsorted sample; NaN when empty.
double quantile(Vec values, double q);

struct AvoidanceParams {
    std::size_t n_runs = 1000;
    std::size_t K = 10000;
    double box_lo = -2.0;
    double box_hi = 2.0;
    std::uint64_t master_seed = 1;
    double gap_tol = 0.1;
    SelectionPolicy policy;
};

struct AvoidanceRun {
    std::uint64_t seed = 0;
    Vec w1, w0;
    bool hit = false;
    std::int64_t first_hit = -1;
    Vec final_w;
    double final_df_gap = 0.0;
    std::optional<double> final_clarke_gap;
    RunStatus status = RunStatus::ok;
    std::string message;
};

struct AvoidanceStats {
    std::vector<AvoidanceRun> runs;
    std::size_t hits = 0;
    std::size_t diverged = 0;
    std::size_t gap_ok = 0;   // runs with final Clarke gap <= gap_tol
    double gap_ok_fraction = 0.0;
    Vec gap_quantiles;        // at 0.5, 0.9, 0.95, 0.99
};

/// Form-B runs from (w_1, w_0) drawn uniformly in the box; counts runs whose
/// iterates land exactly on a kink or artifact anchor and collects final
/// Clarke gaps. Deterministic given master_seed for either execution mode.
AvoidanceStats avoidance_experiment(const StochasticProblem& pb, const StepSchedule& sched,
                                    const AvoidanceParams& params, Execution exec = Execution::parallel);

struct AdversarialResult {
    bool stalled = false;   // every iterate equals the anchor with zero velocity
    AccumulationReport report;
    RunRecord record;
};

/// Run started exactly at `anchor` with zero velocity.
AdversarialResult adversarial_run(const StochasticProblem& pb, const StepSchedule& sched, const Vec& anchor,
                                  std::size_t K, std::uint64_t seed, const ReportParams& params);

} // namespace shb
