#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "shb/errors.hpp"
#include "shb/heavyball.hpp"
#include "shb/linalg.hpp"
#include "shb/problems.hpp"

namespace shb {

/// E(w, y) = F(w) + (r/2) ||y||^2
double energy(const StochasticProblem& pb, std::span<const double> w, std::span<const double> y, double r);

enum class DiSelector { least_norm, policy_fixed };

/// Explicit Euler solution of  w' = -r y,  y' in D_F(w) - y.
struct DITrajectory {
    double h = 0.0;
    double T = 0.0;
    double r = 1.0;
    std::size_t dim = 0;
    Vec t;
    std::vector<Vec> w;
    std::vector<Vec> y;
    std::vector<Vec> d;   // selected element of D_F(w_n); the last entry repeats
    Vec E;

    std::size_t size() const { return t.size(); }
};

/// w_{n+1} = w_n - h r y_n, y_{n+1} = y_n + h (d_n - y_n). With least_norm,
/// d_n is the point of D_F(w_n) closest to y_n; with policy_fixed it is the
/// expected oracle under `policy`.
DITrajectory di_euler(const StochasticProblem& pb, const Vec& w0, const Vec& y0, double r, double h, double T,
                      DiSelector selector, const SelectionPolicy& policy = {});

/// E(T) - E(0) + trapezoid of r ||y||^2 over [0, T].
double dissipation_defect(const DITrajectory& traj);

/// max over n < m of E(t_m) - E(t_n) + int_{t_n}^{t_m} r||y||^2 - c (t_m - t_n).
/// Nonpositive iff the windowed dissipation bound holds with constant c.
double dissipation_window_excess(const DITrajectory& traj, double c);

/// Piecewise-affine path through knots (tau_k, w_k, y_k).
class InterpolatedPath {
public:
    InterpolatedPath(std::size_t dim, Vec tau, std::vector<Vec> w, std::vector<Vec> y);

    std::size_t size() const { return tau_.size(); }
    std::size_t dim() const { return dim_; }
    double tau(std::size_t k) const { return tau_[k]; }
    const Vec& w(std::size_t k) const { return w_[k]; }
    const Vec& y(std::size_t k) const { return y_[k]; }

    struct Point {
        Vec w;
        Vec y;
    };
    /// Linear interpolation, clamped to the first and last knot.
    Point at(double tau) const;

private:
    std::size_t dim_;
    Vec tau_;
    std::vector<Vec> w_, y_;
};

InterpolatedPath interpolate(const RunRecord& rec);
/// Knots at tau_n = n h r so the path lives on the iteration time scale.
InterpolatedPath interpolate(const DITrajectory& traj);

enum class Verdict { yes, no, unknown };

struct FattenedResult {
    Verdict verdict = Verdict::no;
    std::optional<Vec> z_cert;   // z' with dist(y, D_F(z')) <= delta
    std::optional<Vec> y_cert;   // nearest point of D_F(z') to y
    double best_distance = 0.0;  // min over probed z' of dist(y, D_F(z'))
};

/// Is y in the delta-fattening of D_F at z? Grid search over z' = z and the
/// points of the lattice resolution * Z^p within distance delta of z. Reports
/// `unknown` when the best probed distance lies in (delta, delta + resolution].
/// Capability error for p > 2.
FattenedResult fattened_contains(const StochasticProblem& pb, double delta, const Vec& z, const Vec& y,
                                 double resolution);

struct WindowResidual {
    double t_start = 0.0;
    double t_end = 0.0;
    double residual = 0.0;   // |int U| over the window
};

struct PerturbedReport {
    std::vector<WindowResidual> windows;   // consecutive windows of length T
    double sup_residual = 0.0;             // sup over windows starting at every knot
    double delta_max = 0.0;
    Vec U;                                 // y-slot residual per knot interval
};

/// Decomposes the interpolated slope on each knot interval (in time t = tau / r)
/// into an element of the delta_k-fattened vector field plus a residual U.
/// `deltas` defaults to delta_k = alpha_k |y_k| when empty. 1D problems only.
PerturbedReport perturbed_solution_check(const InterpolatedPath& path, const StochasticProblem& pb, double r,
                                         const Vec& deltas, double window);

/// sup over t in [0, T] of ||zbar(tau_k + r t) - z_DI(t)|| where z_DI starts
/// from the knot value z_k (least-norm selection, step h).
double shadowing_distance(const InterpolatedPath& path, const StochasticProblem& pb, double r, std::size_t k,
                          double T, double h);

} // namespace shb
