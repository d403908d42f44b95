#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shb/convex_set.hpp"
#include "shb/expr_graph.hpp"
#include "shb/linalg.hpp"

namespace shb {

/// Explicit random state. Copyable; every draw advances it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    bool operator==(const Rng& o) const { return engine_ == o.engine_; }

private:
    std::mt19937_64 engine_;
};

/// Finitely supported law of the sample variable.
class Distribution {
public:
    /// Validates p_i > 0, sum p_i = 1 (to 1e-12), distinct support points of
    /// equal dimension.
    static Distribution make(std::vector<Vec> support, Vec probs);
    static Distribution uniform(std::vector<Vec> support);
    static Distribution point_mass(Vec s);

    std::size_t size() const { return support_.size(); }
    std::size_t sample_dim() const { return support_.front().size(); }
    const std::vector<Vec>& support() const { return support_; }
    const Vec& probs() const { return probs_; }
    const Vec& point(std::size_t i) const { return support_[i]; }
    double prob(std::size_t i) const { return probs_[i]; }

private:
    Distribution() = default;
    std::vector<Vec> support_;
    Vec probs_;
    Vec cdf_;
    friend std::size_t sample_index(const Distribution&, Rng&);
};

/// Counter-based split of a master seed into independent per-run seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

std::size_t sample_index(const Distribution& d, Rng& rng);

/// Axis-aligned box; a point when lo == hi.
struct Box {
    Vec lo;
    Vec hi;
    bool contains(std::span<const double> w, double tol = 0.0) const;
};

/// F(w) = E_{xi ~ P}[f(w, xi)] with finitely supported P.
struct StochasticProblem {
    std::string name;
    std::shared_ptr<const ExprGraph> graph;
    Distribution dist = Distribution::point_mass({});
    GrowthBound growth;
    double f_star = 0.0;
    /// Built-in analytic Clarke oracle; empty when none.
    std::string clarke_tag;
    /// Region where F >= f_star is asserted and random probes are drawn.
    Box box;
    /// Documented Clarke-critical set as a union of boxes.
    std::vector<Box> clarke_critical_set;

    std::size_t dim() const { return graph->input_dim(); }
    bool has_clarke() const { return !clarke_tag.empty(); }
    /// Sanity checks shared by the catalog and the JSON loader.
    void validate() const;
};

double expected_value(const StochasticProblem& pb, std::span<const double> w);
Vec expected_oracle(const StochasticProblem& pb, std::span<const double> w, const SelectionPolicy& policy);

struct OracleDraw {
    Vec v;   // v(w, s_i) for the drawn index
    Vec V;   // E[v(w, xi)]
};
/// One pass over the support giving both the sampled and the expected oracle.
OracleDraw oracle_draw(const StochasticProblem& pb, std::span<const double> w, std::size_t drawn,
                       const SelectionPolicy& policy);

ConvexSet expected_conservative_set(const StochasticProblem& pb, std::span<const double> w);

/// Analytic Clarke subdifferential from the problem's built-in oracle.
std::optional<ConvexSet> clarke_subdifferential(const StochasticProblem& pb, std::span<const double> w);
bool is_known_clarke_tag(std::string_view tag);

struct CriticalityGap {
    double conservative = 0.0;       // dist(0, D_F(w))
    std::optional<double> clarke;    // dist(0, ∂cF(w)) when an oracle exists
};
CriticalityGap criticality_gap(const StochasticProblem& pb, std::span<const double> w);

/// Index of the drawn support point; the caller owns and threads `rng`.
std::size_t sample(const StochasticProblem& pb, Rng& rng);

/// True when some support sample has an active kink at w or w is an artifact
/// anchor, i.e. the oracle is evaluated on the nonsmooth locus.
bool hits_nonsmooth_locus(const StochasticProblem& pb, std::span<const double> w);

/// Conservativity residual of the expected oracle along a polygonal curve.
double expected_path_integral_residual(const StochasticProblem& pb, const PolyCurve& curve, std::size_t m,
                                       const SelectionPolicy& policy);

namespace catalog {

StochasticProblem abs1d();
StochasticProblem flat1d();
/// f(w, s) = relu(w) - relu(-w) + (w - s)^2 / 2; default P uniform on {-1, 1}.
StochasticProblem artifact1d();
StochasticProblem artifact1d(Distribution dist);
StochasticProblem ell1();
StochasticProblem ridge2d();
StochasticProblem toyrelu(std::size_t p = 2, std::size_t n = 8, std::uint64_t seed = 7);

const std::vector<std::string>& names();
StochasticProblem by_name(std::string_view name);

} // namespace catalog

} // namespace shb
