#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "shb/convex_set.hpp"
#include "shb/linalg.hpp"

namespace shb {

/// Closed primitive catalog. Every entry is semialgebraic and locally
/// Lipschitz, and the Clarke subdifferential of each nonsmooth entry at its
/// kink is the hull of its one-sided derivatives.
enum class Op { constant, input, sample, add, mul, neg, max2, relu, abs, square };

std::string_view op_name(Op op);
std::optional<Op> op_from_name(std::string_view name);
bool is_nonsmooth(Op op);

/// Which derivative to report when a nonsmooth primitive sits exactly on its
/// kink. For max2 "left" is the first argument and "right" the second.
enum class KinkRule { left, right, zero, midpoint };

std::string_view rule_name(KinkRule r);
std::optional<KinkRule> rule_from_name(std::string_view name);

struct NodeId {
    std::size_t value = 0;
};

struct Node {
    Op op = Op::constant;
    std::array<std::size_t, 2> in{0, 0};
    double constant = 0.0;   // Op::constant
    std::size_t index = 0;   // Op::input / Op::sample coordinate
};

/// Artificial enlargement of the conservative gradient at one point: when
/// w == anchor coordinatewise, D(w, s) becomes conv(D(w, s) ∪ B(0, radius)).
struct Artifact {
    Vec anchor;
    double radius = 0.0;
};

struct SelectionPolicy {
    KinkRule fallback = KinkRule::zero;
    std::map<std::size_t, KinkRule> per_node;

    KinkRule rule_for(std::size_t node) const {
        auto it = per_node.find(node);
        return it == per_node.end() ? fallback : it->second;
    }
    static SelectionPolicy uniform(KinkRule r) { return SelectionPolicy{r, {}}; }
};

/// ||D(w, s)|| <= kappa[s] * psi(||w||), psi a polynomial with nonnegative
/// coefficients (psi(t) = sum_i psi_coeffs[i] t^i).
struct GrowthBound {
    Vec kappa;
    Vec psi_coeffs;

    double psi(double t) const;
    double bound(std::size_t sample, double w_norm) const { return kappa.at(sample) * psi(w_norm); }
};

/// Local derivative(s) of a primitive with the given argument values under a
/// kink rule. Unary ops fill element 0 only.
std::array<double, 2> local_derivative(Op op, double a, double b, KinkRule rule);

/// Closed-form Clarke membership for one primitive: is (d0, d1) in the
/// Clarke subdifferential of `op` at (a, b)? Smooth ops compare exactly.
bool in_primitive_clarke(Op op, double a, double b, std::array<double, 2> d, double tol = 0.0);

/// Scalar computation graph f(w, s), immutable after construction.
class ExprGraph {
public:
    static constexpr std::size_t kMaxActiveKinks = 12;

    std::size_t input_dim() const { return input_dim_; }
    std::size_t sample_dim() const { return sample_dim_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t output() const { return output_; }
    const std::vector<Artifact>& artifacts() const { return artifacts_; }
    bool has_nonsmooth_nodes() const;

    double eval(std::span<const double> w, std::span<const double> s) const;

    /// Reverse-mode sweep with per-node kink rules; an element of D(w, s).
    Vec backprop(std::span<const double> w, std::span<const double> s,
                 const SelectionPolicy& policy) const;

    /// Nonsmooth nodes sitting exactly on their kink at (w, s).
    std::vector<std::size_t> active_kinks(std::span<const double> w, std::span<const double> s) const;

    /// Smallest distance of any nonsmooth node's argument to its kink.
    /// +inf when the graph has no nonsmooth node.
    double kink_margin(std::span<const double> w, std::span<const double> s) const;

    /// Artifact anchored exactly at w, if any.
    const Artifact* artifact_at(std::span<const double> w) const;

    /// Full D(w, s): hull of backprop over every {left, right, zero}
    /// assignment of the active kinks, merged with an artifact ball at w.
    ConvexSet conservative_set(std::span<const double> w, std::span<const double> s) const;

private:
    friend class GraphBuilder;
    ExprGraph() = default;

    void check_arity(std::span<const double> w, std::span<const double> s) const;
    void forward(std::span<const double> w, std::span<const double> s, std::vector<double>& val) const;
    Vec reverse(const std::vector<double>& val, const SelectionPolicy& policy) const;

    std::size_t input_dim_ = 0;
    std::size_t sample_dim_ = 0;
    std::vector<Node> nodes_;
    std::size_t output_ = 0;
    std::vector<Artifact> artifacts_;
};

/// Incremental construction in topological order.
class GraphBuilder {
public:
    GraphBuilder(std::size_t input_dim, std::size_t sample_dim);

    NodeId constant(double c);
    NodeId input(std::size_t i);
    NodeId sample(std::size_t i);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId neg(NodeId a);
    NodeId max2(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId abs(NodeId a);
    NodeId square(NodeId a);

    NodeId sub(NodeId a, NodeId b) { return add(a, neg(b)); }

    /// Raw node append used by the JSON loader; validates inputs.
    NodeId push(const Node& n);

    GraphBuilder& artifact(Vec anchor, double radius);

    ExprGraph build(NodeId output) const;

private:
    NodeId unary(Op op, NodeId a);
    NodeId binary(Op op, NodeId a, NodeId b);

    ExprGraph g_;
};

/// A piecewise-linear curve through its breakpoints.
using PolyCurve = std::vector<Vec>;

/// |f(end) - f(start) - sum of midpoint-rule <v(gamma(t)), gamma'(t)> dt|
/// with m midpoint substeps per segment.
double path_integral_residual(const ExprGraph& g, std::span<const double> s, const PolyCurve& curve,
                              std::size_t m, const SelectionPolicy& policy);

double curve_length(const PolyCurve& curve);

} // namespace shb
