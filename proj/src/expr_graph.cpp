#include "shb/expr_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shb/errors.hpp"

namespace shb {

namespace {

constexpr std::array<std::string_view, 10> kOpNames{"constant", "input", "sample", "add", "mul",
                                                    "neg",      "max2",  "relu",   "abs", "square"};
constexpr std::array<std::string_view, 4> kRuleNames{"left", "right", "zero", "midpoint"};

int arity(Op op) {
    switch (op) {
    case Op::constant:
    case Op::input:
    case Op::sample: return 0;
    case Op::neg:
    case Op::relu:
    case Op::abs:
    case Op::square: return 1;
    case Op::add:
    case Op::mul:
    case Op::max2: return 2;
    }
    return 0;
}

bool on_kink(Op op, double a, double b) {
    switch (op) {
    case Op::relu:
    case Op::abs: return a == 0.0;
    case Op::max2: return a == b;
    default: return false;
    }
}

} // namespace

std::string_view op_name(Op op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kOpNames.size(); ++i)
        if (kOpNames[i] == name) return static_cast<Op>(i);
    return std::nullopt;
}

bool is_nonsmooth(Op op) { return op == Op::max2 || op == Op::relu || op == Op::abs; }

std::string_view rule_name(KinkRule r) { return kRuleNames[static_cast<std::size_t>(r)]; }

std::optional<KinkRule> rule_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kRuleNames.size(); ++i)
        if (kRuleNames[i] == name) return static_cast<KinkRule>(i);
    return std::nullopt;
}

double GrowthBound::psi(double t) const {
    double v = 0.0;
    for (std::size_t i = psi_coeffs.size(); i-- > 0;) v = v * t + psi_coeffs[i];
    return v;
}

std::array<double, 2> local_derivative(Op op, double a, double b, KinkRule rule) {
    switch (op) {
    case Op::add: return {1.0, 1.0};
    case Op::mul: return {b, a};
    case Op::neg: return {-1.0, 0.0};
    case Op::square: return {2.0 * a, 0.0};
    case Op::relu:
        if (a > 0.0) return {1.0, 0.0};
        if (a < 0.0) return {0.0, 0.0};
        switch (rule) {
        case KinkRule::right: return {1.0, 0.0};
        case KinkRule::midpoint: return {0.5, 0.0};
        default: return {0.0, 0.0};
        }
    case Op::abs:
        if (a > 0.0) return {1.0, 0.0};
        if (a < 0.0) return {-1.0, 0.0};
        switch (rule) {
        case KinkRule::left: return {-1.0, 0.0};
        case KinkRule::right: return {1.0, 0.0};
        default: return {0.0, 0.0};
        }
    case Op::max2:
        if (a > b) return {1.0, 0.0};
        if (a < b) return {0.0, 1.0};
        switch (rule) {
        case KinkRule::right: return {0.0, 1.0};
        case KinkRule::midpoint: return {0.5, 0.5};
        default: return {1.0, 0.0};
        }
    default: return {0.0, 0.0};
    }
}

bool in_primitive_clarke(Op op, double a, double b, std::array<double, 2> d, double tol) {
    auto near = [tol](double x, double y) { return std::fabs(x - y) <= tol; };
    switch (op) {
    case Op::relu:
        if (a != 0.0) return near(d[0], a > 0.0 ? 1.0 : 0.0);
        return d[0] >= -tol && d[0] <= 1.0 + tol;
    case Op::abs:
        if (a != 0.0) return near(d[0], a > 0.0 ? 1.0 : -1.0);
        return d[0] >= -1.0 - tol && d[0] <= 1.0 + tol;
    case Op::max2:
        if (a > b) return near(d[0], 1.0) && near(d[1], 0.0);
        if (a < b) return near(d[0], 0.0) && near(d[1], 1.0);
        return d[0] >= -tol && d[1] >= -tol && near(d[0] + d[1], 1.0);
    default: {
        const auto g = local_derivative(op, a, b, KinkRule::zero);
        return near(d[0], g[0]) && near(d[1], g[1]);
    }
    }
}

bool ExprGraph::has_nonsmooth_nodes() const {
    return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return is_nonsmooth(n.op); });
}

void ExprGraph::check_arity(std::span<const double> w, std::span<const double> s) const {
    if (w.size() != input_dim_ || s.size() != sample_dim_)
        throw InputError("arity mismatch: graph expects w in R^" + std::to_string(input_dim_) +
                         " and s in R^" + std::to_string(sample_dim_) + ", got " +
                         std::to_string(w.size()) + " and " + std::to_string(s.size()));
}

void ExprGraph::forward(std::span<const double> w, std::span<const double> s,
                        std::vector<double>& val) const {
    val.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        const double a = arity(n.op) > 0 ? val[n.in[0]] : 0.0;
        const double b = arity(n.op) > 1 ? val[n.in[1]] : 0.0;
        double v = 0.0;
        switch (n.op) {
        case Op::constant: v = n.constant; break;
        case Op::input: v = w[n.index]; break;
        case Op::sample: v = s[n.index]; break;
        case Op::add: v = a + b; break;
        case Op::mul: v = a * b; break;
        case Op::neg: v = -a; break;
        case Op::max2: v = a >= b ? a : b; break;
        case Op::relu: v = a > 0.0 ? a : 0.0; break;
        case Op::abs: v = std::fabs(a); break;
        case Op::square: v = a * a; break;
        }
        val[i] = v;
    }
}

Vec ExprGraph::reverse(const std::vector<double>& val, const SelectionPolicy& policy) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[output_] = 1.0;
    Vec grad(input_dim_, 0.0);
    for (std::size_t i = output_ + 1; i-- > 0;) {
        const Node& n = nodes_[i];
        const double g = adj[i];
        if (g == 0.0) continue;
        if (n.op == Op::input) {
            grad[n.index] += g;
            continue;
        }
        const int k = arity(n.op);
        if (k == 0) continue;
        const double a = val[n.in[0]];
        const double b = k > 1 ? val[n.in[1]] : 0.0;
        const auto d = local_derivative(n.op, a, b, policy.rule_for(i));
        adj[n.in[0]] += g * d[0];
        if (k > 1) adj[n.in[1]] += g * d[1];
    }
    return grad;
}

double ExprGraph::eval(std::span<const double> w, std::span<const double> s) const {
    check_arity(w, s);
    std::vector<double> val;
    forward(w, s, val);
    return val[output_];
}

const Artifact* ExprGraph::artifact_at(std::span<const double> w) const {
    for (const auto& a : artifacts_)
        if (std::equal(w.begin(), w.end(), a.anchor.begin(), a.anchor.end())) return &a;
    return nullptr;
}

Vec ExprGraph::backprop(std::span<const double> w, std::span<const double> s,
                        const SelectionPolicy& policy) const {
    check_arity(w, s);
    // The augmented set at an anchor contains B(0, radius) ∋ 0, so its
    // least-norm element is the origin.
    if (policy.fallback == KinkRule::zero && artifact_at(w) != nullptr) return Vec(input_dim_, 0.0);
    std::vector<double> val;
    forward(w, s, val);
    return reverse(val, policy);
}

std::vector<std::size_t> ExprGraph::active_kinks(std::span<const double> w,
                                                 std::span<const double> s) const {
    check_arity(w, s);
    std::vector<double> val;
    forward(w, s, val);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i <= output_; ++i) {
        const Node& n = nodes_[i];
        if (!is_nonsmooth(n.op)) continue;
        const double b = n.op == Op::max2 ? val[n.in[1]] : 0.0;
        if (on_kink(n.op, val[n.in[0]], b)) out.push_back(i);
    }
    return out;
}

double ExprGraph::kink_margin(std::span<const double> w, std::span<const double> s) const {
    check_arity(w, s);
    std::vector<double> val;
    forward(w, s, val);
    double m = INFINITY;
    for (std::size_t i = 0; i <= output_; ++i) {
        const Node& n = nodes_[i];
        if (!is_nonsmooth(n.op)) continue;
        const double b = n.op == Op::max2 ? val[n.in[1]] : 0.0;
        m = std::fmin(m, std::fabs(val[n.in[0]] - b));
    }
    return m;
}

ConvexSet ExprGraph::conservative_set(std::span<const double> w, std::span<const double> s) const {
    check_arity(w, s);
    if (input_dim_ > ConvexSet::kMaxDim)
        throw CapabilityError("conservative_set supports dimension <= 3, graph has " +
                              std::to_string(input_dim_));
    std::vector<double> val;
    forward(w, s, val);
    std::vector<std::size_t> kinks;
    for (std::size_t i = 0; i <= output_; ++i) {
        const Node& n = nodes_[i];
        if (!is_nonsmooth(n.op)) continue;
        const double b = n.op == Op::max2 ? val[n.in[1]] : 0.0;
        if (on_kink(n.op, val[n.in[0]], b)) kinks.push_back(i);
    }
    if (kinks.size() > kMaxActiveKinks)
        throw CapabilityError(std::to_string(kinks.size()) + " active kinks exceed the limit of " +
                              std::to_string(kMaxActiveKinks));

    static constexpr std::array<KinkRule, 3> kRules{KinkRule::left, KinkRule::right, KinkRule::zero};
    std::size_t combos = 1;
    for (std::size_t i = 0; i < kinks.size(); ++i) combos *= kRules.size();

    std::vector<Vec> candidates;
    candidates.reserve(combos);
    SelectionPolicy policy;
    for (std::size_t c = 0; c < combos; ++c) {
        std::size_t code = c;
        for (std::size_t k : kinks) {
            policy.per_node[k] = kRules[code % kRules.size()];
            code /= kRules.size();
        }
        candidates.push_back(reverse(val, policy));
    }
    ConvexSet set = ConvexSet::hull(input_dim_, std::move(candidates));
    if (const Artifact* a = artifact_at(w)) set = set.hull_with(ball_vertices(input_dim_, a->radius));
    return set;
}

GraphBuilder::GraphBuilder(std::size_t input_dim, std::size_t sample_dim) {
    if (input_dim == 0) throw InputError("graph needs at least one input coordinate");
    g_.input_dim_ = input_dim;
    g_.sample_dim_ = sample_dim;
}

NodeId GraphBuilder::push(const Node& n) {
    const int k = arity(n.op);
    for (int i = 0; i < k; ++i)
        if (n.in[static_cast<std::size_t>(i)] >= g_.nodes_.size())
            throw InputError("node " + std::to_string(g_.nodes_.size()) + " (" +
                             std::string(op_name(n.op)) + ") references a later or missing node");
    if (n.op == Op::input && n.index >= g_.input_dim_)
        throw InputError("input coordinate " + std::to_string(n.index) + " out of range");
    if (n.op == Op::sample && n.index >= g_.sample_dim_)
        throw InputError("sample coordinate " + std::to_string(n.index) + " out of range");
    if (n.op == Op::constant && !std::isfinite(n.constant))
        throw InputError("constant node must be finite");
    g_.nodes_.push_back(n);
    return NodeId{g_.nodes_.size() - 1};
}

NodeId GraphBuilder::constant(double c) {
    Node n;
    n.op = Op::constant;
    n.constant = c;
    return push(n);
}

NodeId GraphBuilder::input(std::size_t i) {
    Node n;
    n.op = Op::input;
    n.index = i;
    return push(n);
}

NodeId GraphBuilder::sample(std::size_t i) {
    Node n;
    n.op = Op::sample;
    n.index = i;
    return push(n);
}

NodeId GraphBuilder::unary(Op op, NodeId a) {
    Node n;
    n.op = op;
    n.in = {a.value, 0};
    return push(n);
}

NodeId GraphBuilder::binary(Op op, NodeId a, NodeId b) {
    Node n;
    n.op = op;
    n.in = {a.value, b.value};
    return push(n);
}

NodeId GraphBuilder::add(NodeId a, NodeId b) { return binary(Op::add, a, b); }
NodeId GraphBuilder::mul(NodeId a, NodeId b) { return binary(Op::mul, a, b); }
NodeId GraphBuilder::neg(NodeId a) { return unary(Op::neg, a); }
NodeId GraphBuilder::max2(NodeId a, NodeId b) { return binary(Op::max2, a, b); }
NodeId GraphBuilder::relu(NodeId a) { return unary(Op::relu, a); }
NodeId GraphBuilder::abs(NodeId a) { return unary(Op::abs, a); }
NodeId GraphBuilder::square(NodeId a) { return unary(Op::square, a); }

GraphBuilder& GraphBuilder::artifact(Vec anchor, double radius) {
    if (anchor.size() != g_.input_dim_) throw InputError("artifact anchor has wrong dimension");
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw InputError("artifact radius must be >= 0");
    g_.artifacts_.push_back(Artifact{std::move(anchor), radius});
    return *this;
}

ExprGraph GraphBuilder::build(NodeId output) const {
    if (output.value >= g_.nodes_.size()) throw InputError("output node does not exist");
    ExprGraph g = g_;
    g.output_ = output.value;
    return g;
}

double curve_length(const PolyCurve& curve) {
    double len = 0.0;
    for (std::size_t j = 0; j + 1 < curve.size(); ++j) len += distance(curve[j], curve[j + 1]);
    return len;
}

double path_integral_residual(const ExprGraph& g, std::span<const double> s, const PolyCurve& curve,
                              std::size_t m, const SelectionPolicy& policy) {
    if (m == 0) throw InputError("path_integral_residual needs m >= 1 substeps");
    if (curve.size() < 2) throw InputError("curve needs at least two breakpoints");
    double integral = 0.0;
    Vec point(g.input_dim());
    for (std::size_t j = 0; j + 1 < curve.size(); ++j) {
        const Vec& a = curve[j];
        const Vec& b = curve[j + 1];
        const Vec step = sub(b, a);
        double seg = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
            for (std::size_t c = 0; c < point.size(); ++c) point[c] = a[c] + t * step[c];
            seg += dot(g.backprop(point, s, policy), step);
        }
        integral += seg / static_cast<double>(m);
    }
    const double gain = g.eval(curve.back(), s) - g.eval(curve.front(), s);
    return std::fabs(gain - integral);
}

} // namespace shb
