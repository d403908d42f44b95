#include "shb/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shb/errors.hpp"

namespace shb {

// ---------------------------------------------------------------- distribution

Distribution Distribution::make(std::vector<Vec> support, Vec probs) {
    if (support.empty()) throw ValidationError("distribution needs at least one support point");
    if (support.size() != probs.size())
        throw ValidationError("distribution has " + std::to_string(support.size()) + " points but " +
                              std::to_string(probs.size()) + " probabilities");
    double total = 0.0;
    for (double p : probs) {
        if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("probabilities must be > 0");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw ValidationError("probabilities must sum to 1");
    const std::size_t dim = support.front().size();
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i].size() != dim) throw ValidationError("support points have mixed dimensions");
        if (!all_finite(support[i])) throw ValidationError("support points must be finite");
        for (std::size_t j = 0; j < i; ++j)
            if (support[i] == support[j]) throw ValidationError("support points must be distinct");
    }
    Distribution d;
    d.support_ = std::move(support);
    d.probs_ = std::move(probs);
    d.cdf_.resize(d.probs_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < d.probs_.size(); ++i) {
        acc += d.probs_[i];
        d.cdf_[i] = acc;
    }
    d.cdf_.back() = 1.0;
    return d;
}

Distribution Distribution::uniform(std::vector<Vec> support) {
    const std::size_t n = support.size();
    if (n == 0) throw ValidationError("distribution needs at least one support point");
    return make(std::move(support), Vec(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::point_mass(Vec s) { return make({std::move(s)}, {1.0}); }

std::size_t sample_index(const Distribution& d, Rng& rng) {
    if (d.size() == 1) {
        rng.next();
        return 0;
    }
    const double u = rng.uniform01();
    const auto it = std::upper_bound(d.cdf_.begin(), d.cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - d.cdf_.begin()), d.size() - 1);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 finalizer over (master, counter)
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

bool Box::contains(std::span<const double> w, double tol) const {
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] < lo[i] - tol || w[i] > hi[i] + tol) return false;
    return true;
}

// ---------------------------------------------------------------- problem ops

void StochasticProblem::validate() const {
    if (!graph) throw ValidationError("problem has no graph");
    if (graph->sample_dim() != dist.sample_dim())
        throw ValidationError("graph sample arity " + std::to_string(graph->sample_dim()) +
                              " does not match distribution dimension " + std::to_string(dist.sample_dim()));
    if (!std::isfinite(f_star)) throw ValidationError("lower bound F* must be finite");
    if (growth.kappa.size() != dist.size())
        throw ValidationError("growth bound needs one kappa value per support point");
    for (double k : growth.kappa)
        if (!(k >= 0.0)) throw ValidationError("kappa values must be nonnegative");
    for (double c : growth.psi_coeffs)
        if (!(c >= 0.0)) throw ValidationError("psi coefficients must be nonnegative");
    if (box.lo.size() != dim() || box.hi.size() != dim()) throw ValidationError("box has wrong dimension");
    for (std::size_t i = 0; i < dim(); ++i)
        if (!(box.lo[i] <= box.hi[i])) throw ValidationError("box requires lo <= hi");
    if (has_clarke() && !is_known_clarke_tag(clarke_tag))
        throw ValidationError("unknown Clarke oracle tag '" + clarke_tag + "'");
    for (const auto& b : clarke_critical_set)
        if (b.lo.size() != dim() || b.hi.size() != dim())
            throw ValidationError("critical-set box has wrong dimension");
}

double expected_value(const StochasticProblem& pb, std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pb.dist.size(); ++i) acc += pb.dist.prob(i) * pb.graph->eval(w, pb.dist.point(i));
    return acc;
}

Vec expected_oracle(const StochasticProblem& pb, std::span<const double> w, const SelectionPolicy& policy) {
    Vec acc(pb.dim(), 0.0);
    for (std::size_t i = 0; i < pb.dist.size(); ++i)
        axpy(pb.dist.prob(i), pb.graph->backprop(w, pb.dist.point(i), policy), acc);
    return acc;
}

OracleDraw oracle_draw(const StochasticProblem& pb, std::span<const double> w, std::size_t drawn,
                       const SelectionPolicy& policy) {
    OracleDraw out{Vec{}, Vec(pb.dim(), 0.0)};
    for (std::size_t i = 0; i < pb.dist.size(); ++i) {
        Vec v = pb.graph->backprop(w, pb.dist.point(i), policy);
        axpy(pb.dist.prob(i), v, out.V);
        if (i == drawn) out.v = std::move(v);
    }
    return out;
}

ConvexSet expected_conservative_set(const StochasticProblem& pb, std::span<const double> w) {
    std::optional<ConvexSet> acc;
    for (std::size_t i = 0; i < pb.dist.size(); ++i) {
        ConvexSet term = pb.graph->conservative_set(w, pb.dist.point(i)).scaled(pb.dist.prob(i));
        acc = acc ? acc->minkowski_sum(term) : std::move(term);
    }
    return *acc;
}

namespace {

// Clarke subdifferential of |x| at x.
std::pair<double, double> abs_subdiff(double x) {
    if (x > 0.0) return {1.0, 1.0};
    if (x < 0.0) return {-1.0, -1.0};
    return {-1.0, 1.0};
}

ConvexSet clarke_abs_deviation(std::span<const double> w, const Distribution& d) {
    const std::size_t p = w.size();
    Vec lo(p, 0.0), hi(p, 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t c = 0; c < p; ++c) {
            const auto [a, b] = abs_subdiff(w[c] - d.point(i)[c]);
            lo[c] += d.prob(i) * a;
            hi[c] += d.prob(i) * b;
        }
    }
    if (p == 1) return ConvexSet::interval(lo[0], hi[0]);
    std::vector<Vec> corners;
    for (std::size_t mask = 0; mask < (std::size_t{1} << p); ++mask) {
        Vec c(p);
        for (std::size_t k = 0; k < p; ++k) c[k] = (mask >> k) & 1U ? hi[k] : lo[k];
        corners.push_back(std::move(c));
    }
    return ConvexSet::hull(p, std::move(corners));
}

ConvexSet clarke_ridge2d(std::span<const double> w) {
    const Vec half{0.5 * w[0], 0.5 * w[1]};
    if (w[0] > w[1]) return ConvexSet::point({1.0 + half[0], half[1]});
    if (w[0] < w[1]) return ConvexSet::point({half[0], 1.0 + half[1]});
    return ConvexSet::hull(2, {{1.0 + half[0], half[1]}, {half[0], 1.0 + half[1]}});
}

ConvexSet clarke_artifact1d(std::span<const double> w, const Distribution& d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) mean += d.prob(i) * d.point(i)[0];
    return ConvexSet::point({1.0 + w[0] - mean});
}

constexpr std::array<std::string_view, 5> kClarkeTags{"abs1d", "flat1d", "artifact1d", "ell1", "ridge2d"};

} // namespace

bool is_known_clarke_tag(std::string_view tag) {
    return std::find(kClarkeTags.begin(), kClarkeTags.end(), tag) != kClarkeTags.end();
}

std::optional<ConvexSet> clarke_subdifferential(const StochasticProblem& pb, std::span<const double> w) {
    if (!pb.has_clarke()) return std::nullopt;
    const std::string& t = pb.clarke_tag;
    if (t == "abs1d") {
        const auto [a, b] = abs_subdiff(w[0]);
        return ConvexSet::interval(a, b);
    }
    if (t == "flat1d" || t == "ell1") return clarke_abs_deviation(w, pb.dist);
    if (t == "artifact1d") return clarke_artifact1d(w, pb.dist);
    if (t == "ridge2d") return clarke_ridge2d(w);
    throw ValidationError("unknown Clarke oracle tag '" + t + "'");
}

CriticalityGap criticality_gap(const StochasticProblem& pb, std::span<const double> w) {
    CriticalityGap g;
    const Vec zero(pb.dim(), 0.0);
    g.conservative = expected_conservative_set(pb, w).distance(zero);
    if (auto c = clarke_subdifferential(pb, w)) g.clarke = c->distance(zero);
    return g;
}

std::size_t sample(const StochasticProblem& pb, Rng& rng) { return sample_index(pb.dist, rng); }

bool hits_nonsmooth_locus(const StochasticProblem& pb, std::span<const double> w) {
    if (pb.graph->artifact_at(w) != nullptr) return true;
    for (std::size_t i = 0; i < pb.dist.size(); ++i)
        if (!pb.graph->active_kinks(w, pb.dist.point(i)).empty()) return true;
    return false;
}

double expected_path_integral_residual(const StochasticProblem& pb, const PolyCurve& curve, std::size_t m,
                                       const SelectionPolicy& policy) {
    if (m == 0) throw InputError("path integral needs m >= 1 substeps");
    if (curve.size() < 2) throw InputError("curve needs at least two breakpoints");
    double integral = 0.0;
    Vec point(pb.dim());
    for (std::size_t j = 0; j + 1 < curve.size(); ++j) {
        const Vec step = sub(curve[j + 1], curve[j]);
        double seg = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
            for (std::size_t c = 0; c < point.size(); ++c) point[c] = curve[j][c] + t * step[c];
            seg += dot(expected_oracle(pb, point, policy), step);
        }
        integral += seg / static_cast<double>(m);
    }
    const double gain = expected_value(pb, curve.back()) - expected_value(pb, curve.front());
    return std::fabs(gain - integral);
}

// ---------------------------------------------------------------- catalog

namespace catalog {

namespace {

std::shared_ptr<const ExprGraph> share(ExprGraph g) { return std::make_shared<const ExprGraph>(std::move(g)); }

Box cube(std::size_t p, double lo, double hi) { return Box{Vec(p, lo), Vec(p, hi)}; }

} // namespace

StochasticProblem abs1d() {
    GraphBuilder b(1, 0);
    const auto out = b.abs(b.input(0));
    StochasticProblem pb;
    pb.name = "abs1d";
    pb.graph = share(b.build(out));
    pb.dist = Distribution::point_mass({});
    pb.growth = GrowthBound{{1.0}, {1.0}};
    pb.f_star = 0.0;
    pb.clarke_tag = "abs1d";
    pb.box = cube(1, -5.0, 5.0);
    pb.clarke_critical_set = {Box{{0.0}, {0.0}}};
    pb.validate();
    return pb;
}

StochasticProblem flat1d() {
    GraphBuilder b(1, 1);
    const auto out = b.abs(b.sub(b.input(0), b.sample(0)));
    StochasticProblem pb;
    pb.name = "flat1d";
    pb.graph = share(b.build(out));
    pb.dist = Distribution::uniform({{-1.0}, {1.0}});
    pb.growth = GrowthBound{{1.0, 1.0}, {1.0}};
    pb.f_star = 1.0;
    pb.clarke_tag = "flat1d";
    pb.box = cube(1, -3.0, 3.0);
    pb.clarke_critical_set = {Box{{-1.0}, {1.0}}};
    pb.validate();
    return pb;
}

StochasticProblem artifact1d() { return artifact1d(Distribution::uniform({{-1.0}, {1.0}})); }

StochasticProblem artifact1d(Distribution dist) {
    GraphBuilder b(1, 1);
    const auto w = b.input(0);
    const auto identity = b.sub(b.relu(w), b.relu(b.neg(w)));
    const auto quad = b.mul(b.constant(0.5), b.square(b.sub(w, b.sample(0))));
    const auto out = b.add(identity, quad);

    double mean = 0.0, second = 0.0, smax = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double s = dist.point(i)[0];
        mean += dist.prob(i) * s;
        second += dist.prob(i) * s * s;
        smax = std::fmax(smax, std::fabs(s));
    }
    StochasticProblem pb;
    pb.name = "artifact1d";
    pb.graph = share(b.build(out));
    // F(w) = w + (w^2 - 2 w E[s] + E[s^2]) / 2, minimized at w = E[s] - 1.
    const double wmin = mean - 1.0;
    pb.f_star = wmin + 0.5 * (wmin * wmin - 2.0 * wmin * mean + second);
    pb.growth = GrowthBound{Vec(dist.size(), 1.0), {2.0 + smax, 1.0}};
    pb.dist = std::move(dist);
    pb.clarke_tag = "artifact1d";
    pb.box = cube(1, -3.0, 3.0);
    pb.clarke_critical_set = {Box{{wmin}, {wmin}}};
    pb.validate();
    return pb;
}

StochasticProblem ell1() {
    GraphBuilder b(2, 2);
    const auto t0 = b.abs(b.sub(b.input(0), b.sample(0)));
    const auto t1 = b.abs(b.sub(b.input(1), b.sample(1)));
    StochasticProblem pb;
    pb.name = "ell1";
    pb.graph = share(b.build(b.add(t0, t1)));
    pb.dist = Distribution::uniform({{-1.0, -1.0}, {-1.0, 1.0}, {1.0, -1.0}, {1.0, 1.0}});
    pb.growth = GrowthBound{Vec(4, 1.0), {std::sqrt(2.0)}};
    pb.f_star = 2.0;
    pb.clarke_tag = "ell1";
    pb.box = cube(2, -3.0, 3.0);
    pb.clarke_critical_set = {Box{{-1.0, -1.0}, {1.0, 1.0}}};
    pb.validate();
    return pb;
}

StochasticProblem ridge2d() {
    GraphBuilder b(2, 0);
    const auto w0 = b.input(0);
    const auto w1 = b.input(1);
    const auto ridge = b.max2(w0, w1);
    const auto reg = b.mul(b.constant(0.25), b.add(b.square(w0), b.square(w1)));
    StochasticProblem pb;
    pb.name = "ridge2d";
    pb.graph = share(b.build(b.add(ridge, reg)));
    pb.dist = Distribution::point_mass({});
    pb.growth = GrowthBound{{1.0}, {1.0, 0.5}};
    pb.f_star = -0.5;
    pb.clarke_tag = "ridge2d";
    pb.box = cube(2, -3.0, 3.0);
    pb.clarke_critical_set = {Box{{-1.0, -1.0}, {-1.0, -1.0}}};
    pb.validate();
    return pb;
}

StochasticProblem toyrelu(std::size_t p, std::size_t n, std::uint64_t seed) {
    if (p == 0 || n == 0) throw ValidationError("toyrelu needs p >= 1 and n >= 1");
    // Sample layout: (a_1, ..., a_p, b).
    GraphBuilder b(p, p + 1);
    NodeId inner = b.mul(b.input(0), b.sample(0));
    for (std::size_t j = 1; j < p; ++j) inner = b.add(inner, b.mul(b.input(j), b.sample(j)));
    const auto out = b.square(b.sub(b.relu(inner), b.sample(p)));

    Rng rng(seed);
    Vec teacher(p);
    for (std::size_t j = 0; j < p; ++j) teacher[j] = (j % 2 == 0 ? 1.0 : -0.5);
    std::vector<Vec> support;
    Vec kappa;
    for (std::size_t i = 0; i < n; ++i) {
        Vec s(p + 1);
        for (std::size_t j = 0; j < p; ++j) s[j] = rng.uniform(-1.0, 1.0);
        const double pre = dot(std::span<const double>(s.data(), p), teacher);
        s[p] = std::fmax(pre, 0.0) + 0.1 * rng.uniform(-1.0, 1.0);
        const double an = norm(std::span<const double>(s.data(), p));
        kappa.push_back(2.0 * an * std::fmax(an, std::fabs(s[p])));
        support.push_back(std::move(s));
    }
    StochasticProblem pb;
    pb.name = "toyrelu";
    pb.graph = share(b.build(out));
    pb.dist = Distribution::uniform(std::move(support));
    pb.growth = GrowthBound{std::move(kappa), {1.0, 1.0}};
    pb.f_star = 0.0;
    pb.box = cube(p, -2.0, 2.0);
    pb.validate();
    return pb;
}

const std::vector<std::string>& names() {
    static const std::vector<std::string> kNames{"abs1d", "flat1d", "artifact1d", "ell1", "ridge2d", "toyrelu"};
    return kNames;
}

StochasticProblem by_name(std::string_view name) {
    if (name == "abs1d") return abs1d();
    if (name == "flat1d") return flat1d();
    if (name == "artifact1d") return artifact1d();
    if (name == "ell1") return ell1();
    if (name == "ridge2d") return ridge2d();
    if (name == "toyrelu") return toyrelu();
    throw InputError("unknown catalog problem '" + std::string(name) + "'");
}

} // namespace catalog

} // namespace shb
