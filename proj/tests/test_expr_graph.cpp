#include <doctest.h>

#include <cmath>

#include "shb/expr_graph.hpp"
#include "shb/errors.hpp"
#include "shb/problems.hpp"
#include "shb/verification.hpp"

using namespace shb;

namespace {

ExprGraph abs_dev() {
    GraphBuilder b(1, 1);
    return b.build(b.abs(b.sub(b.input(0), b.sample(0))));
}

ExprGraph fake_identity() {
    GraphBuilder b(1, 0);
    const auto w = b.input(0);
    return b.build(b.sub(b.relu(w), b.relu(b.neg(w))));
}

ExprGraph abs_w(double art_radius = -1.0) {
    GraphBuilder b(1, 0);
    if (art_radius >= 0.0) b.artifact({0.0}, art_radius);
    return b.build(b.abs(b.input(0)));
}

const Vec kNoSample{};

} // namespace

TEST_CASE("eval examples") {
    CHECK(abs_dev().eval(Vec{2.0}, Vec{1.0}) == 1.0);
    GraphBuilder b(1, 0);
    const ExprGraph relu = b.build(b.relu(b.input(0)));
    CHECK(relu.eval(Vec{-3.0}, kNoSample) == 0.0);
    GraphBuilder q(1, 1);
    const ExprGraph sq = q.build(q.square(q.sub(q.input(0), q.sample(0))));
    CHECK(sq.eval(Vec{0.5}, Vec{-0.5}) == 1.0);
}

TEST_CASE("arity mismatch is an input error") {
    const ExprGraph g = abs_dev();
    CHECK_THROWS_AS(g.eval(Vec{1.0, 2.0}, Vec{0.0}), InputError);
    CHECK_THROWS_AS(g.backprop(Vec{1.0}, kNoSample, SelectionPolicy{}), InputError);
}

TEST_CASE("builder rejects forward references") {
    GraphBuilder b(1, 0);
    Node n;
    n.op = Op::neg;
    n.in = {5, 0};
    CHECK_THROWS_AS(b.push(n), InputError);
    CHECK_THROWS_AS(GraphBuilder(0, 0), InputError);
}

TEST_CASE("backprop examples") {
    CHECK(abs_dev().backprop(Vec{2.0}, Vec{1.0}, SelectionPolicy{}) == Vec{1.0});
    // relu'(0) = 0 at both kinks gives 0 * 1 - 0 * (-1) = 0
    CHECK(fake_identity().backprop(Vec{0.0}, kNoSample, SelectionPolicy{}) == Vec{0.0});
    const ExprGraph a = abs_w();
    CHECK(a.backprop(Vec{0.0}, kNoSample, SelectionPolicy::uniform(KinkRule::left)) == Vec{-1.0});
    CHECK(a.backprop(Vec{0.0}, kNoSample, SelectionPolicy::uniform(KinkRule::right)) == Vec{1.0});
    CHECK(a.backprop(Vec{0.0}, kNoSample, SelectionPolicy::uniform(KinkRule::zero)) == Vec{0.0});
    CHECK(a.backprop(Vec{0.0}, kNoSample, SelectionPolicy::uniform(KinkRule::midpoint)) == Vec{0.0});
}

TEST_CASE("primitive kink rules lie in the primitive Clarke subdifferential") {
    for (KinkRule r : {KinkRule::left, KinkRule::right, KinkRule::zero, KinkRule::midpoint}) {
        for (Op op : {Op::relu, Op::abs}) {
            const auto d = local_derivative(op, 0.0, 0.0, r);
            CHECK(in_primitive_clarke(op, 0.0, 0.0, d));
        }
        const auto d = local_derivative(Op::max2, 1.5, 1.5, r);
        CHECK(in_primitive_clarke(Op::max2, 1.5, 1.5, d));
        CHECK(d[0] + d[1] == doctest::Approx(1.0));
    }
    CHECK(local_derivative(Op::relu, 0.0, 0.0, KinkRule::midpoint)[0] == 0.5);
    CHECK(local_derivative(Op::max2, 1.0, 1.0, KinkRule::zero)[0] == 1.0);
    CHECK(local_derivative(Op::max2, 1.0, 1.0, KinkRule::right)[1] == 1.0);
    CHECK_FALSE(in_primitive_clarke(Op::abs, 0.0, 0.0, {1.5, 0.0}));
    CHECK_FALSE(in_primitive_clarke(Op::relu, 1.0, 0.0, {0.0, 0.0}));
}

TEST_CASE("conservative set examples") {
    const ConvexSet a = abs_w().conservative_set(Vec{0.0}, kNoSample);
    CHECK(a.lo() == -1.0);
    CHECK(a.hi() == 1.0);

    // hand enumeration: relu'(0) in {0 (left), 1 (right), 0 (zero)} at each kink,
    // derivative of relu(w) - relu(-w) is r1 + r2
    double lo = INFINITY, hi = -INFINITY;
    for (double r1 : {0.0, 1.0, 0.0})
        for (double r2 : {0.0, 1.0, 0.0}) {
            lo = std::fmin(lo, r1 * 1.0 - r2 * -1.0);
            hi = std::fmax(hi, r1 * 1.0 - r2 * -1.0);
        }
    const ConvexSet f = fake_identity().conservative_set(Vec{0.0}, kNoSample);
    CHECK(f.lo() == lo);
    CHECK(f.hi() == hi);
    CHECK(f.lo() == 0.0);
    CHECK(f.hi() == 2.0);

    const ConvexSet art = abs_w(2.0).conservative_set(Vec{0.0}, kNoSample);
    CHECK(art.lo() == -2.0);
    CHECK(art.hi() == 2.0);
    // away from the anchor the artifact is invisible
    CHECK(abs_w(2.0).conservative_set(Vec{0.5}, kNoSample).is_point());
}

TEST_CASE("artifact zero rule returns the least-norm element") {
    GraphBuilder b(1, 0);
    b.artifact({1.0}, 3.0);
    const ExprGraph g = b.build(b.abs(b.input(0)));
    CHECK(g.backprop(Vec{1.0}, kNoSample, SelectionPolicy{}) == Vec{0.0});
    CHECK(g.backprop(Vec{1.0 + 1e-15}, kNoSample, SelectionPolicy{}) == Vec{1.0});
    CHECK(g.artifact_at(Vec{1.0}) != nullptr);
    CHECK(g.artifact_at(Vec{1.0 + 1e-15}) == nullptr);
}

TEST_CASE("capability limits") {
    GraphBuilder b(4, 0);
    const ExprGraph g4 = b.build(b.abs(b.input(0)));
    CHECK_THROWS_AS(g4.conservative_set(Vec{0, 0, 0, 0}, kNoSample), CapabilityError);

    GraphBuilder m(1, 0);
    NodeId acc = m.abs(m.input(0));
    for (int i = 0; i < 12; ++i) acc = m.add(acc, m.abs(m.input(0)));
    const ExprGraph many = m.build(acc);
    CHECK(many.active_kinks(Vec{0.0}, kNoSample).size() == 13);
    CHECK_THROWS_AS(many.conservative_set(Vec{0.0}, kNoSample), CapabilityError);
    CHECK_NOTHROW(many.conservative_set(Vec{0.1}, kNoSample));
}

TEST_CASE("path integral residual examples") {
    const ExprGraph a = abs_w();
    CHECK(path_integral_residual(a, kNoSample, {{-1.0}, {0.0}, {1.0}}, 2, SelectionPolicy{}) < 1e-15);

    GraphBuilder q(1, 0);
    const ExprGraph sq = q.build(q.square(q.input(0)));
    CHECK(path_integral_residual(sq, kNoSample, {{0.0}, {1.0}}, 1000, SelectionPolicy{}) <= 1e-3);

    GraphBuilder r(1, 0);
    const ExprGraph relu = r.build(r.relu(r.input(0)));
    // oracle: midpoint sum of relu'(w) over [-1, 2]
    const int m = 1000;
    double integral = 0.0;
    for (int i = 0; i < m; ++i) {
        const double w = -1.0 + 3.0 * (i + 0.5) / m;
        integral += (w > 0.0 ? 1.0 : 0.0) * 3.0 / m;
    }
    const double expected = std::fabs(2.0 - integral);
    const double res = path_integral_residual(relu, kNoSample, {{-1.0}, {2.0}}, m, SelectionPolicy{});
    CHECK(res == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
    CHECK(res <= 1e-2);
    CHECK_THROWS_AS(path_integral_residual(relu, kNoSample, {{-1.0}, {2.0}}, 0, SelectionPolicy{}), InputError);
}

TEST_CASE("property: catalog graphs satisfy the AD invariants") {
    for (const auto& name : catalog::names()) {
        CAPTURE(name);
        const StochasticProblem pb = catalog::by_name(name);
        CheckResult r = check_selection_membership(pb, 3000, 1);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_gradient_consistency(pb, 3000, 2);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_conservativity(pb, 20, 2000, 3);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_growth_bound(pb, 3000, 4);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_artifact_locality(pb, 500, 5);
        CHECK_MESSAGE(r.passed, r.detail);
    }
}

TEST_CASE("property: graphs are safe to evaluate concurrently") {
    const StochasticProblem pb = catalog::toyrelu();
    std::vector<Vec> serial(64), parallel(64);
    for (std::size_t i = 0; i < 64; ++i)
        serial[i] = pb.graph->backprop(Vec{0.01 * i, -0.02 * i}, pb.dist.point(i % pb.dist.size()), SelectionPolicy{});
#pragma omp parallel for
    for (int i = 0; i < 64; ++i)
        parallel[i] = pb.graph->backprop(Vec{0.01 * i, -0.02 * i}, pb.dist.point(i % pb.dist.size()), SelectionPolicy{});
    CHECK(serial == parallel);
}
