#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "shb/errors.hpp"
#include "shb/problems.hpp"
#include "shb/verification.hpp"

using namespace shb;

namespace {

StochasticProblem squared_dev() {
    GraphBuilder b(1, 1);
    const auto d = b.sub(b.input(0), b.sample(0));
    StochasticProblem pb;
    pb.name = "squared";
    pb.graph = std::make_shared<const ExprGraph>(b.build(b.square(d)));
    pb.dist = Distribution::uniform({{-1.0}, {1.0}});
    pb.growth = GrowthBound{{2.0, 2.0}, {1.0, 1.0}};
    pb.box = Box{{-2.0}, {2.0}};
    pb.validate();
    return pb;
}

StochasticProblem fake_identity() {
    GraphBuilder b(1, 0);
    const auto w = b.input(0);
    StochasticProblem pb;
    pb.name = "identity";
    pb.graph = std::make_shared<const ExprGraph>(b.build(b.sub(b.relu(w), b.relu(b.neg(w)))));
    pb.dist = Distribution::point_mass({});
    pb.growth = GrowthBound{{2.0}, {1.0}};
    pb.f_star = -10.0;
    pb.box = Box{{-1.0}, {1.0}};
    pb.validate();
    return pb;
}

double F(const StochasticProblem& pb, double w) { return expected_value(pb, Vec{w}); }
double V(const StochasticProblem& pb, double w) { return expected_oracle(pb, Vec{w}, SelectionPolicy{})[0]; }

} // namespace

TEST_CASE("distribution validation") {
    CHECK_THROWS_AS(Distribution::make({{0.0}, {1.0}}, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(Distribution::make({{0.0}, {1.0}}, {1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(Distribution::make({{0.0}, {0.0}}, {0.5, 0.5}), ValidationError);
    CHECK_THROWS_AS(Distribution::make({{0.0}, {1.0, 2.0}}, {0.5, 0.5}), ValidationError);
    CHECK_NOTHROW(Distribution::make({{0.0}, {1.0}}, {0.25, 0.75}));
}

TEST_CASE("expected value examples") {
    const StochasticProblem flat = catalog::flat1d();
    CHECK(F(flat, 0.0) == 1.0);
    CHECK(F(flat, 2.0) == 2.0);
    CHECK(F(squared_dev(), 0.0) == 1.0);
}

TEST_CASE("expected oracle examples") {
    const StochasticProblem flat = catalog::flat1d();
    CHECK(V(flat, 0.0) == 0.0);
    CHECK(V(flat, 2.0) == 1.0);
    CHECK(V(squared_dev(), 0.0) == 0.0);
}

TEST_CASE("expected conservative set examples") {
    const StochasticProblem flat = catalog::flat1d();
    const ConvexSet d0 = expected_conservative_set(flat, Vec{0.0});
    CHECK(d0.is_point());
    CHECK(d0.lo() == 0.0);
    // oracle: 1/2 {1} + 1/2 [-1, 1]
    const ConvexSet d1 = expected_conservative_set(flat, Vec{1.0});
    CHECK(d1.lo() == 0.5 * 1.0 + 0.5 * -1.0);
    CHECK(d1.hi() == 0.5 * 1.0 + 0.5 * 1.0);
    const ConvexSet a = expected_conservative_set(catalog::abs1d(), Vec{0.0});
    CHECK(a.lo() == -1.0);
    CHECK(a.hi() == 1.0);
}

TEST_CASE("criticality gap examples") {
    CHECK(criticality_gap(catalog::flat1d(), Vec{0.5}).conservative == 0.0);
    CHECK(criticality_gap(catalog::abs1d(), Vec{0.5}).conservative == 1.0);
    const CriticalityGap g = criticality_gap(catalog::artifact1d(Distribution::point_mass({0.0})), Vec{0.0});
    CHECK(g.conservative == 0.0);
    REQUIRE(g.clarke.has_value());
    CHECK(*g.clarke == 1.0);
    CHECK_FALSE(criticality_gap(fake_identity(), Vec{0.0}).clarke.has_value());
    CHECK(criticality_gap(fake_identity(), Vec{0.0}).conservative == 0.0);
}

TEST_CASE("sampling") {
    const StochasticProblem abs = catalog::abs1d();
    Rng rng(3);
    for (int i = 0; i < 10; ++i) CHECK(sample(abs, rng) == 0);

    const StochasticProblem flat = catalog::flat1d();
    Rng r2(42);
    std::size_t plus = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) plus += flat.dist.point(sample(flat, r2))[0] == 1.0;
    const double freq = static_cast<double>(plus) / n;
    CHECK(freq >= 0.49);
    CHECK(freq <= 0.51);

    Rng a(9), b(9);
    for (int i = 0; i < 1000; ++i) CHECK(sample(flat, a) == sample(flat, b));
    CHECK(a == b);
}

TEST_CASE("derived seeds are distinct and reproducible") {
    std::vector<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.push_back(derive_seed(17, i));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    CHECK(derive_seed(17, 5) == derive_seed(17, 5));
    CHECK(derive_seed(17, 5) != derive_seed(18, 5));
}

TEST_CASE("nonsmooth locus") {
    const StochasticProblem flat = catalog::flat1d();
    CHECK(hits_nonsmooth_locus(flat, Vec{1.0}));
    CHECK(hits_nonsmooth_locus(flat, Vec{-1.0}));
    CHECK_FALSE(hits_nonsmooth_locus(flat, Vec{0.3}));
    CHECK(hits_nonsmooth_locus(catalog::artifact1d(), Vec{0.0}));
}

TEST_CASE("Clarke oracles") {
    auto cl = [](const StochasticProblem& pb, Vec w) { return *clarke_subdifferential(pb, w); };
    CHECK(cl(catalog::abs1d(), {0.0}).lo() == -1.0);
    CHECK(cl(catalog::flat1d(), {1.0}).lo() == 0.0);
    CHECK(cl(catalog::flat1d(), {1.0}).hi() == 1.0);
    // artifact1d: F(w) = w + E[(w - s)^2] / 2, smooth
    const ConvexSet a = cl(catalog::artifact1d(), {0.0});
    CHECK(a.is_point());
    CHECK(a.lo() == 1.0);
    // ridge2d at the tie (0, 0): hull of (1, 0) and (0, 1)
    const ConvexSet r = cl(catalog::ridge2d(), {0.0, 0.0});
    CHECK(r.distance({0.5, 0.5}) == 0.0);
    CHECK(r.distance({0.0, 0.0}) == doctest::Approx(std::sqrt(0.5)));
    CHECK_FALSE(clarke_subdifferential(catalog::toyrelu(), Vec{0.0, 0.0}).has_value());
}

TEST_CASE("catalog lookup") {
    for (const auto& n : catalog::names()) CHECK(catalog::by_name(n).name == n);
    CHECK_THROWS_AS(catalog::by_name("nope"), InputError);
    CHECK_THROWS_AS(catalog::toyrelu(0), ValidationError);
}

TEST_CASE("property: expected-level invariants on the catalog") {
    for (const auto& name : catalog::names()) {
        CAPTURE(name);
        const StochasticProblem pb = catalog::by_name(name);
        CheckResult r = check_aumann_membership(pb, 1000, 11);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_clarke_agreement(pb, 1000, 12);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_critical_set(pb, 0.05);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_lower_bound(pb, 2000, 13);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_expected_conservativity(pb, 10, 1000, 14);
        CHECK_MESSAGE(r.passed, r.detail);
        r = check_martingale(pb, 20000, 15);
        CHECK_MESSAGE(r.passed, r.detail);
    }
}
