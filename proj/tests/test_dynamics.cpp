#include <doctest.h>

#include <cmath>

#include "shb/dynamics.hpp"
#include "shb/errors.hpp"
#include "shb/problems.hpp"
#include "shb/verification.hpp"

using namespace shb;

namespace {

StochasticProblem half_square() {
    GraphBuilder b(1, 0);
    StochasticProblem pb;
    pb.name = "half-square";
    pb.graph = std::make_shared<const ExprGraph>(b.build(b.mul(b.constant(0.5), b.square(b.input(0)))));
    pb.dist = Distribution::point_mass({});
    pb.growth = GrowthBound{{1.0}, {0.0, 1.0}};
    pb.box = Box{{-2.0}, {2.0}};
    pb.validate();
    return pb;
}

const SelectionPolicy kZero{};

} // namespace

TEST_CASE("interpolation knots") {
    const StepSchedule s = StepSchedule::make(ScheduleFamily::power, 1.0, 1.0, 1.0);
    const RunRecord rec = run(catalog::flat1d(), s, Init::position_velocity({2.0}, {0.5}), kZero, 4, 10, Form::A);
    const InterpolatedPath path = interpolate(rec);
    CHECK(path.tau(0) == 0.0);
    CHECK(path.tau(1) == 1.0);
    CHECK(path.tau(2) == 1.5);
    const auto mid = path.at(0.5);
    CHECK(mid.w[0] == doctest::Approx(0.5 * (rec.w(0)[0] + rec.w(1)[0])));
    CHECK(mid.y[0] == doctest::Approx(0.5 * (rec.y(0)[0] + rec.y(1)[0])));
    for (std::size_t k = 0; k < rec.size(); ++k) {
        const auto p = path.at(path.tau(k));
        CHECK(p.w[0] == rec.w(k)[0]);
        CHECK(p.y[0] == rec.y(k)[0]);
    }
    CHECK(path.at(1e9).w[0] == rec.w(rec.size() - 1)[0]);
    CHECK_THROWS_AS(interpolate(RunRecord{}), InputError);
}

TEST_CASE("energy examples") {
    CHECK(energy(catalog::abs1d(), Vec{0.0}, Vec{0.0}, 1.0) == 0.0);
    CHECK(energy(catalog::abs1d(), Vec{1.0}, Vec{2.0}, 1.0) == 3.0);
    CHECK(energy(catalog::flat1d(), Vec{0.0}, Vec{1.0}, 2.0) == 2.0);
}

TEST_CASE("di_euler argument checks") {
    const StochasticProblem pb = catalog::abs1d();
    CHECK_THROWS_AS(di_euler(pb, {1.0}, {0.0}, 1.0, 0.0, 1.0, DiSelector::least_norm), ValidationError);
    CHECK_THROWS_AS(di_euler(pb, {1.0}, {0.0}, 1.0, 0.1, 0.05, DiSelector::least_norm), ValidationError);
    CHECK_THROWS_AS(di_euler(pb, {1.0, 0.0}, {0.0}, 1.0, 0.1, 1.0, DiSelector::least_norm), InputError);
}

TEST_CASE("di_euler: first line of the inclusion is exact") {
    const DITrajectory tr = di_euler(catalog::flat1d(), {2.5}, {0.0}, 2.0, 1e-2, 5.0, DiSelector::least_norm);
    CHECK(tr.size() == 501);
    for (std::size_t n = 0; n + 1 < tr.size(); ++n) {
        CHECK(tr.t[n] == doctest::Approx(n * 1e-2));
        CHECK(tr.w[n + 1][0] == tr.w[n][0] - tr.h * tr.r * tr.y[n][0]);
        CHECK(expected_conservative_set(catalog::flat1d(), tr.w[n]).distance(tr.d[n]) == 0.0);
    }
}

TEST_CASE("equilibria are stationary") {
    for (const auto& name : catalog::names()) {
        CAPTURE(name);
        const StochasticProblem pb = catalog::by_name(name);
        for (const Vec& w : known_equilibria(pb)) {
            const CheckResult r = check_equilibrium(pb, w, 2000);
            CHECK_MESSAGE(r.passed, r.detail);
        }
    }
    const DITrajectory tr = di_euler(catalog::flat1d(), {0.3}, {0.0}, 1.0, 1e-2, 1.0, DiSelector::least_norm);
    for (std::size_t n = 0; n < tr.size(); ++n) {
        CHECK(tr.w[n][0] == 0.3);
        CHECK(tr.y[n][0] == 0.0);
    }
}

TEST_CASE("damped quadratic: dissipation and first-order defect") {
    const StochasticProblem pb = half_square();
    const DITrajectory tr = di_euler(pb, {1.0}, {0.0}, 1.0, 1e-3, 10.0, DiSelector::least_norm);
    // sampled every 0.1 time units the energy strictly decreases
    for (std::size_t n = 100; n < tr.size(); n += 100) CHECK(tr.E[n] < tr.E[n - 100]);
    // the oscillation changes sign
    double wmin = 0.0;
    for (const Vec& w : tr.w) wmin = std::fmin(wmin, w[0]);
    CHECK(wmin < 0.0);

    const HalvingStudy hs = energy_halving_study(pb, {1.0}, {0.0}, 1.0, 1e-2, 10.0);
    CHECK(hs.violation_half <= 0.6 * hs.violation_coarse);
    CHECK(std::fabs(dissipation_defect(tr)) <= hs.C * 1e-3);
    CHECK(dissipation_window_excess(tr, hs.C * 1e-3) <= 1e-12);
}

TEST_CASE("abs1d energy violation decays with h") {
    const StochasticProblem pb = catalog::abs1d();
    auto violation = [&](double h) {
        const DITrajectory tr = di_euler(pb, {1.0}, {0.0}, 1.0, h, 10.0, DiSelector::least_norm);
        double worst = 0.0;
        for (std::size_t n = 1; n < tr.size(); ++n) worst = std::fmax(worst, tr.E[n] - tr.E[0]);
        CHECK(tr.w.back()[0] < 0.2);
        return std::fmax(worst, dissipation_window_excess(tr, 0.0));
    };
    const double coarse = violation(1e-2), fine = violation(1e-3);
    CHECK(coarse > 0.0);
    CHECK(fine <= coarse / 3.0);
}

TEST_CASE("fattened membership examples") {
    const StochasticProblem abs = catalog::abs1d();
    CHECK(fattened_contains(abs, 0.1, {0.5}, {0.05}, 1e-3).verdict == Verdict::no);
    const FattenedResult yes = fattened_contains(abs, 0.1, {0.05}, {0.5}, 1e-3);
    REQUIRE(yes.verdict == Verdict::yes);
    CHECK(yes.z_cert->at(0) == 0.0);
    CHECK(yes.y_cert->at(0) == 0.5);
    // delta = 0 collapses to plain membership
    CHECK(fattened_contains(abs, 0.0, {0.0}, {0.7}, 0.0).verdict == Verdict::yes);
    CHECK(fattened_contains(abs, 0.0, {0.1}, {0.7}, 0.0).verdict == Verdict::no);
    CHECK(fattened_contains(abs, 0.0, {0.1}, {1.0}, 0.0).verdict == Verdict::yes);
    // best distance just outside delta but inside the resolution band
    CHECK(fattened_contains(abs, 0.1, {0.5}, {0.895}, 0.01).verdict == Verdict::unknown);
    CHECK_THROWS_AS(fattened_contains(catalog::toyrelu(3), 0.1, {0, 0, 0}, {0, 0, 0}, 0.1), CapabilityError);
}

TEST_CASE("property: fattening is monotone in delta") {
    for (const auto& name : catalog::names()) {
        CAPTURE(name);
        const CheckResult r = check_fattening_monotone(catalog::by_name(name), 150, 21);
        CHECK_MESSAGE(r.passed, r.detail);
    }
}

TEST_CASE("perturbed solution: Euler DI path has no residual") {
    const double h = 1e-2;
    const DITrajectory tr = di_euler(catalog::flat1d(), {2.5}, {0.0}, 1.5, h, 20.0, DiSelector::least_norm);
    const PerturbedReport rep = perturbed_solution_check(interpolate(tr), catalog::flat1d(), 1.5, {h}, 5.0);
    CHECK(rep.sup_residual <= 2.0 * h);
    CHECK(rep.delta_max == h);
    CHECK(rep.windows.size() == 4);
}

TEST_CASE("perturbed solution: constant critical path") {
    const InterpolatedPath path(1, {0.0, 1.0, 2.0, 3.0}, {{0.0}, {0.0}, {0.0}, {0.0}}, {{0.0}, {0.0}, {0.0}, {0.0}});
    const PerturbedReport rep = perturbed_solution_check(path, catalog::abs1d(), 1.0, {}, 1.0);
    CHECK(rep.sup_residual == 0.0);
}

TEST_CASE("perturbed solution: noiseless run residual vanishes") {
    const StochasticProblem pb = catalog::abs1d();
    const StepSchedule s = StepSchedule::make(ScheduleFamily::power, 1.0, 0.75, 1.0);
    const RunRecord rec = run(pb, s, Init::position_velocity({3.0}, {0.0}), kZero, 1, 20000, Form::A);
    const PerturbedReport rep = perturbed_solution_check(interpolate(rec), pb, 1.0, {}, 5.0);
    REQUIRE(rep.windows.size() >= 4);
    const double late = rep.windows.back().residual;
    CHECK(late <= 1e-9);
    CHECK(late <= rep.windows.front().residual);
    CHECK_THROWS_AS(perturbed_solution_check(interpolate(rec), catalog::ell1(), 1.0, {}, 5.0), CapabilityError);
}

TEST_CASE("property: stochastic paths are shadowed by DI solutions") {
    const StepSchedule s = StepSchedule::make(ScheduleFamily::power, 1.0, 0.75, 1.0);
    for (const char* name : {"abs1d", "flat1d"}) {
        CAPTURE(name);
        const CheckResult r = check_shadowing(catalog::by_name(name), s, 5);
        CHECK_MESSAGE(r.passed, r.detail);
    }
}
