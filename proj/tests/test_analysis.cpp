#include <doctest.h>

#include <cmath>

#include "shb/analysis.hpp"
#include "shb/errors.hpp"
#include "shb/problems.hpp"
#include "shb/verification.hpp"

using namespace shb;

namespace {

RunRow row(std::size_t k, double w, double y, double alpha, double beta, double u = 0.0) {
    RunRow r;
    r.k = k;
    r.alpha = alpha;
    r.beta = beta;
    r.w = {w};
    r.y = {y};
    r.v = {u};
    r.V = {0.0};
    r.u = {u};
    return r;
}

const StepSchedule kDefault = StepSchedule::make(ScheduleFamily::power, 1.0, 0.75, 1.0);
const SelectionPolicy kZero{};

// Naive sup over k >= K/2 of |sum_{i=k}^{K-1} beta_i u_{i+1}|.
double naive_tail(const RunRecord& rec) {
    const std::size_t K = rec.size() - 1;
    double sup = 0.0;
    for (std::size_t k = K / 2; k < K; ++k) {
        Vec S(rec.dim(), 0.0);
        for (std::size_t i = k; i < K; ++i)
            for (std::size_t j = 0; j < S.size(); ++j) S[j] += rec.beta(i) * rec.u(i + 1)[j];
        sup = std::fmax(sup, norm(S));
    }
    return sup;
}

} // namespace

TEST_CASE("two-cell alternation") {
    RunRecord rec(1, Form::A, 1.0);
    for (std::size_t k = 0; k < 10; ++k) rec.push(row(k, k % 2 ? 1.0 : 0.0, 0.0, 0.5, 0.5));
    const OccupationGrid g = occupation(rec, 0.1, 0.0);
    REQUIRE(g.weights().size() == 2);
    for (const auto& [cell, wt] : g.weights()) CHECK(wt == doctest::Approx(0.5));
    CHECK(g.total() == doctest::Approx(1.0));

    const auto both = essential_candidates(g, 0.4);
    CHECK(both.size() == 2);
    CHECK(essential_candidates(g, 0.6).empty());
    CHECK(g.box_lo() == Vec{0.0, 0.0});
    CHECK(g.box_hi() == Vec{1.0, 0.0});
}

TEST_CASE("single cell and burn-in") {
    RunRecord rec(1, Form::A, 1.0);
    rec.push(row(0, 5.0, 1.0, 1.0, 0.5));
    for (std::size_t k = 1; k < 10; ++k) rec.push(row(k, 0.01, 0.0, 0.1, 0.05));
    const OccupationGrid all = occupation(rec, 0.1, 0.0);
    CHECK(all.weights().size() == 2);
    const OccupationGrid tail = occupation(rec, 0.1, 0.1);
    REQUIRE(tail.weights().size() == 1);
    const auto c = essential_candidates(tail, 0.5);
    REQUIRE(c.size() == 1);
    CHECK(c[0].w == Vec{0.0});
    CHECK(c[0].y == Vec{0.0});
    CHECK(c[0].weight == doctest::Approx(1.0));
    CHECK_THROWS_AS(occupation(rec, 0.0, 0.1), ValidationError);
    CHECK_THROWS_AS(essential_candidates(tail, 0.0), ValidationError);
}

TEST_CASE("converged abs1d run concentrates at the origin") {
    const RunRecord rec = run(catalog::abs1d(), kDefault, Init::position_velocity({5.0}, {0.0}), kZero, 1, 100000,
                              Form::A);
    const OccupationGrid g = occupation(rec, 0.05, 0.2);
    const auto it = g.weights().find(OccupationGrid::Cell{0, 0});
    REQUIRE(it != g.weights().end());
    CHECK(it->second >= 0.9);

    const AccumulationReport rep = theorem_report(rec, catalog::abs1d(), ReportParams{});
    REQUIRE(rep.essential.size() == 1);
    CHECK(std::fabs(rep.essential[0].w[0]) <= 0.05);
    CHECK(rep.essential[0].df_gap <= 0.05);
    CHECK(rep.essential[0].y_norm <= 0.05);
    CHECK(rep.oscillation <= 0.02);
    CHECK(rep.essential_criticality);
    CHECK(rep.objective_convergence);
    CHECK_FALSE(rep.any_artificial);
}

TEST_CASE("flat1d candidates lie on the plateau") {
    const RunRecord rec = run(catalog::flat1d(), kDefault, Init::position_velocity({2.5}, {0.0}), kZero, 3, 100000,
                              Form::A);
    const AccumulationReport rep = theorem_report(rec, catalog::flat1d(), ReportParams{});
    REQUIRE_FALSE(rep.essential.empty());
    for (const auto& c : rep.essential) {
        CHECK(std::fabs(c.w[0]) <= 1.0);
        CHECK(c.df_gap <= 0.05);
    }
}

TEST_CASE("noise tail") {
    const RunRecord det = run(catalog::abs1d(), kDefault, Init::position_velocity({1.0}, {0.0}), kZero, 1, 500,
                              Form::A);
    CHECK(noise_tail_sup(det) == 0.0);

    const RunRecord rec = run(catalog::flat1d(), kDefault, Init::position_velocity({0.0}, {0.0}), kZero, 8, 400,
                              Form::A);
    CHECK(noise_tail_sup(rec) == doctest::Approx(naive_tail(rec)).epsilon(1e-12));
    const RunRecord two = run(catalog::ell1(), kDefault, Init::position_velocity({0.2, 0.3}, {0.0, 0.0}), kZero, 8,
                              301, Form::A);
    CHECK(noise_tail_sup(two) == doctest::Approx(naive_tail(two)).epsilon(1e-12));

    // frozen noise, halved beta
    RunRecord half(1, Form::A, 1.0);
    for (std::size_t k = 0; k < rec.size(); ++k) {
        RunRow r = rec.row(k);
        r.beta *= 0.5;
        half.push(r);
    }
    CHECK(noise_tail_sup(half) == doctest::Approx(0.5 * noise_tail_sup(rec)).epsilon(1e-12));
}

TEST_CASE("velocity bound holds on a stochastic run") {
    const RunRecord rec = run(catalog::flat1d(), kDefault, Init::position_velocity({2.0}, {3.0}), kZero, 2, 20000,
                              Form::A);
    const VelocityBound vb = velocity_bound(rec);
    CHECK(vb.y0 == 3.0);
    CHECK(vb.holds());
    CHECK(vb.sup_V <= 1.0);
}

TEST_CASE("quantile") {
    CHECK(std::isnan(quantile({}, 0.5)));
    CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
    CHECK(quantile({0.0, 10.0}, 0.95) == doctest::Approx(9.5));
    CHECK(quantile({4.0}, 0.99) == 4.0);
}

TEST_CASE("objective oscillation") {
    RunRecord rec(1, Form::A, 1.0);
    for (std::size_t k = 0; k < 10; ++k) {
        RunRow r = row(k, 0.0, 0.0, 0.1, 0.1);
        r.F = k < 9 ? 1.0 : 1.5;
        rec.push(r);
    }
    CHECK(objective_oscillation(rec, 0.1) == 0.0);
    CHECK(objective_oscillation(rec, 0.2) == 0.5);
}

TEST_CASE("adversarial start at the artifact is flagged") {
    const StochasticProblem pb = catalog::artifact1d(Distribution::point_mass({0.0}));
    const AdversarialResult adv = adversarial_run(pb, kDefault, {0.0}, 2000, 5, ReportParams{});
    CHECK(adv.stalled);
    REQUIRE(adv.report.essential.size() == 1);
    const CandidateReport& c = adv.report.essential[0];
    CHECK(c.w == Vec{0.0});
    CHECK(c.y == Vec{0.0});
    CHECK(c.df_gap == 0.0);
    REQUIRE(c.clarke_gap.has_value());
    CHECK(*c.clarke_gap == 1.0);
    CHECK(c.artificial);
    CHECK(adv.report.any_artificial);
}

TEST_CASE("avoidance: no exact hits, deterministic across execution modes") {
    const StochasticProblem pb = catalog::artifact1d();
    AvoidanceParams p;
    p.n_runs = 40;
    p.K = 2000;
    p.master_seed = 3;
    const AvoidanceStats a = avoidance_experiment(pb, kDefault, p, Execution::serial);
    const AvoidanceStats b = avoidance_experiment(pb, kDefault, p, Execution::parallel);
    CHECK(a.hits == 0);
    REQUIRE(a.runs.size() == b.runs.size());
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        CHECK(a.runs[i].w0 == b.runs[i].w0);
        CHECK(a.runs[i].final_w == b.runs[i].final_w);
        CHECK(a.runs[i].w0[0] >= -2.0);
        CHECK(a.runs[i].w0[0] <= 2.0);
    }
    CHECK(a.gap_quantiles.size() == 4);

    GraphBuilder g(1, 0);
    StochasticProblem smooth;
    smooth.name = "smooth";
    smooth.graph = std::make_shared<const ExprGraph>(g.build(g.square(g.input(0))));
    smooth.growth = GrowthBound{{2.0}, {0.0, 1.0}};
    smooth.box = Box{{-1.0}, {1.0}};
    CHECK_THROWS_AS(avoidance_experiment(smooth, kDefault, p), ValidationError);
}

TEST_CASE("property: occupation invariants on the catalog") {
    for (const auto& name : catalog::names()) {
        CAPTURE(name);
        const CheckResult r = check_occupation(catalog::by_name(name), kDefault, 20000, 17);
        CHECK_MESSAGE(r.passed, r.detail);
    }
}
