#include "htstep/errors.hpp"
#include "htstep/fokker_planck.hpp"
#include "htstep/integrators.hpp"
#include "htstep/tensor_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace htstep;

TEST(AdamsBashforth, WeightsSolveOrderConditions) {
    EXPECT_EQ(ab_coefficients(1), (std::vector<double>{1.0}));
    EXPECT_EQ(ab_coefficients(2), (std::vector<double>{1.5, -0.5}));
    const auto w3 = ab_coefficients(3);
    EXPECT_DOUBLE_EQ(w3[0], 23.0 / 12.0);
    EXPECT_DOUBLE_EQ(w3[1], -16.0 / 12.0);
    EXPECT_DOUBLE_EQ(w3[2], 5.0 / 12.0);
    const auto w4 = ab_coefficients(4);
    EXPECT_DOUBLE_EQ(w4[0], 55.0 / 24.0);
    EXPECT_DOUBLE_EQ(w4[1], -59.0 / 24.0);
    EXPECT_DOUBLE_EQ(w4[2], 37.0 / 24.0);
    EXPECT_DOUBLE_EQ(w4[3], -9.0 / 24.0);
    for (int s = 1; s <= 5; ++s) {
        const auto w = ab_coefficients(s);
        double sum = 0.0;
        for (double x : w) sum += x;
        EXPECT_NEAR(sum, 1.0, 1e-15);
    }
    EXPECT_THROW(ab_coefficients(0), InputError);
}

TEST(SchemeSpec, ParseAndOrder) {
    EXPECT_EQ(SchemeSpec::parse("euler").order(), 1);
    EXPECT_EQ(SchemeSpec::parse("midpoint").order(), 2);
    EXPECT_EQ(SchemeSpec::parse("ab3").order(), 3);
    EXPECT_EQ(SchemeSpec::parse("ab3").steps(), 3);
    EXPECT_EQ(SchemeSpec::parse("ab2").name(), "ab2");
    EXPECT_THROW(SchemeSpec::parse("rk4"), InputError);
    EXPECT_THROW(SchemeSpec::parse("ab9"), InputError);
}

TEST(Thresholds, ReferenceValuesAtFineStep) {
    const double dt = 6.25e-4;
    const Thresholds e = threshold_schedule(SchemeSpec::euler(), dt, ThresholdPolicy::euler(1e2, 1e2));
    EXPECT_EQ(e.alpha, 3.90625e-5);
    EXPECT_EQ(e.beta, 6.25e-2);
    const Thresholds ab = threshold_schedule(SchemeSpec::adams_bashforth(2), dt,
                                             ThresholdPolicy::adams_bashforth(1e3, 1e3, {1e2, 1e2}));
    EXPECT_EQ(ab.alpha, 2.44140625e-7);
    EXPECT_EQ(ab.beta, 3.90625e-4);
    ASSERT_EQ(ab.gamma.size(), 2u);
    EXPECT_EQ(ab.gamma[0], 3.90625e-5);
    EXPECT_EQ(ab.gamma[1], 3.90625e-5);
    const Thresholds mid = threshold_schedule(SchemeSpec::midpoint(), dt, ThresholdPolicy::midpoint(1e3, 1e3, 1e2));
    EXPECT_EQ(mid.alpha, 2.44140625e-7);
    EXPECT_EQ(mid.beta, 3.90625e-4);
    EXPECT_EQ(mid.gamma, (std::vector<double>{6.25e-2}));
}

TEST(Thresholds, ReferenceValuesAtCoarseStep) {
    const double dt = 1e-3;
    const Thresholds e = threshold_schedule(SchemeSpec::euler(), dt, ThresholdPolicy::euler(1e2, 1e2));
    EXPECT_EQ(e.alpha, 1e-4);
    EXPECT_EQ(e.beta, 1e-1);
    const Thresholds ab = threshold_schedule(SchemeSpec::adams_bashforth(2), dt,
                                             ThresholdPolicy::adams_bashforth(1e3, 1e3, {1e2}));
    EXPECT_EQ(ab.alpha, 1e-6);
    EXPECT_EQ(ab.beta, 1e-3);
    EXPECT_EQ(ab.gamma, (std::vector<double>{1e-4, 1e-4}));
    const Thresholds mid = threshold_schedule(SchemeSpec::midpoint(), dt, ThresholdPolicy::midpoint(1e3, 1e3, 1e2));
    EXPECT_EQ(mid.gamma, (std::vector<double>{1e-1}));
    const Thresholds big = threshold_schedule(SchemeSpec::adams_bashforth(2), dt,
                                              ThresholdPolicy::adams_bashforth(4e4, 4e4, {4e3, 4e3}));
    EXPECT_EQ(big.alpha, 4e-5);
    EXPECT_EQ(big.beta, 4e-2);
    EXPECT_EQ(big.gamma[0], 4e-3);
}

TEST(Thresholds, DecimalExactProducts) {
    EXPECT_EQ(decimal_scaled_power(1e3, 1e-3, 3), 1e-6);
    EXPECT_EQ(decimal_scaled_power(3.0, 0.1, 2), 0.03);
    EXPECT_EQ(decimal_scaled_power(7.0, 0.5, 0), 7.0);
    EXPECT_THROW(threshold_schedule(SchemeSpec::adams_bashforth(3), 1e-3, ThresholdPolicy::adams_bashforth(1, 1, {1, 1})),
                 InputError);
    EXPECT_THROW(ThresholdPolicy::euler(-1.0, 1.0).validate(), InputError);
}

TEST(StepCount, RequiresIntegralRatio) {
    EXPECT_EQ(step_count(1.0, 1e-3), 1000);
    EXPECT_EQ(step_count(0.1, 1e-3), 100);
    EXPECT_EQ(step_count(1.0, 6.25e-4), 1600);
    EXPECT_THROW(step_count(1.0, 3e-3), InputError);
    EXPECT_THROW(step_count(1.0, 0.0), InputError);
}

namespace {

struct SmallProblem {
    FPProblem p = make_preset("fp2d-paper", 8);
    Eigen::MatrixXd n_mat = p.op.assemble();
    Eigen::VectorXd f0 = ht_to_dense(p.f0).data();
};

Eigen::VectorXd dense_of(const HTensor& h) { return ht_to_dense(h).data(); }

const Thresholds kNoTruncation{0.0, 0.0, {0.0, 0.0}};

}  // namespace

TEST(Steps, UntruncatedStepsMatchDenseSchemes) {
    SmallProblem s;
    const double dt = 1e-3;
    const auto euler = step_euler(s.p.f0, s.p.op, dt, kNoTruncation);
    EXPECT_LT((dense_of(euler.next) - oracle::euler(s.n_mat, s.f0, dt)).norm(), 1e-12 * s.f0.norm());
    const auto mid = step_midpoint(s.p.f0, s.p.op, dt, kNoTruncation);
    EXPECT_LT((dense_of(mid.next) - oracle::midpoint(s.n_mat, s.f0, dt)).norm(), 1e-12 * s.f0.norm());
    const auto ab = step_ab({euler.next, s.p.f0}, s.p.op, dt, kNoTruncation, ab_coefficients(2));
    EXPECT_LT((dense_of(ab.next) - oracle::ab2(s.n_mat, dense_of(euler.next), s.f0, dt)).norm(), 1e-12 * s.f0.norm());
}

TEST(Steps, TruncationsStayWithinThresholds) {
    SmallProblem s;
    const double dt = 1e-3;
    const Thresholds th{1e-5, 1e-3, {1e-4, 1e-4}};
    for (const auto& r : {step_euler(s.p.f0, s.p.op, dt, th), step_midpoint(s.p.f0, s.p.op, dt, th),
                          step_ab({s.p.f0, s.p.f0}, s.p.op, dt, th, ab_coefficients(2))}) {
        EXPECT_LE(r.err_alpha, th.alpha);
        EXPECT_LE(r.err_beta, th.beta);
        for (double g : r.err_gamma) EXPECT_LE(g, th.gamma[0]);
    }
    // The local defect against the dense step is bounded by the truncations.
    const auto e = step_euler(s.p.f0, s.p.op, dt, th);
    const double defect = (dense_of(e.next) - oracle::euler(s.n_mat, s.f0, dt)).norm();
    EXPECT_LE(defect, th.alpha + dt * th.beta + 1e-14);
}

namespace {

IntegrationOptions small_options(const std::string& scheme, double dt, double T) {
    IntegrationOptions o;
    o.scheme = SchemeSpec::parse(scheme);
    o.dt = dt;
    o.T = T;
    o.policy = o.scheme.kind() == SchemeSpec::Kind::Euler ? ThresholdPolicy::euler(1e2, 1e2)
                                                         : ThresholdPolicy::adams_bashforth(1e3, 1e3, {1e2});
    if (o.scheme.kind() == SchemeSpec::Kind::Midpoint) o.policy = ThresholdPolicy::midpoint(1e3, 1e3, 1e2);
    return o;
}

}  // namespace

TEST(Integrate, RecordsRespectThresholdsAndConserveMass) {
    const FPProblem p = make_preset("fp2d-paper", 16);
    for (const char* scheme : {"euler", "midpoint", "ab2"}) {
        const auto res = integrate(p.op, p.f0, p.grid(), small_options(scheme, 5e-4, 0.02));
        ASSERT_EQ(res.records.size(), 40u) << scheme;
        // |sum of entries| <= sqrt(#entries) * Frobenius norm, times the quadrature weight
        const double c = p.grid().weight() * p.grid().weight() * 16.0;
        for (const auto& r : res.records) {
            EXPECT_TRUE(r.thresholds_respected()) << scheme << " step " << r.k;
            const double bound = static_cast<double>(r.k) * (r.eps_alpha + 5e-4 * r.eps_beta) * c;
            EXPECT_LE(std::abs(r.mass - 1.0), bound + 1e-12) << scheme << " step " << r.k;
        }
        if (std::string(scheme) == "ab2") {
            EXPECT_TRUE(res.records[0].startup);
            EXPECT_FALSE(res.records[1].startup);
            EXPECT_EQ(res.records[0].eps_gamma, (std::vector<double>{5e-2}));
            EXPECT_EQ(res.records[1].eps_gamma.size(), 2u);
        }
    }
}

TEST(Integrate, FixedRankModeCapsRanks) {
    const FPProblem p = make_preset("fp2d-paper", 16);
    IntegrationOptions o = small_options("euler", 5e-4, 0.01);
    o.mode = RankMode::FixedRank;
    o.rank_caps = TruncationControl::fixed_rank(3);
    const auto res = integrate(p.op, p.f0, p.grid(), o);
    for (const auto& r : res.records) EXPECT_LE(r.max_rank, 3);
    o.rank_caps.reset();
    EXPECT_THROW(integrate(p.op, p.f0, p.grid(), o), InputError);
}

TEST(Integrate, CsvIsReproducible) {
    const FPProblem p = make_preset("fp2d-paper", 12);
    const auto o = small_options("ab2", 1e-3, 0.01);
    std::ostringstream a, b;
    write_step_csv(a, integrate(p.op, p.f0, p.grid(), o).records);
    write_step_csv(b, integrate(p.op, p.f0, p.grid(), o).records);
    EXPECT_EQ(a.str(), b.str());
    std::istringstream is(a.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "# htstep step-records v1");
    std::getline(is, line);
    EXPECT_EQ(line, "k,t,max_rank,ranks,eps_alpha,eps_beta,eps_gamma,trunc_err_est,mass,err_l2,wall_ms");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 8), "1,0.001,");
}

TEST(Integrate, RestartFromCheckpointMatchesUninterruptedRun) {
    const FPProblem p = make_preset("fp2d-paper", 12);
    const auto dir = std::filesystem::temp_directory_path() / "htstep_ckpt_test";
    std::filesystem::create_directories(dir);
    const std::string ck = (dir / "ck.bin").string();

    IntegrationOptions o = small_options("ab2", 1e-3, 0.02);
    const auto full = integrate(p.op, p.f0, p.grid(), o);

    IntegrationOptions first = small_options("ab2", 1e-3, 0.01);
    first.checkpoint_stride = 10;
    first.checkpoint_path = ck;
    integrate(p.op, p.f0, p.grid(), first);

    IntegrationOptions second = o;
    second.restart_path = ck;
    const auto resumed = integrate(p.op, p.f0, p.grid(), second);
    EXPECT_EQ(resumed.records.front().k, 11);
    EXPECT_EQ((ht_to_dense(resumed.final_state).data() - ht_to_dense(full.final_state).data()).norm(), 0.0);
    std::filesystem::remove_all(dir);
}

TEST(Integrate, ConvergesAtSchemeOrderWithNegligibleTruncation) {
    const FPProblem p = make_preset("fp2d-paper", 8);
    const Eigen::MatrixXd n_mat = p.op.assemble();
    Eigen::VectorXd exact = ht_to_dense(p.f0).data();
    for (int k = 0; k < 1000; ++k) exact = oracle::rk4(n_mat, exact, 1e-4);
    for (const char* scheme : {"euler", "midpoint", "ab2"}) {
        std::vector<double> errs;
        for (double dt : {1e-3, 5e-4}) {
            IntegrationOptions o = small_options(scheme, dt, 0.1);
            o.policy = {1e-10, 1e-10, {1e-10}};
            o.startup_policy = ThresholdPolicy::midpoint(1e-10, 1e-10, 1e-10);
            errs.push_back((ht_to_dense(integrate(p.op, p.f0, p.grid(), o).final_state).data() - exact).norm());
        }
        const double order = std::log2(errs[0] / errs[1]);
        EXPECT_NEAR(order, SchemeSpec::parse(scheme).order(), 0.15) << scheme;
    }
}
