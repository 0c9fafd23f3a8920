#include "doctest.h"

#include "nmroc/curves.hpp"
#include "nmroc/error.hpp"
#include "nmroc/logistic.hpp"
#include "nmroc/rng.hpp"
#include "nmroc/simulation.hpp"

#include <cmath>
#include <vector>

using namespace nmroc;

namespace {

struct Sample {
    std::vector<double> x0, w0, x1, w1;
};

Sample random_sample(Rng& rng, bool ties, bool weighted) {
    Sample s;
    const std::size_t n0 = 1 + rng.below(200), n1 = 1 + rng.below(200);
    auto draw = [&](double shift) {
        const double z = rng.normal() + shift;
        return ties ? std::round(3.0 * z) / 3.0 : z;
    };
    for (std::size_t i = 0; i < n0; ++i) {
        s.x0.push_back(draw(0.0));
        s.w0.push_back(weighted ? 0.05 + rng.uniform() : 1.0);
    }
    for (std::size_t i = 0; i < n1; ++i) {
        s.x1.push_back(draw(0.7));
        s.w1.push_back(weighted ? 0.05 + rng.uniform() : 1.0);
    }
    return s;
}

// Double sum over all pairs.
double pairwise_auc(const Sample& s, double tie_credit) {
    double num = 0.0, W0 = 0.0, W1 = 0.0;
    for (double w : s.w0) W0 += w;
    for (double w : s.w1) W1 += w;
    for (std::size_t i = 0; i < s.x1.size(); ++i) {
        for (std::size_t j = 0; j < s.x0.size(); ++j) {
            if (s.x0[j] < s.x1[i]) {
                num += s.w1[i] * s.w0[j];
            } else if (s.x0[j] == s.x1[i]) {
                num += tie_credit * s.w1[i] * s.w0[j];
            }
        }
    }
    return num / (W0 * W1);
}

}  // namespace

TEST_CASE("merged-pass AUC equals the pairwise double sum") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Sample s = random_sample(rng, trial % 2 == 0, trial % 3 != 0);
        const WeightedEcdf f0(s.x0, s.w0), f1(s.x1, s.w1);
        const double auc = estimate_auc(f0, f1);
        CHECK(std::abs(auc - pairwise_auc(s, 1.0)) < 1e-12);
        CHECK(std::abs(weighted_mann_whitney(f0, f1) - pairwise_auc(s, 0.5)) < 1e-12);
        CHECK(auc >= 0.0);
        CHECK(auc <= 1.0);
    }
}

TEST_CASE("ROC curve properties") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const Sample s = random_sample(rng, trial % 2 == 0, true);
        const WeightedEcdf f0(s.x0, s.w0), f1(s.x1, s.w1);
        double prev = -1.0;
        for (int k = 0; k <= 200; ++k) {
            const double r = estimate_roc(f0, f1, k / 200.0);
            CHECK(r >= prev);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            prev = r;
        }
        CHECK(estimate_roc(f0, f1, 1.0) == 1.0);
    }
    // Separated groups.
    const std::vector<double> x0{0.0, 1.0, 2.0}, x1{5.0, 6.0};
    const auto f0 = WeightedEcdf::unweighted(x0), f1 = WeightedEcdf::unweighted(x1);
    CHECK(estimate_auc(f0, f1) == 1.0);
    CHECK(estimate_roc(f0, f1, 0.1) == 1.0);
    CHECK(estimate_auc(f1, f0) == 0.0);
    CHECK_THROWS_AS(estimate_roc(f0, f1, 1.5), InputError);
}

TEST_CASE("g weights follow the posterior formula") {
    const Dataset d = simulate_dataset(builtin_scenario(2), 300, 4).observed;
    const ParameterVector eta = builtin_scenario(2).linear_parameters();
    const GWeights gw = compute_g_weights(d, eta.theta());
    double sg = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto th = eta.theta();
        const std::vector<double> t(th.data(), th.data() + th.size());
        CHECK(gw.g[i] == doctest::Approx(g_fn(d.x(i), d.v(i), d.r(i), t)).epsilon(1e-12));
        sg += gw.g[i];
    }
    CHECK(gw.sum_g == doctest::Approx(sg));
    CHECK(gw.sum_g + gw.sum_1mg == doctest::Approx(static_cast<double>(d.size())));
    CHECK_THROWS_AS(compute_g_weights(d, Eigen::VectorXd::Zero(3)), InputError);
}

TEST_CASE("comparators") {
    const SimulatedData sim = simulate_dataset(builtin_scenario(2), 2000, 12);
    const std::vector<double> s{0.1, 0.2};

    SUBCASE("VER uses verified records only") {
        const PointEstimates ver = comparator_estimate(sim.observed, Method::VER, s);
        std::vector<double> x0, x1;
        for (std::size_t i = 0; i < sim.observed.size(); ++i) {
            if (const auto y = sim.observed.y(i)) (*y ? x1 : x0).push_back(sim.observed.x(i));
        }
        const auto f0 = WeightedEcdf::unweighted(x0), f1 = WeightedEcdf::unweighted(x1);
        CHECK(ver.auc == doctest::Approx(weighted_mann_whitney(f0, f1)).epsilon(1e-14));
        CHECK(ver.roc[1] == doctest::Approx(estimate_roc(f0, f1, 0.2)).epsilon(1e-14));
    }
    SUBCASE("FULL needs the oracle and uses every record") {
        CHECK_THROWS_AS(comparator_estimate(sim.observed, Method::FULL, s), InputError);
        const PointEstimates full = comparator_estimate(sim.observed, Method::FULL, s, sim.oracle_y);
        std::vector<double> x0, x1;
        for (std::size_t i = 0; i < sim.observed.size(); ++i) {
            (sim.oracle_y[i] ? x1 : x0).push_back(sim.observed.x(i));
        }
        const auto f0 = WeightedEcdf::unweighted(x0), f1 = WeightedEcdf::unweighted(x1);
        CHECK(full.auc == doctest::Approx(weighted_mann_whitney(f0, f1)).epsilon(1e-14));
    }
    SUBCASE("IG is Our with beta fixed at 0 and a complete-case disease fit") {
        const PointEstimates ig = comparator_estimate(sim.observed, Method::IG, s);
        const LogisticFit lf = fit_disease_complete_case(sim.observed);
        Eigen::VectorXd theta(5);
        theta << lf.coef, 0.0;
        const CdfEstimates cdf = estimate_cdfs(sim.observed, theta);
        CHECK(ig.auc == doctest::Approx(estimate_auc(cdf.f0, cdf.f1)).epsilon(1e-14));
    }
    SUBCASE("Our matches the pieces") {
        const FitResult fit = fit_mle(sim.observed);
        const PointEstimates our = comparator_estimate(sim.observed, Method::Our, s, {}, &fit);
        const CdfEstimates cdf = estimate_cdfs(sim.observed, fit.eta_hat.theta());
        CHECK(our.auc == estimate_auc(cdf.f0, cdf.f1));
        CHECK(our.roc[0] == estimate_roc(cdf.f0, cdf.f1, 0.1));
        const PointEstimates again = comparator_estimate(sim.observed, Method::Our, s);
        CHECK(again.auc == doctest::Approx(our.auc).epsilon(1e-8));
    }
    SUBCASE("IPW weights") {
        const FitResult fit = fit_mle(sim.observed);
        const auto w = ipw_weights(sim.observed, fit.eta_hat);
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (sim.observed.r(i) == 0) {
                CHECK(w[i] == 0.0);
            } else {
                const ParameterVector& e = fit.eta_hat;
                double b = e[5] + e[6] * sim.observed.x(i) + e[7] * sim.observed.v(i)[0] + e[8] * sim.observed.v(i)[1];
                b += e.beta() * *sim.observed.y(i);
                CHECK(w[i] == doctest::Approx(1.0 + std::exp(b)));
            }
        }
    }
}

TEST_CASE("IPW with constant weights reduces to VER") {
    // psi = 0 and beta = 0 make every verified weight equal to 2.
    const Dataset d = simulate_dataset(builtin_scenario(1), 1500, 2).observed;
    FitResult fake;
    fake.eta_hat = ParameterVector(2);
    fake.converged = true;
    const std::vector<double> s{0.3};
    const PointEstimates ipw = comparator_estimate(d, Method::IPW, s, {}, &fake);
    const PointEstimates ver = comparator_estimate(d, Method::VER, s);
    CHECK(ipw.auc == doctest::Approx(ver.auc).epsilon(1e-13));
    CHECK(ipw.roc[0] == doctest::Approx(ver.roc[0]).epsilon(1e-13));
}

TEST_CASE("method names") {
    CHECK(parse_method("our") == Method::Our);
    CHECK(parse_method("FULL") == Method::FULL);
    CHECK(parse_method("Ipw") == Method::IPW);
    CHECK_FALSE(parse_method("none").has_value());
    CHECK(method_name(Method::FULL) == "Full");
}

TEST_CASE("masked data never reveals disease status of unverified records") {
    const SimulatedData sim = simulate_dataset(builtin_scenario(2), 500, 1);
    for (std::size_t i = 0; i < sim.observed.size(); ++i) {
        if (sim.observed.r(i) == 0) {
            CHECK_FALSE(sim.observed.y(i).has_value());
            CHECK_FALSE(sim.observed.record(i).y.has_value());
        } else {
            CHECK(sim.observed.y(i) == sim.oracle_y[i]);
        }
    }
    std::vector<Record> recs(1);
    recs[0].x = 0.0;
    recs[0].r = 0;
    recs[0].y = 1;
    CHECK_THROWS_AS(Dataset{recs}, InputError);
}
