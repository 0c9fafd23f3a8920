#include "doctest.h"

#include "nmroc/error.hpp"
#include "nmroc/logistic.hpp"
#include "nmroc/rng.hpp"
#include "nmroc/simulation.hpp"

#include <cmath>
#include <vector>

using namespace nmroc;

namespace {

bool same_data(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.x(i) != b.x(i) || a.r(i) != b.r(i) || a.y(i) != b.y(i)) return false;
        for (std::size_t j = 0; j < a.covariate_dim(); ++j) {
            if (a.v(i)[j] != b.v(i)[j]) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("random streams") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(a.uniform() != c.uniform());
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    Rng d(7);
    for (int i = 0; i < 1000; ++i) CHECK(d.below(13) < 13);
    // Moments of the normal transform.
    Rng e(8);
    double m = 0.0, m2 = 0.0;
    const int N = 200000;
    for (int i = 0; i < N; ++i) {
        const double z = e.normal();
        m += z;
        m2 += z * z;
    }
    CHECK(std::abs(m / N) < 0.01);
    CHECK(std::abs(m2 / N - 1.0) < 0.02);
}

TEST_CASE("simulate_dataset is reproducible") {
    const Scenario sc = builtin_scenario(3);
    const SimulatedData a = simulate_dataset(sc, 2000, 5);
    const SimulatedData b = simulate_dataset(sc, 2000, 5);
    const SimulatedData c = simulate_dataset(sc, 2000, 6);
    CHECK(same_data(a.observed, b.observed));
    CHECK(a.oracle_y == b.oracle_y);
    CHECK_FALSE(same_data(a.observed, c.observed));
    for (std::size_t i = 0; i < a.observed.size(); ++i) {
        CHECK(a.observed.x(i) >= -1.0);
        CHECK(a.observed.x(i) <= 1.0);
        const double v2 = a.observed.v(i)[1];
        CHECK((v2 == 0.0 || v2 == 1.0));
    }
}

TEST_CASE("metrics by hand") {
    const std::vector<double> one{0.8};
    CHECK(relative_bias_percent(one, 0.75) == doctest::Approx(6.6667).epsilon(1e-4));
    CHECK(mean_squared_error(one, 0.75) == doctest::Approx(0.0025));
    const std::vector<double> exact{0.75};
    CHECK(relative_bias_percent(exact, 0.75) == 0.0);
    CHECK(mean_squared_error(exact, 0.75) == 0.0);
    CHECK(target_name(std::nullopt) == "AUC");
    CHECK(target_name(0.1) == "ROC(0.1)");
}

TEST_CASE("scenarios") {
    CHECK(builtin_scenario(1).beta == 0.0);
    CHECK(builtin_scenario(2).beta == -2.0);
    CHECK(builtin_scenario(3).disease_v1sq == 0.5);
    CHECK_THROWS_AS(builtin_scenario(4), InputError);
    const Scenario s = scenario_from_json(
        R"({"name": "flat", "disease": [0, 0, 0, 0], "verification": [0, 1, 0, 0], "beta": 0})");
    CHECK(s.name == "flat");
    CHECK(s.verification[1] == 1.0);
    CHECK_THROWS_AS(scenario_from_json(R"({"disease": [1, 2]})"), InputError);
    CHECK_THROWS_AS(scenario_from_json("not json"), InputError);
    const ParameterVector eta = builtin_scenario(2).linear_parameters();
    CHECK(eta[0] == 1.7);
    CHECK(eta.beta() == -2.0);
    CHECK(eta[8] == 1.0);
}

TEST_CASE("truth for a biomarker unrelated to disease") {
    const Scenario flat = scenario_from_json(
        R"({"disease": [0.3, 0, 0, 0], "verification": [0, 1, 0, 0], "beta": 0})");
    const std::vector<double> s{0.2};
    const TrueTargets t = true_targets(flat, 200000, 3, s);
    CHECK(std::abs(t.auc - 0.5) < 4.0 * t.auc_se + 1e-3);
    CHECK(std::abs(t.roc[0] - 0.2) < 4.0 * t.roc_se[0] + 1e-3);
    CHECK(std::abs(t.prevalence - 1.0 / (1.0 + std::exp(0.3))) < 4.0 * t.prevalence_se);
    CHECK_THROWS_AS(true_targets(flat, 5, 1, s), InputError);
}

TEST_CASE("scenario 1 is missing at random") {
    // Logistic regression of r on (1, x, v1, v2, y) over oracle data.
    const std::size_t n = 1000000;
    const SimulatedData sim = simulate_dataset(builtin_scenario(1), n, 77);
    RowMatrix z(static_cast<Eigen::Index>(n), 5);
    std::vector<int> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        z.row(k).head(4) = sim.observed.design().row(k);
        z(k, 4) = sim.oracle_y[i];
        r[i] = sim.observed.r(i);
    }
    const LogisticFit fit = fit_logistic(z, r);
    REQUIRE(fit.converged);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(5, 5);
    const Eigen::VectorXd eta = z * fit.coef;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(eta[i]));
        info += p * (1.0 - p) * z.row(i).transpose() * z.row(i);
    }
    const double se = std::sqrt(info.inverse()(4, 4));
    CHECK(std::abs(fit.coef[4]) < 3.0 * se);
    CHECK(fit.coef[1] == doctest::Approx(-1.5).epsilon(0.05));
}

TEST_CASE("campaign aggregates are deterministic across thread counts") {
    CampaignConfig cfg;
    cfg.scenario = builtin_scenario(2);
    cfg.n = 600;
    cfg.B = 6;
    cfg.seed = 3;
    cfg.n_truth = 50000;
    cfg.ipw_bootstrap = 5;
    cfg.threads = 1;
    const McReport a = run_campaign(cfg);
    cfg.threads = 4;
    const McReport b = run_campaign(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(a.rows.size() == 15);
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].method == b.rows[k].method);
        CHECK(a.rows[k].mse == b.rows[k].mse);
        CHECK(a.rows[k].rb_percent == b.rows[k].rb_percent);
        CHECK(a.rows[k].cp == b.rows[k].cp);
        CHECK(a.rows[k].al == b.rows[k].al);
    }
    const MetricSummary* our = a.find("Our", "AUC");
    REQUIRE(our != nullptr);
    CHECK(our->replicates + our->failures == 6);
    CHECK(our->cp.has_value());
    const MetricSummary* ipw = a.find("IPW", "ROC(0.2)");
    REQUIRE(ipw != nullptr);
    CHECK(ipw->cp.has_value());
    CHECK_FALSE(a.find("VER", "AUC")->cp.has_value());
}

TEST_CASE("campaign with one replicate and a supplied truth") {
    CampaignConfig cfg;
    cfg.scenario = builtin_scenario(1);
    cfg.n = 500;
    cfg.B = 1;
    cfg.methods = {Method::FULL};
    cfg.s_points = {0.2};
    // Truth set to the single estimate itself gives zero bias and error.
    const SimulatedData sim = simulate_dataset(cfg.scenario, cfg.n, derive_seed(cfg.seed, 0));
    const std::vector<double> s{0.2};
    const PointEstimates pe = comparator_estimate(sim.observed, Method::FULL, s, sim.oracle_y);
    TrueTargets truth;
    truth.auc = pe.auc;
    truth.s = s;
    truth.roc = pe.roc;
    truth.roc_se = {0.0};
    cfg.truth = truth;
    const McReport rep = run_campaign(cfg);
    CHECK(rep.rows.size() == 2);
    CHECK(rep.rows[0].rb_percent == 0.0);
    CHECK(rep.rows[0].mse == 0.0);
    CHECK(rep.rows[1].mse == 0.0);
    cfg.B = 0;
    CHECK_THROWS_AS(run_campaign(cfg), InputError);
}
