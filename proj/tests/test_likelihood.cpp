#include "doctest.h"

#include "nmroc/error.hpp"
#include "nmroc/likelihood.hpp"
#include "nmroc/rng.hpp"
#include "nmroc/simulation.hpp"

#include <cmath>

using namespace nmroc;

namespace {

Dataset small_data(std::uint64_t seed, std::size_t n = 400) {
    return simulate_dataset(builtin_scenario(2), n, seed).observed;
}

ParameterVector perturbed(const ParameterVector& base, Rng& rng, double scale) {
    Eigen::VectorXd v = base.values();
    for (auto& a : v) a += scale * rng.normal();
    return ParameterVector(base.covariate_dim(), v);
}

// Per-record log-likelihood written out from the model definitions.
double loop_loglik(const Dataset& d, const ParameterVector& eta) {
    double ll = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.x(i);
        const auto v = d.v(i);
        double a = eta[0] + eta[1] * x, b = eta[5] + eta[6] * x;
        for (std::size_t j = 0; j < v.size(); ++j) {
            a += eta[2 + j] * v[j];
            b += eta[7 + j] * v[j];
        }
        const double p1v = 1.0 / (1.0 + std::exp(a));
        const double c = std::log(std::exp(eta.beta()) * p1v + 1.0 - p1v);
        const double pi = 1.0 / (1.0 + std::exp(b + c));
        if (d.r(i) == 1) {
            const int y = *d.y(i);
            ll += y ? std::log(p1v) : std::log(1.0 - p1v);
            ll += std::log(pi);
        } else {
            ll += std::log(1.0 - pi);
        }
    }
    return ll;
}

Eigen::VectorXd fd_score(const Dataset& d, const ParameterVector& eta) {
    Eigen::VectorXd g(eta.values().size());
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double h = 1e-5;
        Eigen::VectorXd up = eta.values(), dn = eta.values();
        up[k] += h;
        dn[k] -= h;
        g[k] = (loglik(d, ParameterVector(2, up)) - loglik(d, ParameterVector(2, dn))) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("log-likelihood equals the loop oracle") {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const Dataset d = small_data(100 + trial);
        const ParameterVector eta = perturbed(builtin_scenario(2).linear_parameters(), rng, 0.5);
        const double ll = loglik(d, eta);
        const double oracle = loop_loglik(d, eta);
        CHECK(std::abs(ll - oracle) <= 1e-12 * std::abs(oracle));
        CHECK(loglik_disease(d, eta.disease()) + loglik_missing(d, eta) == doctest::Approx(ll));
    }
}

TEST_CASE("score matches finite differences and the per-record sum") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const Dataset d = small_data(200 + trial);
        const ParameterVector eta = perturbed(builtin_scenario(2).linear_parameters(), rng, 0.3);
        const Eigen::VectorXd s = score(d, eta);
        const Eigen::VectorXd fd = fd_score(d, eta);
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            CHECK(std::abs(s[k] - fd[k]) <= 1e-6 * std::max(1.0, std::abs(fd[k])));
        }
        const Eigen::MatrixXd u = score_contributions(d, eta);
        CHECK(u.rows() == static_cast<Eigen::Index>(d.size()));
        CHECK((u.colwise().sum().transpose() - s).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("hessian matches finite differences of the score") {
    Rng rng(3);
    const Dataset d = small_data(301);
    const ParameterVector eta = perturbed(builtin_scenario(2).linear_parameters(), rng, 0.3);
    const Eigen::MatrixXd H = hessian(d, eta);
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    for (Eigen::Index k = 0; k < H.cols(); ++k) {
        const double h = 1e-6;
        Eigen::VectorXd up = eta.values(), dn = eta.values();
        up[k] += h;
        dn[k] -= h;
        const Eigen::VectorXd col = (score(d, ParameterVector(2, up)) - score(d, ParameterVector(2, dn))) / (2.0 * h);
        for (Eigen::Index j = 0; j < H.rows(); ++j) {
            CHECK(std::abs(H(j, k) - col[j]) <= 1e-5 * std::max(1.0, std::abs(col[j])));
        }
    }
}

TEST_CASE("verification probabilities are pi_fn per record") {
    const Dataset d = small_data(5, 50);
    const ParameterVector eta = builtin_scenario(2).linear_parameters();
    const auto pi = verification_probabilities(d, eta);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(pi[i] == doctest::Approx(pi_fn(d.x(i), d.v(i), eta)));
}

TEST_CASE("fit_mle reaches a stationary point and recovers the truth") {
    const Scenario sc = builtin_scenario(2);
    const Dataset d = simulate_dataset(sc, 20000, 17).observed;
    const FitResult fit = fit_mle(d);
    REQUIRE(fit.converged);
    CHECK(fit.score_norm < 1e-8);
    CHECK_FALSE(fit.separation);
    CHECK(fit.loglik == doctest::Approx(loglik(d, fit.eta_hat)));
    // Observed information is positive definite at the maximum.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.obs_info);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    const Eigen::MatrixXd cov = fit.obs_info.inverse() / static_cast<double>(d.size());
    const ParameterVector truth = sc.linear_parameters();
    for (Eigen::Index k = 0; k < cov.rows(); ++k) {
        const double z = (fit.eta_hat.values()[k] - truth.values()[k]) / std::sqrt(cov(k, k));
        CHECK(std::abs(z) < 4.0);
    }
    // No nearby point does better.
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        CHECK(loglik(d, perturbed(fit.eta_hat, rng, 1e-3)) <= fit.loglik + 1e-9);
    }
}

TEST_CASE("fit_mle warm start agrees with the default start") {
    const Dataset d = small_data(41, 3000);
    const FitResult a = fit_mle(d);
    const FitResult b = fit_mle(d, a.eta_hat);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK((a.eta_hat.values() - b.eta_hat.values()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(b.iterations <= 2);
}

TEST_CASE("fit_mle needs both classes among verified records") {
    std::vector<Record> recs;
    for (int i = 0; i < 50; ++i) {
        Record r;
        r.x = i / 50.0;
        r.v = {static_cast<double>(i % 3)};
        r.r = i % 2;
        if (r.r) r.y = 1;
        recs.push_back(r);
    }
    const Dataset d(recs);
    CHECK_THROWS_AS(fit_mle(d), InputError);
}

TEST_CASE("identifiability diagnostics") {
    SUBCASE("collinear covariate") {
        std::vector<Record> recs;
        Rng rng(1);
        for (int i = 0; i < 100; ++i) {
            Record r;
            r.x = rng.uniform();
            const double v = rng.normal();
            r.v = {v, 2.0 * v};
            r.r = 1;
            r.y = i % 2;
            recs.push_back(r);
        }
        const auto rep = check_identifiability(Dataset(recs));
        CHECK_FALSE(rep.full_rank);
        CHECK_FALSE(rep.ok());
    }
    SUBCASE("discrete biomarker") {
        std::vector<Record> recs;
        Rng rng(2);
        for (int i = 0; i < 100; ++i) {
            Record r;
            r.x = i % 4;
            r.v = {rng.normal()};
            r.r = 1;
            r.y = i % 2;
            recs.push_back(r);
        }
        const auto rep = check_identifiability(Dataset(recs));
        CHECK(rep.full_rank);
        CHECK(rep.distinct_biomarker_values == 4);
        CHECK_FALSE(rep.biomarker_continuous);
        CHECK_FALSE(rep.warnings.empty());
    }
    SUBCASE("simulated data passes, tiny biomarker effect is flagged") {
        const Dataset d = small_data(3);
        auto rep = check_identifiability(d);
        CHECK(rep.ok());
        ParameterVector eta = builtin_scenario(2).linear_parameters();
        eta.values()[1] = 1e-5;
        check_identifiability_post_fit(rep, eta);
        REQUIRE(rep.biomarker_effect_doubtful);
        CHECK(*rep.biomarker_effect_doubtful);
        CHECK_FALSE(rep.ok());
    }
}
