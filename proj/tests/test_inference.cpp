#include "doctest.h"

#include "nmroc/error.hpp"
#include "nmroc/inference.hpp"
#include "nmroc/simulation.hpp"

#include <cmath>
#include <vector>

using namespace nmroc;

namespace {

struct Fitted {
    Dataset data;
    FitResult fit;
    CdfEstimates cdf;
};

Fitted fitted(std::uint64_t seed, std::size_t n = 3000, int scenario = 2) {
    Dataset d = simulate_dataset(builtin_scenario(scenario), n, seed).observed;
    FitResult f = fit_mle(d);
    REQUIRE(f.converged);
    CdfEstimates c = estimate_cdfs(d, f.eta_hat.theta());
    return {std::move(d), std::move(f), std::move(c)};
}

}  // namespace

TEST_CASE("kernel density values") {
    const std::vector<double> x{0.0};
    const auto f = WeightedEcdf::unweighted(x);
    CHECK(kde_eval(f, 1.0, 0.0) == doctest::Approx(0.398942).epsilon(1e-6));
    CHECK(kde_eval(f, 2.0, 0.0) == doctest::Approx(0.199471).epsilon(1e-6));
    CHECK(kde_eval(f, 1.0, 1.0) == doctest::Approx(0.241971).epsilon(1e-6));
    CHECK_THROWS_AS(kde_eval(f, 0.0, 0.0), InputError);
    // Integrates to one.
    const std::vector<double> y{-1.0, 0.2, 0.3, 2.0};
    const std::vector<double> w{0.1, 0.4, 0.3, 0.2};
    const WeightedEcdf g(y, w);
    double total = 0.0;
    const double step = 0.001;
    for (double t = -10.0; t < 10.0; t += step) total += kde_eval(g, 0.4, t) * step;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("weighted spread") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const WeightedSpread a = weighted_spread(x, std::vector<double>(4, 1.0));
    CHECK(a.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(a.iqr == doctest::Approx(2.0));
    // Frequency weights: weight 2 is the same as a duplicated record.
    const WeightedSpread b = weighted_spread(x, std::vector<double>(4, 2.0));
    CHECK(b.sd == doctest::Approx(std::sqrt(10.0 / 7.0)));
    CHECK(b.iqr == doctest::Approx(2.0));
}

TEST_CASE("bandwidth rule by hand") {
    std::vector<Record> recs;
    for (int i = 0; i < 8; ++i) {
        Record r;
        r.x = i;
        r.r = 0;
        recs.push_back(r);
    }
    const Dataset d(recs);
    GWeights gw;
    gw.g = {0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0};
    gw.sum_g = 4.0;
    gw.sum_1mg = 4.0;
    const Bandwidths bw = bandwidths(d, gw);
    // Each group is {a, a+1, a+2, a+3}: sd = sqrt(5/3), IQR = 2.
    const double expected = 1.06 * std::pow(8.0, -0.2) * std::min(std::sqrt(5.0 / 3.0), 2.0 / 1.34);
    CHECK(bw.h0 == doctest::Approx(expected));
    CHECK(bw.h1 == doctest::Approx(expected));
    CHECK(bw.warnings.empty());

    gw.g = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0};
    gw.sum_g = 7.0;
    gw.sum_1mg = 1.0;
    const Bandwidths one = bandwidths(d, gw);
    CHECK(one.h0 == doctest::Approx(1.06 * std::pow(8.0, -0.2) * 7.0 / 4.0));
    CHECK(one.warnings.size() == 1);
}

TEST_CASE("normal quantile and Wald interval") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
    const Interval ci = wald_ci(0.8, 0.25, 100, 0.05);
    CHECK(ci.lo == doctest::Approx(0.8 - 0.0979982).epsilon(1e-6));
    CHECK(ci.hi == doctest::Approx(0.8 + 0.0979982).epsilon(1e-6));
    CHECK(ci.contains(0.8));
    CHECK_FALSE(ci.contains(0.9));
    // Not truncated to [0, 1].
    CHECK(wald_ci(0.99, 1.0, 10, 0.05).hi > 1.0);
    CHECK_THROWS_AS(wald_ci(0.5, -1.0, 10, 0.05), InputError);
}

TEST_CASE("influence terms are centered and Sigma_Z is PSD") {
    const Fitted f = fitted(31);
    const PluginContext ctx(f.data, f.fit, f.cdf);
    const auto k2 = static_cast<Eigen::Index>(f.fit.eta_hat.size());
    for (double s : {0.05, 0.1, 0.2, 0.5, 0.9}) {
        const double xi = f.cdf.f0.quantile(1.0 - s);
        const Eigen::MatrixXd u = ctx.influence(xi);
        const Eigen::VectorXd mean = u.colwise().mean();
        CHECK(mean.head(k2).cwiseAbs().maxCoeff() < 1e-7);
        for (Eigen::Index k = k2; k < k2 + 4; ++k) CHECK(std::abs(mean[k]) < 1e-12);
        const Eigen::MatrixXd sz = ctx.sigma_z(xi);
        CHECK((sz - u.transpose() * u / static_cast<double>(f.data.size())).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sz);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * es.eigenvalues().maxCoeff());
    }
}

TEST_CASE("averaged gradients match a loop over records") {
    const Fitted f = fitted(32, 800);
    const PluginContext ctx(f.data, f.fit, f.cdf);
    const auto theta = f.fit.eta_hat.theta();
    const std::vector<double> th(theta.data(), theta.data() + theta.size());
    const double auc = estimate_auc(f.cdf.f0, f.cdf.f1);
    const double xi = f.cdf.f0.quantile(0.8);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(5), e2 = e1, e3 = e1, e4 = e1;
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        const Eigen::VectorXd gg = g_gradient(f.data.x(i), f.data.v(i), f.data.r(i), th);
        const double ind = f.data.x(i) <= xi ? 1.0 : 0.0;
        e1 += gg * (f.cdf.f0.eval(f.data.x(i)) - auc);
        e2 += gg * (1.0 - f.cdf.f1.eval_left(f.data.x(i)) - auc);
        e3 += gg * (ind - f.cdf.f0.eval(xi));
        e4 += gg * (ind - f.cdf.f1.eval(xi));
    }
    const double n = static_cast<double>(f.data.size());
    CHECK((ctx.e1() - e1 / n).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ctx.e2() - e2 / n).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ctx.e3(xi) - e3 / n).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ctx.e4(xi) - e4 / n).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ctx.lambda_hat() == doctest::Approx(f.cdf.g.sum_g / n));
}

TEST_CASE("variance estimates are positive and finite") {
    const Fitted f = fitted(33);
    const PluginContext ctx(f.data, f.fit, f.cdf);
    const VarianceEstimate va = ctx.auc_variance();
    CHECK(va.sigma2 > 0.0);
    CHECK(std::isfinite(va.sigma2));
    CHECK(va.point == estimate_auc(f.cdf.f0, f.cdf.f1));
    CHECK(variance_auc(f.data, f.fit, f.cdf).sigma2 == va.sigma2);
    for (double s : {0.01, 0.1, 0.2, 0.5, 0.99}) {
        const VarianceEstimate vr = ctx.roc_variance(s);
        CHECK(vr.sigma2 > 0.0);
        CHECK(vr.density_ratio > 0.0);
        CHECK(vr.xi == f.cdf.f0.quantile(1.0 - s));
    }
    CHECK_THROWS_AS(ctx.roc_variance(0.0), InputError);
}

TEST_CASE("affine rescaling of the biomarker leaves AUC inference unchanged") {
    const SimulatedData sim = simulate_dataset(builtin_scenario(2), 3000, 34);
    std::vector<Record> recs;
    for (std::size_t i = 0; i < sim.observed.size(); ++i) {
        Record r = sim.observed.record(i);
        r.x = 3.0 * r.x - 1.0;
        recs.push_back(r);
    }
    const Dataset scaled(recs);
    auto run = [](const Dataset& d) {
        const FitResult fit = fit_mle(d, std::nullopt, FitOptions{1e-11, 500});
        const CdfEstimates cdf = estimate_cdfs(d, fit.eta_hat.theta());
        return PluginContext(d, fit, cdf).auc_variance();
    };
    const VarianceEstimate a = run(sim.observed), b = run(scaled);
    CHECK(a.point == doctest::Approx(b.point).epsilon(1e-8));
    CHECK(a.sigma2 == doctest::Approx(b.sigma2).epsilon(1e-6));
}

TEST_CASE("singular information is reported") {
    const Fitted f = fitted(35, 500);
    FitResult broken = f.fit;
    broken.obs_info.row(0).setZero();
    broken.obs_info.col(0).setZero();
    CHECK_THROWS_AS(PluginContext(f.data, broken, f.cdf), NumericalError);
}
