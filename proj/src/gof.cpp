#include "nmroc/gof.hpp"

#include "nmroc/error.hpp"
#include "nmroc/logistic.hpp"
#include "nmroc/parallel.hpp"
#include "nmroc/rng.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace nmroc {

namespace {

constexpr double kMaxFailureRate = 0.10;
constexpr std::size_t kMinVerified = 20;

double disease_T(const Dataset& ver, const Eigen::VectorXd& coef) {
    const Eigen::VectorXd a = ver.design() * coef;
    std::vector<int> y(ver.size());
    std::vector<double> p(ver.size());
    for (std::size_t i = 0; i < ver.size(); ++i) {
        y[i] = *ver.y(i);
        p[i] = expit_neg(a[static_cast<Eigen::Index>(i)]);
    }
    return unweighted_sum_of_squares(y, p);
}

double verification_T(const Dataset& data, const ParameterVector& eta) {
    return unweighted_sum_of_squares(data.verified(), verification_probabilities(data, eta));
}

std::vector<std::size_t> resample(std::size_t n, Rng& rng) {
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    return rows;
}

// Runs B replicates; each returns a T value or nothing on failure.
template <class Replicate>
GofResult bootstrap(double raw_T, const GofOptions& opts, const char* who, Replicate&& replicate) {
    if (opts.B < 2) throw InputError(std::string(who) + ": need at least 2 bootstrap replicates");
    std::vector<std::optional<double>> ts(static_cast<std::size_t>(opts.B));
    parallel_for(ts.size(), opts.threads, [&](std::size_t b) {
        Rng rng(opts.seed, b);
        try {
            ts[b] = replicate(rng);
        } catch (const std::exception&) {
            ts[b] = std::nullopt;
        }
    });

    GofResult res;
    res.raw_T = raw_T;
    res.B = opts.B;
    for (const auto& t : ts) {
        if (t && std::isfinite(*t)) {
            res.replicate_Ts.push_back(*t);
        } else {
            ++res.failures;
        }
    }
    if (res.failures > kMaxFailureRate * opts.B) {
        throw NumericalError(std::string(who) + ": " + std::to_string(res.failures) + " of " +
                             std::to_string(opts.B) + " bootstrap refits failed");
    }
    const double m = static_cast<double>(res.replicate_Ts.size());
    double mean = 0.0;
    for (double t : res.replicate_Ts) mean += t;
    mean /= m;
    double ss = 0.0;
    for (double t : res.replicate_Ts) ss += (t - mean) * (t - mean);
    res.se_boot = std::sqrt(ss / (m - 1.0));
    if (!(res.se_boot > 0.0)) throw NumericalError(std::string(who) + ": bootstrap SE is zero");
    res.statistic = raw_T / res.se_boot;
    res.p_value = std::erfc(std::abs(res.statistic) / std::sqrt(2.0));
    return res;
}

}  // namespace

double unweighted_sum_of_squares(std::span<const int> outcome, std::span<const double> prob) {
    if (outcome.size() != prob.size()) throw InputError("unweighted_sum_of_squares: size mismatch");
    double t = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double d = outcome[i] - prob[i];
        t += d * d - prob[i] * (1.0 - prob[i]);
    }
    return t;
}

GofResult gof_disease(const Dataset& data, const GofOptions& opts) {
    if (data.verified_count() < kMinVerified || data.count_verified_with(0) == 0 ||
        data.count_verified_with(1) == 0) {
        throw InputError("gof_disease: needs at least 20 verified records with both classes");
    }
    const Dataset ver = data.verified_only();
    std::vector<int> y(ver.size());
    for (std::size_t i = 0; i < ver.size(); ++i) y[i] = *ver.y(i);
    const LogisticFit fit = fit_logistic(ver.design(), y);
    if (!fit.converged) throw NumericalError("gof_disease: disease model fit did not converge");

    return bootstrap(disease_T(ver, fit.coef), opts, "gof_disease", [&](Rng& rng) -> std::optional<double> {
        const auto rows = resample(ver.size(), rng);
        const Dataset bs = ver.subset(rows);
        std::vector<int> yb(bs.size());
        for (std::size_t i = 0; i < bs.size(); ++i) yb[i] = *bs.y(i);
        const LogisticFit bf = fit_logistic(bs.design(), yb, &fit.coef);
        if (!bf.converged) return std::nullopt;
        return disease_T(bs, bf.coef);
    });
}

GofResult gof_verification(const Dataset& data, const GofOptions& opts, const FitResult* fit) {
    FitResult local;
    if (!fit) {
        local = fit_mle(data, std::nullopt, opts.fit);
        fit = &local;
    }
    if (!fit->converged) throw NumericalError("gof_verification: joint fit did not converge");
    const ParameterVector eta_hat = fit->eta_hat;

    return bootstrap(verification_T(data, eta_hat), opts, "gof_verification",
                     [&](Rng& rng) -> std::optional<double> {
        const auto rows = resample(data.size(), rng);
        const Dataset bs = data.subset(rows);
        const FitResult bf = fit_mle(bs, eta_hat, opts.fit);
        if (!bf.converged) return std::nullopt;
        return verification_T(bs, bf.eta_hat);
    });
}

}  // namespace nmroc
