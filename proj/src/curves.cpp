#include "nmroc/curves.hpp"

#include "nmroc/error.hpp"
#include "nmroc/logistic.hpp"

#include <cctype>
#include <cmath>
#include <string>

namespace nmroc {

GWeights compute_g_weights(const Dataset& data, const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(theta.size()) != data.covariate_dim() + 3) {
        throw InputError("compute_g_weights: theta has the wrong length");
    }
    const auto q = static_cast<Eigen::Index>(data.covariate_dim() + 2);
    const Eigen::VectorXd a = data.design() * theta.head(q);
    const double beta = theta[q];
    GWeights gw;
    gw.g.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double g = expit_neg(a[static_cast<Eigen::Index>(i)] + (data.r(i) - 1) * beta);
        gw.g[i] = g;
        gw.sum_g += g;
        gw.sum_1mg += 1.0 - g;
    }
    return gw;
}

CdfEstimates estimate_cdfs(const Dataset& data, const Eigen::VectorXd& theta) {
    GWeights gw = compute_g_weights(data, theta);
    if (!(gw.sum_g > 0.0)) throw NumericalError("estimate_cdfs: diseased group has zero weight");
    if (!(gw.sum_1mg > 0.0)) throw NumericalError("estimate_cdfs: healthy group has zero weight");
    std::vector<double> w0(gw.g.size());
    for (std::size_t i = 0; i < w0.size(); ++i) w0[i] = 1.0 - gw.g[i];
    CdfEstimates out{WeightedEcdf(data.biomarker(), w0), WeightedEcdf(data.biomarker(), gw.g),
                     std::move(gw)};
    return out;
}

double estimate_auc(const WeightedEcdf& f0, const WeightedEcdf& f1) {
    const auto& s0 = f0.support();
    const auto& c0 = f0.cumulative();
    const auto& s1 = f1.support();
    const auto& w1 = f1.weights();
    double auc = 0.0;
    std::size_t k = 0;  // number of f0 atoms <= current f1 atom
    for (std::size_t j = 0; j < s1.size(); ++j) {
        while (k < s0.size() && s0[k] <= s1[j]) ++k;
        if (k > 0) auc += w1[j] * c0[k - 1];
    }
    return auc;
}

double estimate_roc(const WeightedEcdf& f0, const WeightedEcdf& f1, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("estimate_roc: s outside [0,1]");
    return 1.0 - f1.eval(f0.quantile(1.0 - s));
}

double weighted_mann_whitney(const WeightedEcdf& f0, const WeightedEcdf& f1) {
    const auto& s1 = f1.support();
    const auto& w1 = f1.weights();
    double auc = 0.0;
    for (std::size_t j = 0; j < s1.size(); ++j) {
        const double below = f0.eval_left(s1[j]);
        const double at = f0.eval(s1[j]) - below;
        auc += w1[j] * (below + 0.5 * at);
    }
    return auc;
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Our: return "Our";
        case Method::IPW: return "IPW";
        case Method::IG: return "IG";
        case Method::VER: return "VER";
        case Method::FULL: return "Full";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : {Method::Our, Method::IPW, Method::IG, Method::VER, Method::FULL}) {
        std::string_view ref = method_name(m);
        if (ref.size() != name.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(ref[i])) !=
                std::tolower(static_cast<unsigned char>(name[i]))) {
                same = false;
                break;
            }
        }
        if (same) return m;
    }
    return std::nullopt;
}

std::vector<double> ipw_weights(const Dataset& data, const ParameterVector& eta) {
    const Eigen::VectorXd b = data.design() * eta.psi();
    std::vector<double> w(data.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.r(i) != 1) continue;
        // 1 / P(R=1 | y, x, v) = 1 + exp(psi'z + beta y)
        w[i] = 1.0 + std::exp(b[static_cast<Eigen::Index>(i)] + eta.beta() * *data.y(i));
    }
    return w;
}

namespace {

PointEstimates from_cdfs(const WeightedEcdf& f0, const WeightedEcdf& f1, double auc,
                         std::span<const double> s) {
    PointEstimates pe;
    pe.auc = auc;
    pe.roc.reserve(s.size());
    for (double si : s) pe.roc.push_back(estimate_roc(f0, f1, si));
    return pe;
}

// Split biomarker values by class with per-record weights.
PointEstimates two_group_estimate(const std::vector<double>& x1, const std::vector<double>& w1,
                                  const std::vector<double>& x0, const std::vector<double>& w0,
                                  std::span<const double> s, const char* who) {
    if (x1.empty() || x0.empty()) {
        throw NumericalError(std::string(who) + ": needs at least one subject in each class");
    }
    const WeightedEcdf f1(x1, w1);
    const WeightedEcdf f0(x0, w0);
    return from_cdfs(f0, f1, weighted_mann_whitney(f0, f1), s);
}

void require_verified_classes(const Dataset& data, const char* who) {
    if (data.verified_count() < 2 || data.count_verified_with(0) == 0 ||
        data.count_verified_with(1) == 0) {
        throw NumericalError(std::string(who) +
                             ": verified records must include both classes");
    }
}

}  // namespace

PointEstimates comparator_estimate(const Dataset& data, Method method, std::span<const double> s,
                                   std::span<const int> oracle_y, const FitResult* fit) {
    switch (method) {
        case Method::Our: {
            FitResult local;
            if (!fit) {
                local = fit_mle(data);
                fit = &local;
            }
            if (!fit->converged) throw NumericalError("Our: likelihood maximization did not converge");
            const CdfEstimates cdf = estimate_cdfs(data, fit->eta_hat.theta());
            return from_cdfs(cdf.f0, cdf.f1, estimate_auc(cdf.f0, cdf.f1), s);
        }
        case Method::IG: {
            require_verified_classes(data, "IG");
            const LogisticFit lf = fit_disease_complete_case(data);
            if (!lf.converged) throw NumericalError("IG: complete-case fit did not converge");
            Eigen::VectorXd theta(lf.coef.size() + 1);
            theta << lf.coef, 0.0;
            const CdfEstimates cdf = estimate_cdfs(data, theta);
            return from_cdfs(cdf.f0, cdf.f1, estimate_auc(cdf.f0, cdf.f1), s);
        }
        case Method::VER: {
            require_verified_classes(data, "VER");
            std::vector<double> x1, x0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (data.r(i) != 1) continue;
                (*data.y(i) ? x1 : x0).push_back(data.x(i));
            }
            return two_group_estimate(x1, std::vector<double>(x1.size(), 1.0), x0,
                                      std::vector<double>(x0.size(), 1.0), s, "VER");
        }
        case Method::FULL: {
            if (oracle_y.size() != data.size()) {
                throw InputError("Full: requires the true disease status of every record");
            }
            std::vector<double> x1, x0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                (oracle_y[i] ? x1 : x0).push_back(data.x(i));
            }
            return two_group_estimate(x1, std::vector<double>(x1.size(), 1.0), x0,
                                      std::vector<double>(x0.size(), 1.0), s, "Full");
        }
        case Method::IPW: {
            require_verified_classes(data, "IPW");
            FitResult local;
            if (!fit) {
                local = fit_mle(data);
                fit = &local;
            }
            if (!fit->converged) throw NumericalError("IPW: likelihood maximization did not converge");
            const std::vector<double> w = ipw_weights(data, fit->eta_hat);
            std::vector<double> x1, w1, x0, w0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (data.r(i) != 1) continue;
                if (*data.y(i)) {
                    x1.push_back(data.x(i));
                    w1.push_back(w[i]);
                } else {
                    x0.push_back(data.x(i));
                    w0.push_back(w[i]);
                }
            }
            return two_group_estimate(x1, w1, x0, w0, s, "IPW");
        }
    }
    throw InputError("unknown method");
}

}  // namespace nmroc
