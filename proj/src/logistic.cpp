#include "nmroc/logistic.hpp"

#include "nmroc/error.hpp"
#include "nmroc/model.hpp"

#include <cmath>

namespace nmroc {

double logistic_loglik(const RowMatrix& z, const std::vector<int>& y, const Eigen::VectorXd& coef) {
    const Eigen::VectorXd eta = z * coef;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // log p = -softplus(eta), log(1-p) = -softplus(-eta)
        ll -= y[static_cast<std::size_t>(i)] ? softplus(eta[i]) : softplus(-eta[i]);
    }
    return ll;
}

LogisticFit fit_logistic(const RowMatrix& z, const std::vector<int>& y,
                         const Eigen::VectorXd* init, double tol, int max_iter) {
    const Eigen::Index n = z.rows();
    const Eigen::Index k = z.cols();
    if (static_cast<std::size_t>(n) != y.size()) throw InputError("fit_logistic: size mismatch");
    if (n == 0) throw InputError("fit_logistic: no observations");

    LogisticFit fit;
    fit.coef = init ? *init : Eigen::VectorXd::Zero(k);
    fit.loglik = logistic_loglik(z, y, fit.coef);

    Eigen::VectorXd resid(n);
    Eigen::VectorXd w(n);
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd eta = z * fit.coef;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = expit_neg(eta[i]);
            resid[i] = p - y[static_cast<std::size_t>(i)];
            w[i] = p * (1.0 - p);
        }
        const Eigen::VectorXd score = z.transpose() * resid;
        if (score.cwiseAbs().maxCoeff() / static_cast<double>(n) < tol) {
            fit.converged = true;
            fit.iterations = it;
            return fit;
        }
        Eigen::MatrixXd info = z.transpose() * w.asDiagonal() * z;
        info.diagonal().array() += 1e-12 * (1.0 + info.diagonal().array().abs());
        const Eigen::VectorXd step = info.ldlt().solve(score);

        double t = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half) {
            const Eigen::VectorXd cand = fit.coef + t * step;
            const double ll = logistic_loglik(z, y, cand);
            if (std::isfinite(ll) && ll >= fit.loglik - 1e-12 * std::abs(fit.loglik)) {
                fit.coef = cand;
                fit.loglik = ll;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        fit.iterations = it + 1;
        if (!improved) break;
    }
    // Final convergence check at the last iterate.
    const Eigen::VectorXd eta = z * fit.coef;
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = expit_neg(eta[i]) - y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd score = z.transpose() * resid;
    fit.converged = score.cwiseAbs().maxCoeff() / static_cast<double>(n) < tol;
    return fit;
}

LogisticFit fit_disease_complete_case(const Dataset& data) {
    const Dataset ver = data.verified_only();
    std::vector<int> y(ver.size());
    for (std::size_t i = 0; i < ver.size(); ++i) y[i] = *ver.y(i);
    return fit_logistic(ver.design(), y);
}

LogisticFit fit_verification_mar(const Dataset& data) {
    return fit_logistic(data.design(), data.verified());
}

}  // namespace nmroc
