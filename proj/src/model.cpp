#include "nmroc/model.hpp"

#include "nmroc/error.hpp"

#include <cmath>
#include <string>

namespace nmroc {

namespace {

void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw InputError(std::string(what) + ": covariate dimension " + std::to_string(got) +
                         " does not match parameter dimension " + std::to_string(want));
    }
}

double dot_tail(std::span<const double> coef, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += coef[j] * v[j];
    return s;
}

}  // namespace

ParameterVector::ParameterVector(std::size_t p)
    : p_(p), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * p + 5))) {}

ParameterVector::ParameterVector(std::size_t p, Eigen::VectorXd values)
    : p_(p), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != 2 * p + 5) {
        throw InputError("parameter vector of length " + std::to_string(values_.size()) +
                         " does not match 2p+5 = " + std::to_string(2 * p + 5));
    }
}

ParameterVector::ParameterVector(const DiseaseParams& mu, const VerificationParams& phi)
    : ParameterVector(static_cast<std::size_t>(mu.covariates.size())) {
    check_dim(static_cast<std::size_t>(phi.covariates.size()), p_, "ParameterVector");
    const auto p = static_cast<Eigen::Index>(p_);
    values_[0] = mu.intercept;
    values_[1] = mu.biomarker;
    values_.segment(2, p) = mu.covariates;
    values_[p + 2] = phi.beta;
    values_[p + 3] = phi.intercept;
    values_[p + 4] = phi.biomarker;
    values_.segment(p + 5, p) = phi.covariates;
}

DiseaseParams ParameterVector::disease() const {
    const auto p = static_cast<Eigen::Index>(p_);
    return {values_[0], values_[1], values_.segment(2, p)};
}

VerificationParams ParameterVector::verification() const {
    const auto p = static_cast<Eigen::Index>(p_);
    return {values_[p + 3], values_[p + 4], values_.segment(p + 5, p), values_[p + 2]};
}

double expit_neg(double t) {
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
}

double softplus(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

double log_add_exp(double a, double b) {
    const double m = std::max(a, b);
    if (std::isinf(m)) return m;
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double c_linear(double a, double beta) {
    // log(e^beta + e^a) - log(1 + e^a)
    return log_add_exp(beta, a) - softplus(a);
}

double disease_predictor(double x, std::span<const double> v, const DiseaseParams& mu) {
    check_dim(v.size(), static_cast<std::size_t>(mu.covariates.size()), "p1");
    return mu.intercept + mu.biomarker * x +
           dot_tail({mu.covariates.data(), static_cast<std::size_t>(mu.covariates.size())}, v);
}

double p1(double x, std::span<const double> v, const DiseaseParams& mu) {
    return expit_neg(disease_predictor(x, v, mu));
}

double c_fn(double x, std::span<const double> v, const DiseaseParams& mu, double beta) {
    return c_linear(disease_predictor(x, v, mu), beta);
}

double pi_fn(double x, std::span<const double> v, const ParameterVector& eta) {
    check_dim(v.size(), eta.covariate_dim(), "pi_fn");
    const VerificationParams phi = eta.verification();
    const double b =
        phi.intercept + phi.biomarker * x +
        dot_tail({phi.covariates.data(), static_cast<std::size_t>(phi.covariates.size())}, v);
    return expit_neg(b + c_fn(x, v, eta.disease(), phi.beta));
}

double g_fn(double x, std::span<const double> v, int r, std::span<const double> theta) {
    check_dim(v.size() + 3, theta.size(), "g_fn");
    const double a = theta[0] + theta[1] * x + dot_tail(theta.subspan(2), v);
    return expit_neg(a + (r - 1) * theta[v.size() + 2]);
}

Eigen::VectorXd g_gradient(double x, std::span<const double> v, int r,
                           std::span<const double> theta) {
    const double g = g_fn(x, v, r, theta);
    const double w = -g * (1.0 - g);
    Eigen::VectorXd grad(static_cast<Eigen::Index>(theta.size()));
    grad[0] = w;
    grad[1] = w * x;
    for (std::size_t j = 0; j < v.size(); ++j) grad[static_cast<Eigen::Index>(j + 2)] = w * v[j];
    grad[static_cast<Eigen::Index>(v.size() + 2)] = w * (r - 1);
    return grad;
}

}  // namespace nmroc
