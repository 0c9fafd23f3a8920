#pragma once

// Disease and verification models with the 1/(1+exp(t)) link.
//
// Disease model:       P(Y=1 | x, v, R=1) = 1 / (1 + exp(mu1 + mu2 x + mu3'v))
// Verification model:  P(R=1 | y, x, v)   = 1 / (1 + exp(psi1 + psi2 x + psi3'v + beta y))
//
// A larger linear predictor gives a SMALLER probability throughout.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nmroc {

// One subject. y is absent for unverified subjects when reading real data.
struct Record {
    double x = 0.0;
    std::vector<double> v;
    int r = 0;
    std::optional<int> y;
};

struct DiseaseParams {
    double intercept = 0.0;
    double biomarker = 0.0;
    Eigen::VectorXd covariates;
};

struct VerificationParams {
    double intercept = 0.0;
    double biomarker = 0.0;
    Eigen::VectorXd covariates;
    double beta = 0.0;  // 0 is the ignorable (MAR) submodel
};

// Flat parameter vector eta = (mu1, mu2, mu3', beta, psi1, psi2, psi3').
// The leading theta block (mu', beta) has k1 = p + 3 entries, eta has k2 = 2p + 5.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(std::size_t p);
    ParameterVector(std::size_t p, Eigen::VectorXd values);
    ParameterVector(const DiseaseParams& mu, const VerificationParams& phi);

    std::size_t covariate_dim() const { return p_; }
    std::size_t theta_size() const { return p_ + 3; }
    std::size_t size() const { return 2 * p_ + 5; }

    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

    // (mu1, mu2, mu3') as a coefficient vector over the design row (1, x, v').
    Eigen::VectorXd mu() const { return values_.head(p_ + 2); }
    double beta() const { return values_[static_cast<Eigen::Index>(p_ + 2)]; }
    // (psi1, psi2, psi3') over the design row (1, x, v').
    Eigen::VectorXd psi() const { return values_.tail(p_ + 2); }
    Eigen::VectorXd theta() const { return values_.head(p_ + 3); }

    DiseaseParams disease() const;
    VerificationParams verification() const;

private:
    std::size_t p_ = 0;
    Eigen::VectorXd values_;
};

// Stable 1/(1+exp(t)).
double expit_neg(double t);

// log(1 + exp(t)) without overflow.
double softplus(double t);

// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

// c as a function of the disease linear predictor a and beta:
// log{e^beta p1 + 1 - p1} with p1 = expit_neg(a), i.e. log(e^beta + e^a) - log(1 + e^a).
double c_linear(double a, double beta);

double disease_predictor(double x, std::span<const double> v, const DiseaseParams& mu);

// P(Y=1 | x, v, R=1).
double p1(double x, std::span<const double> v, const DiseaseParams& mu);

// log E(e^{beta Y} | x, v, R=1).
double c_fn(double x, std::span<const double> v, const DiseaseParams& mu, double beta);

// Induced P(R=1 | x, v).
double pi_fn(double x, std::span<const double> v, const ParameterVector& eta);

// P(Y=1 | x, v, r) evaluated at theta = (mu', beta).
double g_fn(double x, std::span<const double> v, int r, std::span<const double> theta);

// d g_fn / d theta = -g(1-g) (1, x, v', r-1).
Eigen::VectorXd g_gradient(double x, std::span<const double> v, int r,
                           std::span<const double> theta);

}  // namespace nmroc
