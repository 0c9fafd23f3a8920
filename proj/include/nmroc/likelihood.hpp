#pragma once

// Observed-data log-likelihood l_n = l_n1(mu) + l_n2(mu, phi) and its maximizer.
//
//   l_n1 = sum_i r_i [ y_i log p1_i + (1 - y_i) log(1 - p1_i) ]
//   l_n2 = sum_i [ r_i log pi_i + (1 - r_i) log(1 - pi_i) ]
//
// with pi the induced verification probability P(R=1 | x, v).

#include "nmroc/dataset.hpp"
#include "nmroc/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace nmroc {

double loglik_disease(const Dataset& data, const DiseaseParams& mu);
double loglik_missing(const Dataset& data, const ParameterVector& eta);
double loglik(const Dataset& data, const ParameterVector& eta);

// pi_fn for every record.
std::vector<double> verification_probabilities(const Dataset& data, const ParameterVector& eta);

// d l_n / d eta.
Eigen::VectorXd score(const Dataset& data, const ParameterVector& eta);

// Per-record score contributions, n x k2. Column sums equal score().
Eigen::MatrixXd score_contributions(const Dataset& data, const ParameterVector& eta);

// d^2 l_n / d eta d eta'.
Eigen::MatrixXd hessian(const Dataset& data, const ParameterVector& eta);

struct IdentifiabilityReport {
    bool full_rank = true;
    double min_singular_value = 0.0;  // of the design (1, x, v'), relative to the largest
    std::size_t distinct_biomarker_values = 0;
    bool biomarker_continuous = true;
    std::optional<bool> biomarker_effect_doubtful;  // set after a fit
    std::vector<std::string> warnings;

    bool ok() const { return warnings.empty(); }
};

inline constexpr double kRankThreshold = 1e-8;
inline constexpr std::size_t kMinDistinctBiomarker = 10;
inline constexpr double kBiomarkerEffectThreshold = 1e-3;

IdentifiabilityReport check_identifiability(const Dataset& data);
// Adds the post-fit |mu2| check to a pre-fit report.
void check_identifiability_post_fit(IdentifiabilityReport& report, const ParameterVector& eta_hat);

struct FitOptions {
    double tol = 1e-8;     // sup-norm of score / n
    int max_iter = 500;
};

struct FitResult {
    ParameterVector eta_hat;
    double loglik = 0.0;
    double score_norm = 0.0;   // sup-norm of score / n at eta_hat
    Eigen::MatrixXd obs_info;  // -Hessian / n at eta_hat
    bool converged = false;
    int iterations = 0;
    bool separation = false;   // some |eta_hat_j| > 50
};

// Starting point: complete-case logistic fit for mu, beta = 0, and a logistic
// fit of r on (1, x, v') for psi.
ParameterVector default_start(const Dataset& data);

FitResult fit_mle(const Dataset& data, const std::optional<ParameterVector>& init = std::nullopt,
                  const FitOptions& opts = {});

}  // namespace nmroc
