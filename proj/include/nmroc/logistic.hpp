#pragma once

#include "nmroc/dataset.hpp"

#include <Eigen/Dense>

#include <vector>

namespace nmroc {

struct LogisticFit {
    Eigen::VectorXd coef;  // coefficients of the 1/(1+exp(z'coef)) link
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Newton-Raphson for P(y=1|z) = 1/(1+exp(z'coef)).
LogisticFit fit_logistic(const RowMatrix& z, const std::vector<int>& y,
                         const Eigen::VectorXd* init = nullptr, double tol = 1e-10,
                         int max_iter = 100);

double logistic_loglik(const RowMatrix& z, const std::vector<int>& y, const Eigen::VectorXd& coef);

// Complete-case disease fit: y on (1, x, v') over verified records.
LogisticFit fit_disease_complete_case(const Dataset& data);

// Verification fit ignoring y: r on (1, x, v') over all records.
LogisticFit fit_verification_mar(const Dataset& data);

}  // namespace nmroc
