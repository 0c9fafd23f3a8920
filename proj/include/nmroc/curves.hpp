#pragma once

#include "nmroc/dataset.hpp"
#include "nmroc/ecdf.hpp"
#include "nmroc/likelihood.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nmroc {

// g_i = P(Y=1 | X_i, V_i, R_i) at the fitted theta.
struct GWeights {
    std::vector<double> g;
    double sum_g = 0.0;
    double sum_1mg = 0.0;
};

GWeights compute_g_weights(const Dataset& data, const Eigen::VectorXd& theta);

struct CdfEstimates {
    WeightedEcdf f0;  // healthy: weights 1 - g_i
    WeightedEcdf f1;  // diseased: weights g_i
    GWeights g;
};

// Throws NumericalError when either group has zero total weight.
CdfEstimates estimate_cdfs(const Dataset& data, const Eigen::VectorXd& theta);

// Integral of F0 dF1 by a single merged pass over both supports.
double estimate_auc(const WeightedEcdf& f0, const WeightedEcdf& f1);

// 1 - F1(F0^{-1}(1 - s)).
double estimate_roc(const WeightedEcdf& f0, const WeightedEcdf& f1, double s);

// Sum_ij w1_i w0_j [1(x1_i > x0_j) + 1/2 1(x1_i = x0_j)] / (W1 W0) in O(n log n).
double weighted_mann_whitney(const WeightedEcdf& f0, const WeightedEcdf& f1);

enum class Method { Our, IPW, IG, VER, FULL };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct PointEstimates {
    double auc = 0.0;
    std::vector<double> roc;  // aligned with the requested s values
};

// Point estimates for one method.
//   Our  - joint maximum likelihood, g-weighted CDFs
//   IG   - complete-case disease fit with beta = 0
//   VER  - verified records only
//   FULL - true disease status for every record (needs oracle_y)
//   IPW  - verified records weighted by 1/P(R=1 | y, x, v) from the joint fit (an
//          approximation to the published IPW estimator)
// `fit` may carry an existing joint fit to reuse for Our and IPW.
PointEstimates comparator_estimate(const Dataset& data, Method method, std::span<const double> s,
                                   std::span<const int> oracle_y = {},
                                   const FitResult* fit = nullptr);

// Inverse-probability weights for verified records (0 for unverified ones).
std::vector<double> ipw_weights(const Dataset& data, const ParameterVector& eta);

}  // namespace nmroc
