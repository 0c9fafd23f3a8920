#pragma once

// Plug-in asymptotic variances for the AUC and ROC(s) estimators.
//
// With U_i the per-record stack
//   ( score_i(eta_hat),
//     g_i {F0(X_i) - AUC},
//     (1 - g_i) {1 - F1(X_i-) - AUC},
//     (1 - g_i) {1(X_i <= xi) - F0(xi)},
//     g_i {1(X_i <= xi) - F1(xi)} )
// and Sigma_Z = n^{-1} sum_i U_i U_i', the variances are H' Sigma_Z H with
//   H_auc = ( J^{-1} I (E1/lambda - E2/(1-lambda)); 1/lambda; 1/(1-lambda); 0; 0 )
//   H_roc = ( J^{-1} I (-E4/lambda - rho E3/(1-lambda)); 0; 0; rho/(1-lambda); -1/lambda )
// where rho = f1(xi)/f0(xi), xi = F0^{-1}(1-s), and E1..E4 are sample averages of
// dg/dtheta times the corresponding centered terms.

#include "nmroc/curves.hpp"
#include "nmroc/dataset.hpp"
#include "nmroc/ecdf.hpp"
#include "nmroc/likelihood.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace nmroc {

// Gaussian-kernel density of a discrete distribution: sum_j w_j K((x_j - x)/h)/h.
double kde_eval(const WeightedEcdf& f, double h, double x);

struct Bandwidths {
    double h0 = 0.0;
    double h1 = 0.0;
    std::vector<std::string> warnings;
};

struct WeightedSpread {
    double sd = 0.0;   // frequency-weight convention: denominator sum(w) - 1
    double iqr = 0.0;  // from inf-type weighted quantiles
};

WeightedSpread weighted_spread(std::span<const double> x, std::span<const double> w);

// 1.06 n^{-1/5} min(sd, IQR/1.34) per group, with (1-g) and g weights.
Bandwidths bandwidths(const Dataset& data, const GWeights& gw);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double a) const { return lo <= a && a <= hi; }
};

// Standard normal quantile.
double normal_quantile(double p);

// point -/+ z_{1-alpha/2} sqrt(sigma2/n); never truncated to [0,1].
Interval wald_ci(double point, double sigma2, std::size_t n, double alpha);

struct VarianceEstimate {
    double sigma2 = 0.0;       // asymptotic variance of sqrt(n)(estimate - truth)
    bool clamped = false;      // a negative quadratic form was clamped to 0
    double point = 0.0;        // AUC or ROC(s) estimate
    double xi = 0.0;           // ROC only: F0^{-1}(1-s)
    double density_ratio = 0.0;  // ROC only: f1(xi)/f0(xi)
};

// Reusable pieces for several variance evaluations on one fitted dataset.
class PluginContext {
public:
    PluginContext(const Dataset& data, const FitResult& fit, const CdfEstimates& cdf);

    double lambda_hat() const { return lambda_; }
    double h0() const { return bw_.h0; }
    double h1() const { return bw_.h1; }
    const Bandwidths& bandwidth_info() const { return bw_; }
    double j_condition() const { return j_condition_; }
    const Eigen::MatrixXd& j_inverse() const { return j_inv_; }
    // n x k1 matrix of dg/dtheta per record.
    const Eigen::MatrixXd& g_gradients() const { return g_grad_; }
    double auc() const { return auc_; }

    // Per-record U_i rows (n x (k2+4)); xi enters only the last two columns.
    Eigen::MatrixXd influence(double xi) const;
    // n^{-1} sum U_i U_i'.
    Eigen::MatrixXd sigma_z(double xi) const;

    // Sample averages of dg/dtheta times the centered terms.
    Eigen::VectorXd e1() const;
    Eigen::VectorXd e2() const;
    Eigen::VectorXd e3(double xi) const;
    Eigen::VectorXd e4(double xi) const;

    VarianceEstimate auc_variance() const;
    VarianceEstimate roc_variance(double s) const;

private:
    Eigen::VectorXd average_gradient(const Eigen::VectorXd& factor) const;
    Eigen::VectorXd lift(const Eigen::VectorXd& theta_part) const;
    double quadratic(const Eigen::VectorXd& h, double xi, bool& clamped) const;

    const Dataset* data_;
    const CdfEstimates* cdf_;
    std::size_t n_ = 0;
    std::size_t k1_ = 0;
    std::size_t k2_ = 0;
    double lambda_ = 0.0;
    double auc_ = 0.0;
    double j_condition_ = 0.0;
    Bandwidths bw_;
    Eigen::MatrixXd scores_;  // n x k2
    Eigen::MatrixXd g_grad_;  // n x k1
    Eigen::MatrixXd j_inv_;
    Eigen::VectorXd g_;
    Eigen::VectorXd f0_at_x_;       // F0(X_i)
    Eigen::VectorXd f1_left_at_x_;  // F1(X_i-)
};

VarianceEstimate variance_auc(const Dataset& data, const FitResult& fit, const CdfEstimates& cdf);
VarianceEstimate variance_roc(const Dataset& data, const FitResult& fit, const CdfEstimates& cdf,
                              double s);

}  // namespace nmroc
