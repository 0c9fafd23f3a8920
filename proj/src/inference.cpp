#include "nmroc/inference.hpp"

#include "nmroc/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace nmroc {

double kde_eval(const WeightedEcdf& f, double h, double x) {
    if (!(h > 0.0)) throw InputError("kde_eval: bandwidth must be positive");
    const auto& s = f.support();
    const auto& w = f.weights();
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    double dens = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double u = (s[j] - x) / h;
        dens += w[j] * std::exp(-0.5 * u * u);
    }
    return dens * norm;
}

WeightedSpread weighted_spread(std::span<const double> x, std::span<const double> w) {
    double sw = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        mean += w[i] * x[i];
    }
    if (!(sw > 0.0)) throw NumericalError("weighted_spread: zero total weight");
    mean /= sw;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += w[i] * (x[i] - mean) * (x[i] - mean);
    WeightedSpread out;
    out.sd = std::sqrt(ss / (sw > 1.0 ? sw - 1.0 : sw));
    const WeightedEcdf f(x, w);
    out.iqr = f.quantile(0.75) - f.quantile(0.25);
    return out;
}

Bandwidths bandwidths(const Dataset& data, const GWeights& gw) {
    if (!(gw.sum_g > 0.0) || !(gw.sum_1mg > 0.0)) {
        throw NumericalError("bandwidths: both groups need positive weight");
    }
    const double n = static_cast<double>(data.size());
    const double factor = 1.06 * std::pow(n, -0.2);
    const auto& x = data.biomarker();
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    const double range = *xmax - *xmin;

    std::vector<double> w0(gw.g.size());
    for (std::size_t i = 0; i < w0.size(); ++i) w0[i] = 1.0 - gw.g[i];

    Bandwidths bw;
    auto rule = [&](std::span<const double> w, const char* group) {
        const WeightedSpread sp = weighted_spread(x, w);
        double spread = sp.iqr > 0.0 ? std::min(sp.sd, sp.iqr / 1.34) : sp.sd;
        if (!(spread > 0.0)) {
            spread = range > 0.0 ? range / 4.0 : 1.0;
            bw.warnings.push_back(std::string("zero weighted spread in the ") + group +
                                  " group; bandwidth falls back to range/4");
        }
        return factor * spread;
    };
    bw.h0 = rule(w0, "healthy");
    bw.h1 = rule(gw.g, "diseased");
    return bw;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p outside (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval wald_ci(double point, double sigma2, std::size_t n, double alpha) {
    if (!(sigma2 >= 0.0)) throw InputError("wald_ci: negative variance");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("wald_ci: alpha outside (0,1)");
    if (n == 0) throw InputError("wald_ci: n must be positive");
    const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(sigma2 / static_cast<double>(n));
    return {point - half, point + half};
}

PluginContext::PluginContext(const Dataset& data, const FitResult& fit, const CdfEstimates& cdf)
    : data_(&data), cdf_(&cdf), n_(data.size()), k1_(data.covariate_dim() + 3),
      k2_(2 * data.covariate_dim() + 5) {
    const auto n = static_cast<Eigen::Index>(n_);
    if (cdf.g.g.size() != n_) throw InputError("PluginContext: weights do not match dataset");

    g_ = Eigen::Map<const Eigen::VectorXd>(cdf.g.g.data(), n);
    lambda_ = g_.mean();
    if (!(lambda_ > 0.0 && lambda_ < 1.0)) {
        throw NumericalError("PluginContext: estimated prevalence outside (0,1)");
    }
    auc_ = estimate_auc(cdf.f0, cdf.f1);
    bw_ = bandwidths(data, cdf.g);

    // J^{-1} from the observed information.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.obs_info);
    const Eigen::VectorXd ev = eig.eigenvalues();
    const double max_abs = ev.cwiseAbs().maxCoeff();
    const double min_abs = ev.cwiseAbs().minCoeff();
    j_condition_ = min_abs > 0.0 ? max_abs / min_abs : std::numeric_limits<double>::infinity();
    if (!(min_abs > 1e-13 * max_abs)) {
        std::ostringstream msg;
        msg << "observed information is singular (condition number " << j_condition_ << ")";
        throw NumericalError(msg.str());
    }
    j_inv_ = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();

    scores_ = score_contributions(data, fit.eta_hat);

    // dg/dtheta = -g(1-g) (z, r-1)
    const RowMatrix& z = data.design();
    g_grad_.resize(n, static_cast<Eigen::Index>(k1_));
    const auto q = z.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = -g_[i] * (1.0 - g_[i]);
        g_grad_.row(i).head(q) = w * z.row(i);
        g_grad_(i, q) = w * (data.r(static_cast<std::size_t>(i)) - 1);
    }

    f0_at_x_.resize(n);
    f1_left_at_x_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = data.x(static_cast<std::size_t>(i));
        f0_at_x_[i] = cdf.f0.eval(xi);
        f1_left_at_x_[i] = cdf.f1.eval_left(xi);
    }
}

Eigen::MatrixXd PluginContext::influence(double xi) const {
    const auto n = static_cast<Eigen::Index>(n_);
    const auto k2 = static_cast<Eigen::Index>(k2_);
    Eigen::MatrixXd u(n, k2 + 4);
    u.leftCols(k2) = scores_;
    const double f0_xi = cdf_->f0.eval(xi);
    const double f1_xi = cdf_->f1.eval(xi);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double g = g_[i];
        const double ind = data_->x(static_cast<std::size_t>(i)) <= xi ? 1.0 : 0.0;
        u(i, k2) = g * (f0_at_x_[i] - auc_);
        u(i, k2 + 1) = (1.0 - g) * (1.0 - f1_left_at_x_[i] - auc_);
        u(i, k2 + 2) = (1.0 - g) * (ind - f0_xi);
        u(i, k2 + 3) = g * (ind - f1_xi);
    }
    return u;
}

Eigen::MatrixXd PluginContext::sigma_z(double xi) const {
    const Eigen::MatrixXd u = influence(xi);
    Eigen::MatrixXd s = u.transpose() * u / static_cast<double>(n_);
    return 0.5 * (s + s.transpose());
}

Eigen::VectorXd PluginContext::average_gradient(const Eigen::VectorXd& factor) const {
    return g_grad_.transpose() * factor / static_cast<double>(n_);
}

Eigen::VectorXd PluginContext::e1() const {
    return average_gradient(f0_at_x_.array() - auc_);
}

Eigen::VectorXd PluginContext::e2() const {
    return average_gradient(1.0 - f1_left_at_x_.array() - auc_);
}

Eigen::VectorXd PluginContext::e3(double xi) const {
    const double f0_xi = cdf_->f0.eval(xi);
    Eigen::VectorXd factor(static_cast<Eigen::Index>(n_));
    for (Eigen::Index i = 0; i < factor.size(); ++i) {
        factor[i] = (data_->x(static_cast<std::size_t>(i)) <= xi ? 1.0 : 0.0) - f0_xi;
    }
    return average_gradient(factor);
}

Eigen::VectorXd PluginContext::e4(double xi) const {
    const double f1_xi = cdf_->f1.eval(xi);
    Eigen::VectorXd factor(static_cast<Eigen::Index>(n_));
    for (Eigen::Index i = 0; i < factor.size(); ++i) {
        factor[i] = (data_->x(static_cast<std::size_t>(i)) <= xi ? 1.0 : 0.0) - f1_xi;
    }
    return average_gradient(factor);
}

Eigen::VectorXd PluginContext::lift(const Eigen::VectorXd& theta_part) const {
    // J^{-1} I_{k2,k1} v
    return j_inv_.leftCols(static_cast<Eigen::Index>(k1_)) * theta_part;
}

double PluginContext::quadratic(const Eigen::VectorXd& h, double xi, bool& clamped) const {
    // H' Sigma_Z H = n^{-1} sum_i (U_i' H)^2
    const Eigen::MatrixXd u = influence(xi);
    const double q = (u * h).squaredNorm() / static_cast<double>(n_);
    clamped = q < 0.0;
    return std::max(q, 0.0);
}

VarianceEstimate PluginContext::auc_variance() const {
    const auto k2 = static_cast<Eigen::Index>(k2_);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(k2 + 4);
    h.head(k2) = lift(e1() / lambda_ - e2() / (1.0 - lambda_));
    h[k2] = 1.0 / lambda_;
    h[k2 + 1] = 1.0 / (1.0 - lambda_);
    VarianceEstimate out;
    out.point = auc_;
    // xi does not enter: its columns carry zero weight.
    out.sigma2 = quadratic(h, cdf_->f0.support().front(), out.clamped);
    return out;
}

VarianceEstimate PluginContext::roc_variance(double s) const {
    if (!(s > 0.0 && s < 1.0)) throw InputError("roc_variance: s must lie in (0,1)");
    const double xi = cdf_->f0.quantile(1.0 - s);
    const double f0 = kde_eval(cdf_->f0, bw_.h0, xi);
    if (!(f0 > 1e-8)) {
        std::ostringstream msg;
        msg << "estimated healthy density vanishes at the ROC threshold for s = " << s;
        throw NumericalError(msg.str());
    }
    const double rho = kde_eval(cdf_->f1, bw_.h1, xi) / f0;

    const auto k2 = static_cast<Eigen::Index>(k2_);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(k2 + 4);
    h.head(k2) = lift(-e4(xi) / lambda_ - e3(xi) * (rho / (1.0 - lambda_)));
    h[k2 + 2] = rho / (1.0 - lambda_);
    h[k2 + 3] = -1.0 / lambda_;
    VarianceEstimate out;
    out.point = estimate_roc(cdf_->f0, cdf_->f1, s);
    out.xi = xi;
    out.density_ratio = rho;
    out.sigma2 = quadratic(h, xi, out.clamped);
    return out;
}

VarianceEstimate variance_auc(const Dataset& data, const FitResult& fit, const CdfEstimates& cdf) {
    return PluginContext(data, fit, cdf).auc_variance();
}

VarianceEstimate variance_roc(const Dataset& data, const FitResult& fit, const CdfEstimates& cdf,
                              double s) {
    return PluginContext(data, fit, cdf).roc_variance(s);
}

}  // namespace nmroc
