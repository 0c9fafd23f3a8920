#include "nmroc/likelihood.hpp"

#include "nmroc/error.hpp"
#include "nmroc/logistic.hpp"

#include <algorithm>
#include <cmath>

namespace nmroc {

namespace {

// Per-record pieces of the likelihood at eta.
//   a  = mu'z         p1 = expit_neg(a)
//   g0 = expit_neg(a - beta) = P(Y=1 | x, v, R=0)
//   t  = psi'z + c(a, beta)   pi = expit_neg(t)
// Partial derivatives of c: dc/da = p1 - g0, dc/dbeta = g0.
struct Terms {
    Eigen::VectorXd a, t, p1, g0, pi;
};

Terms compute_terms(const Dataset& data, const ParameterVector& eta) {
    if (eta.covariate_dim() != data.covariate_dim()) {
        throw InputError("parameter dimension does not match dataset covariates");
    }
    const auto n = static_cast<Eigen::Index>(data.size());
    Terms tm;
    tm.a = data.design() * eta.mu();
    const Eigen::VectorXd b = data.design() * eta.psi();
    const double beta = eta.beta();
    tm.t.resize(n);
    tm.p1.resize(n);
    tm.g0.resize(n);
    tm.pi.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = tm.a[i];
        tm.t[i] = b[i] + c_linear(a, beta);
        tm.p1[i] = expit_neg(a);
        tm.g0[i] = expit_neg(a - beta);
        tm.pi[i] = expit_neg(tm.t[i]);
    }
    return tm;
}

double loglik_from_terms(const Dataset& data, const Terms& tm) {
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (data.r(i) == 1) {
            ll -= *data.y(i) ? softplus(tm.a[ii]) : softplus(-tm.a[ii]);
            ll -= softplus(tm.t[ii]);
        } else {
            ll -= softplus(-tm.t[ii]);
        }
    }
    return ll;
}

// Weights such that the score is (Z'u_mu, sum u_beta, Z'u_psi).
struct ScoreWeights {
    Eigen::VectorXd u_mu, u_beta, u_psi;
};

ScoreWeights score_weights(const Dataset& data, const Terms& tm) {
    const auto n = static_cast<Eigen::Index>(data.size());
    ScoreWeights sw{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int r = data.r(ui);
        const double resid_r = tm.pi[i] - r;
        const double disease = r == 1 ? tm.p1[i] - *data.y(ui) : 0.0;
        sw.u_mu[i] = disease + resid_r * (tm.p1[i] - tm.g0[i]);
        sw.u_beta[i] = resid_r * tm.g0[i];
        sw.u_psi[i] = resid_r;
    }
    return sw;
}

Eigen::VectorXd assemble_score(const Dataset& data, const ScoreWeights& sw) {
    const auto q = static_cast<Eigen::Index>(data.covariate_dim() + 2);
    Eigen::VectorXd s(2 * q + 1);
    const RowMatrix& z = data.design();
    s.head(q) = z.transpose() * sw.u_mu;
    s[q] = sw.u_beta.sum();
    s.tail(q) = z.transpose() * sw.u_psi;
    return s;
}

Eigen::MatrixXd hessian_from_terms(const Dataset& data, const Terms& tm) {
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto q = static_cast<Eigen::Index>(data.covariate_dim() + 2);
    Eigen::VectorXd w_mm(n), w_mb(n), w_mp(n), w_bb(n), w_bp(n), w_pp(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int r = data.r(static_cast<std::size_t>(i));
        const double p1 = tm.p1[i];
        const double g0 = tm.g0[i];
        const double pi = tm.pi[i];
        const double v_p1 = p1 * (1.0 - p1);
        const double v_g0 = g0 * (1.0 - g0);
        const double v_pi = pi * (1.0 - pi);
        const double resid_r = pi - r;
        const double dt_da = p1 - g0;
        // d2 c / da2 = -v_p1 + v_g0, d2 c / da dbeta = -v_g0, d2 c / dbeta2 = v_g0
        w_mm[i] = -r * v_p1 - v_pi * dt_da * dt_da + resid_r * (v_g0 - v_p1);
        w_mb[i] = -v_pi * dt_da * g0 - resid_r * v_g0;
        w_mp[i] = -v_pi * dt_da;
        w_bb[i] = -v_pi * g0 * g0 + resid_r * v_g0;
        w_bp[i] = -v_pi * g0;
        w_pp[i] = -v_pi;
    }
    const RowMatrix& z = data.design();
    Eigen::MatrixXd h(2 * q + 1, 2 * q + 1);
    h.block(0, 0, q, q) = z.transpose() * w_mm.asDiagonal() * z;
    h.block(0, q, q, 1) = z.transpose() * w_mb;
    h.block(0, q + 1, q, q) = z.transpose() * w_mp.asDiagonal() * z;
    h(q, q) = w_bb.sum();
    h.block(q, q + 1, 1, q) = (z.transpose() * w_bp).transpose();
    h.block(q + 1, q + 1, q, q) = z.transpose() * w_pp.asDiagonal() * z;
    // Mirror the upper triangle.
    h.block(q, 0, 1, q) = h.block(0, q, q, 1).transpose();
    h.block(q + 1, 0, q, q) = h.block(0, q + 1, q, q).transpose();
    h.block(q + 1, q, q, 1) = h.block(q, q + 1, 1, q).transpose();
    return h;
}

void require_both_classes(const Dataset& data) {
    if (data.count_verified_with(0) == 0 || data.count_verified_with(1) == 0) {
        throw InputError("verified records must include both diseased and healthy subjects");
    }
}

}  // namespace

double loglik_disease(const Dataset& data, const DiseaseParams& mu) {
    if (static_cast<std::size_t>(mu.covariates.size()) != data.covariate_dim()) {
        throw InputError("loglik_disease: dimension mismatch");
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.r(i) != 1) continue;
        const double a = disease_predictor(data.x(i), data.v(i), mu);
        ll -= *data.y(i) ? softplus(a) : softplus(-a);
    }
    return ll;
}

double loglik_missing(const Dataset& data, const ParameterVector& eta) {
    const Terms tm = compute_terms(data, eta);
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double t = tm.t[static_cast<Eigen::Index>(i)];
        ll -= data.r(i) == 1 ? softplus(t) : softplus(-t);
    }
    return ll;
}

double loglik(const Dataset& data, const ParameterVector& eta) {
    return loglik_from_terms(data, compute_terms(data, eta));
}

std::vector<double> verification_probabilities(const Dataset& data, const ParameterVector& eta) {
    const Terms tm = compute_terms(data, eta);
    return {tm.pi.data(), tm.pi.data() + tm.pi.size()};
}

Eigen::VectorXd score(const Dataset& data, const ParameterVector& eta) {
    const Terms tm = compute_terms(data, eta);
    return assemble_score(data, score_weights(data, tm));
}

Eigen::MatrixXd score_contributions(const Dataset& data, const ParameterVector& eta) {
    const Terms tm = compute_terms(data, eta);
    const ScoreWeights sw = score_weights(data, tm);
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto q = static_cast<Eigen::Index>(data.covariate_dim() + 2);
    const RowMatrix& z = data.design();
    Eigen::MatrixXd s(n, 2 * q + 1);
    s.leftCols(q) = sw.u_mu.asDiagonal() * z;
    s.col(q) = sw.u_beta;
    s.rightCols(q) = sw.u_psi.asDiagonal() * z;
    return s;
}

Eigen::MatrixXd hessian(const Dataset& data, const ParameterVector& eta) {
    return hessian_from_terms(data, compute_terms(data, eta));
}

IdentifiabilityReport check_identifiability(const Dataset& data) {
    IdentifiabilityReport rep;
    const RowMatrix& z = data.design();
    const Eigen::MatrixXd zd = z;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(zd);
    const Eigen::Index k = z.cols();
    const Eigen::MatrixXd rmat =
        qr.matrixQR().topRows(std::min(k, z.rows())).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rmat);
    const Eigen::VectorXd sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv[0] : 0.0;
    rep.min_singular_value =
        (sv.size() == k && smax > 0.0) ? sv[sv.size() - 1] / smax : 0.0;
    rep.full_rank = rep.min_singular_value > kRankThreshold;
    if (!rep.full_rank) {
        rep.warnings.push_back(
            "design matrix (1, x, v) is rank deficient: columns are linearly dependent");
    }

    std::vector<double> xs = data.biomarker();
    std::sort(xs.begin(), xs.end());
    rep.distinct_biomarker_values =
        static_cast<std::size_t>(std::unique(xs.begin(), xs.end()) - xs.begin());
    rep.biomarker_continuous = rep.distinct_biomarker_values > kMinDistinctBiomarker;
    if (!rep.biomarker_continuous) {
        rep.warnings.push_back("biomarker takes only " +
                               std::to_string(rep.distinct_biomarker_values) +
                               " distinct values; it should be continuous");
    }
    return rep;
}

void check_identifiability_post_fit(IdentifiabilityReport& report, const ParameterVector& eta_hat) {
    const bool doubtful = std::abs(eta_hat[1]) < kBiomarkerEffectThreshold;
    report.biomarker_effect_doubtful = doubtful;
    if (doubtful) {
        report.warnings.push_back(
            "estimated biomarker coefficient in the disease model is near zero; "
            "identifiability of the verification model is doubtful");
    }
}

ParameterVector default_start(const Dataset& data) {
    require_both_classes(data);
    const LogisticFit dis = fit_disease_complete_case(data);
    const LogisticFit ver = fit_verification_mar(data);
    const auto q = static_cast<Eigen::Index>(data.covariate_dim() + 2);
    Eigen::VectorXd v(2 * q + 1);
    v.head(q) = dis.coef;
    v[q] = 0.0;
    v.tail(q) = ver.coef;
    return ParameterVector(data.covariate_dim(), std::move(v));
}

FitResult fit_mle(const Dataset& data, const std::optional<ParameterVector>& init,
                  const FitOptions& opts) {
    require_both_classes(data);
    const double n = static_cast<double>(data.size());
    ParameterVector eta = init ? *init : default_start(data);
    if (eta.covariate_dim() != data.covariate_dim()) {
        throw InputError("fit_mle: initial value has the wrong covariate dimension");
    }

    FitResult res;
    Terms tm = compute_terms(data, eta);
    double ll = loglik_from_terms(data, tm);
    if (!std::isfinite(ll)) throw NumericalError("fit_mle: log-likelihood not finite at start");

    const Eigen::Index k = static_cast<Eigen::Index>(eta.size());
    int it = 0;
    bool converged = false;
    for (; it <= opts.max_iter; ++it) {
        const Eigen::VectorXd s = assemble_score(data, score_weights(data, tm));
        if (s.cwiseAbs().maxCoeff() / n < opts.tol) {
            converged = true;
            break;
        }
        if (it == opts.max_iter) break;

        // Damped Newton: regularize -H until positive definite.
        const Eigen::MatrixXd neg_h = -hessian_from_terms(data, tm);
        const double scale = std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff());
        double ridge = 0.0;
        Eigen::VectorXd step;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd a = neg_h;
            a.diagonal().array() += ridge;
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() == Eigen::Success) {
                step = llt.solve(s);
                if (step.allFinite()) break;
            }
            ridge = ridge == 0.0 ? 1e-8 * scale : ridge * 10.0;
            step.resize(0);
        }
        if (step.size() != k) step = s / scale;

        const double slope = s.dot(step);
        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 60; ++half) {
            ParameterVector cand(eta.covariate_dim(), eta.values() + t * step);
            Terms tc = compute_terms(data, cand);
            const double llc = loglik_from_terms(data, tc);
            if (std::isfinite(llc) &&
                llc >= ll + 1e-4 * t * slope - 1e-12 * (1.0 + std::abs(ll))) {
                eta = std::move(cand);
                tm = std::move(tc);
                ll = llc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
    }

    const Eigen::VectorXd s = assemble_score(data, score_weights(data, tm));
    res.score_norm = s.cwiseAbs().maxCoeff() / n;
    res.converged = converged || res.score_norm < opts.tol;
    res.iterations = it;
    res.loglik = ll;
    Eigen::MatrixXd info = -hessian_from_terms(data, tm) / n;
    res.obs_info = 0.5 * (info + info.transpose());
    res.separation = eta.values().cwiseAbs().maxCoeff() > 50.0;
    res.eta_hat = std::move(eta);
    return res;
}

}  // namespace nmroc
