#include "nmroc/simulation.hpp"

#include "nmroc/error.hpp"
#include "nmroc/parallel.hpp"
#include "nmroc/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nmroc {

namespace {

struct Subject {
    double x, v1, v2;
    int r, y;
};

Subject draw_subject(const Scenario& sc, Rng& rng) {
    Subject s{};
    s.x = 2.0 * rng.uniform() - 1.0;
    s.v1 = rng.normal();
    s.v2 = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double hd = sc.disease_predictor(s.x, s.v1, s.v2);
    const double hr = sc.verification_predictor(s.x, s.v1, s.v2);
    s.r = rng.bernoulli(expit_neg(hr + c_linear(hd, sc.beta))) ? 1 : 0;
    s.y = rng.bernoulli(expit_neg(hd + (s.r - 1) * sc.beta)) ? 1 : 0;
    return s;
}

constexpr std::uint64_t kTruthStream = 0x7472757468ULL;  // "truth"
constexpr std::uint64_t kIpwStream = 0x697077ULL;
constexpr int kTruthBatches = 10;

double sample_sd(std::span<const double> v) {
    double m = 0.0;
    for (double a : v) m += a;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - m) * (a - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct OracleSummary {
    double prevalence, verified_rate, auc;
    std::vector<double> roc;
};

OracleSummary summarize_oracle(const std::vector<double>& x1, const std::vector<double>& x0,
                               std::size_t n_verified, std::span<const double> s) {
    const WeightedEcdf f1 = WeightedEcdf::unweighted(x1);
    const WeightedEcdf f0 = WeightedEcdf::unweighted(x0);
    OracleSummary out;
    const double n = static_cast<double>(x1.size() + x0.size());
    out.prevalence = static_cast<double>(x1.size()) / n;
    out.verified_rate = static_cast<double>(n_verified) / n;
    out.auc = weighted_mann_whitney(f0, f1);
    for (double si : s) out.roc.push_back(estimate_roc(f0, f1, si));
    return out;
}

}  // namespace

double Scenario::disease_predictor(double x, double v1, double v2) const {
    return disease[0] + disease[1] * x + disease[2] * v1 + disease[3] * v2 + disease_v1sq * v1 * v1;
}

double Scenario::verification_predictor(double x, double v1, double v2) const {
    return verification[0] + verification[1] * x + verification[2] * v1 + verification[3] * v2 +
           verification_v1sq * v1 * v1;
}

ParameterVector Scenario::linear_parameters() const {
    Eigen::VectorXd v(9);
    v << disease[0], disease[1], disease[2], disease[3], beta, verification[0], verification[1],
        verification[2], verification[3];
    return ParameterVector(2, std::move(v));
}

Scenario builtin_scenario(int index) {
    Scenario sc;
    sc.disease = {1.7, -2.5, -1.5, -1.5};
    sc.verification = {1.3, -1.5, -1.2, 1.0};
    switch (index) {
        case 1:
            sc.name = "Scenario 1";
            sc.beta = 0.0;
            break;
        case 2:
            sc.name = "Scenario 2";
            sc.beta = -2.0;
            break;
        case 3:
            sc.name = "Scenario 3";
            sc.beta = -2.0;
            sc.disease_v1sq = 0.5;
            sc.verification_v1sq = 0.5;
            break;
        default:
            throw InputError("unknown scenario " + std::to_string(index) + " (expected 1, 2 or 3)");
    }
    return sc;
}

Scenario scenario_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("scenario file: ") + e.what());
    }
    Scenario sc;
    try {
        sc.name = j.value("name", std::string("custom"));
        const auto d = j.at("disease").get<std::vector<double>>();
        const auto r = j.at("verification").get<std::vector<double>>();
        if (d.size() != 4 || r.size() != 4) {
            throw InputError("scenario file: disease and verification need 4 coefficients each");
        }
        std::copy(d.begin(), d.end(), sc.disease.begin());
        std::copy(r.begin(), r.end(), sc.verification.begin());
        sc.disease_v1sq = j.value("disease_v1sq", 0.0);
        sc.verification_v1sq = j.value("verification_v1sq", 0.0);
        sc.beta = j.value("beta", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("scenario file: ") + e.what());
    }
    return sc;
}

SimulatedData simulate_dataset(const Scenario& scenario, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("simulate_dataset: n must be positive");
    Rng rng(seed);
    std::vector<double> x(n);
    RowMatrix v(static_cast<Eigen::Index>(n), 2);
    std::vector<int> r(n);
    std::vector<std::optional<int>> y(n);
    std::vector<int> oracle(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Subject s = draw_subject(scenario, rng);
        const auto ii = static_cast<Eigen::Index>(i);
        x[i] = s.x;
        v(ii, 0) = s.v1;
        v(ii, 1) = s.v2;
        r[i] = s.r;
        if (s.r == 1) y[i] = s.y;
        oracle[i] = s.y;
    }
    return {Dataset(2, std::move(x), std::move(v), std::move(r), std::move(y)), std::move(oracle)};
}

TrueTargets true_targets(const Scenario& scenario, std::size_t n_mc, std::uint64_t seed,
                         std::span<const double> s) {
    if (n_mc < static_cast<std::size_t>(kTruthBatches) * 2) {
        throw InputError("true_targets: n_mc too small");
    }
    std::vector<double> all1, all0;
    std::size_t all_ver = 0;
    std::vector<OracleSummary> batches;
    const std::size_t per = n_mc / kTruthBatches;
    for (int b = 0; b < kTruthBatches; ++b) {
        Rng rng(seed, static_cast<std::uint64_t>(b));
        const std::size_t m = b + 1 == kTruthBatches ? n_mc - per * (kTruthBatches - 1) : per;
        std::vector<double> x1, x0;
        std::size_t ver = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const Subject sub = draw_subject(scenario, rng);
            (sub.y ? x1 : x0).push_back(sub.x);
            ver += static_cast<std::size_t>(sub.r);
        }
        if (x1.empty() || x0.empty()) throw NumericalError("true_targets: a class never occurs");
        batches.push_back(summarize_oracle(x1, x0, ver, s));
        all1.insert(all1.end(), x1.begin(), x1.end());
        all0.insert(all0.end(), x0.begin(), x0.end());
        all_ver += ver;
    }
    const OracleSummary pooled = summarize_oracle(all1, all0, all_ver, s);

    auto batch_se = [&](auto getter) {
        std::vector<double> v;
        for (const auto& b : batches) v.push_back(getter(b));
        return sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
    };
    TrueTargets t;
    t.n_mc = n_mc;
    t.prevalence = pooled.prevalence;
    t.prevalence_se = batch_se([](const OracleSummary& o) { return o.prevalence; });
    t.verified_rate = pooled.verified_rate;
    t.verified_rate_se = batch_se([](const OracleSummary& o) { return o.verified_rate; });
    t.auc = pooled.auc;
    t.auc_se = batch_se([](const OracleSummary& o) { return o.auc; });
    t.s.assign(s.begin(), s.end());
    t.roc = pooled.roc;
    for (std::size_t k = 0; k < s.size(); ++k) {
        t.roc_se.push_back(batch_se([k](const OracleSummary& o) { return o.roc[k]; }));
    }
    return t;
}

std::string target_name(std::optional<double> s) {
    if (!s) return "AUC";
    std::ostringstream os;
    os << "ROC(" << *s << ")";
    return os.str();
}

double relative_bias_percent(std::span<const double> estimates, double truth) {
    double acc = 0.0;
    for (double a : estimates) acc += (a - truth) / truth;
    return 100.0 * acc / static_cast<double>(estimates.size());
}

double mean_squared_error(std::span<const double> estimates, double truth) {
    double acc = 0.0;
    for (double a : estimates) acc += (a - truth) * (a - truth);
    return acc / static_cast<double>(estimates.size());
}

const MetricSummary* McReport::find(std::string_view method, std::string_view target) const {
    for (const auto& r : rows) {
        if (r.method == method && r.target == target) return &r;
    }
    return nullptr;
}

namespace {

// One method's outcome on one replicate; index 0 is the AUC, then each s.
struct MethodOutcome {
    bool ok = false;
    std::vector<double> estimate;
    std::vector<std::optional<Interval>> ci;
    std::vector<std::optional<double>> sigma2;
};

MethodOutcome our_outcome(const Dataset& data, const FitResult& fit, const CampaignConfig& cfg) {
    MethodOutcome out;
    const std::size_t T = cfg.s_points.size() + 1;
    out.ci.resize(T);
    out.sigma2.resize(T);
    const CdfEstimates cdf = estimate_cdfs(data, fit.eta_hat.theta());
    out.estimate.push_back(estimate_auc(cdf.f0, cdf.f1));
    for (double s : cfg.s_points) out.estimate.push_back(estimate_roc(cdf.f0, cdf.f1, s));
    out.ok = true;
    try {
        const PluginContext ctx(data, fit, cdf);
        const VarianceEstimate va = ctx.auc_variance();
        out.sigma2[0] = va.sigma2;
        out.ci[0] = wald_ci(out.estimate[0], va.sigma2, data.size(), cfg.alpha);
        for (std::size_t k = 0; k < cfg.s_points.size(); ++k) {
            try {
                const VarianceEstimate vr = ctx.roc_variance(cfg.s_points[k]);
                out.sigma2[k + 1] = vr.sigma2;
                out.ci[k + 1] = wald_ci(out.estimate[k + 1], vr.sigma2, data.size(), cfg.alpha);
            } catch (const NumericalError&) {
            }
        }
    } catch (const NumericalError&) {
    }
    return out;
}

std::vector<double> flatten(const PointEstimates& pe) {
    std::vector<double> v{pe.auc};
    v.insert(v.end(), pe.roc.begin(), pe.roc.end());
    return v;
}

double percentile(std::vector<double> v, double q) {
    // inf-type empirical quantile
    std::sort(v.begin(), v.end());
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::min(v.size() - 1, k == 0 ? 0 : k - 1)];
}

MethodOutcome ipw_outcome(const Dataset& data, const FitResult& fit, const CampaignConfig& cfg,
                          std::uint64_t rep_seed) {
    MethodOutcome out;
    const std::size_t T = cfg.s_points.size() + 1;
    out.estimate = flatten(comparator_estimate(data, Method::IPW, cfg.s_points, {}, &fit));
    out.ok = true;
    out.ci.resize(T);
    out.sigma2.resize(T);
    if (cfg.ipw_bootstrap <= 0) return out;

    std::vector<std::vector<double>> boot(T);
    for (int b = 0; b < cfg.ipw_bootstrap; ++b) {
        Rng rng(derive_seed(rep_seed, kIpwStream), static_cast<std::uint64_t>(b));
        std::vector<std::size_t> rows(data.size());
        for (auto& r : rows) r = static_cast<std::size_t>(rng.below(data.size()));
        try {
            const Dataset bs = data.subset(rows);
            const FitResult bf = fit_mle(bs, fit.eta_hat, cfg.fit);
            if (!bf.converged) continue;
            const auto est = flatten(comparator_estimate(bs, Method::IPW, cfg.s_points, {}, &bf));
            for (std::size_t k = 0; k < T; ++k) boot[k].push_back(est[k]);
        } catch (const std::exception&) {
        }
    }
    for (std::size_t k = 0; k < T; ++k) {
        if (boot[k].size() < 2) continue;
        out.ci[k] = Interval{percentile(boot[k], cfg.alpha / 2.0),
                             percentile(boot[k], 1.0 - cfg.alpha / 2.0)};
    }
    return out;
}

}  // namespace

McReport run_campaign(const CampaignConfig& cfg) {
    if (cfg.B < 1) throw InputError("run_campaign: B must be at least 1");
    if (cfg.methods.empty()) throw InputError("run_campaign: no methods requested");

    McReport rep;
    rep.scenario = cfg.scenario.name;
    rep.n = cfg.n;
    rep.B = cfg.B;
    rep.seed = cfg.seed;
    rep.alpha = cfg.alpha;
    rep.truth = cfg.truth ? *cfg.truth
                          : true_targets(cfg.scenario, cfg.n_truth,
                                         derive_seed(cfg.seed, kTruthStream), cfg.s_points);
    if (rep.truth.s.size() != cfg.s_points.size()) {
        throw InputError("run_campaign: supplied truth does not match the s points");
    }

    const std::size_t M = cfg.methods.size();
    const std::size_t T = cfg.s_points.size() + 1;
    std::vector<std::vector<MethodOutcome>> results(static_cast<std::size_t>(cfg.B),
                                                    std::vector<MethodOutcome>(M));

    const bool needs_fit = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) {
        return m == Method::Our || m == Method::IPW;
    });

    parallel_for(results.size(), cfg.threads, [&](std::size_t i) {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, i);
        const SimulatedData sim = simulate_dataset(cfg.scenario, cfg.n, rep_seed);
        std::optional<FitResult> fit;
        if (needs_fit) {
            try {
                FitResult f = fit_mle(sim.observed, std::nullopt, cfg.fit);
                if (f.converged) fit = std::move(f);
            } catch (const std::exception&) {
            }
        }
        for (std::size_t m = 0; m < M; ++m) {
            MethodOutcome& out = results[i][m];
            try {
                switch (cfg.methods[m]) {
                    case Method::Our:
                        if (fit) out = our_outcome(sim.observed, *fit, cfg);
                        break;
                    case Method::IPW:
                        if (fit) out = ipw_outcome(sim.observed, *fit, cfg, rep_seed);
                        break;
                    default:
                        out.estimate = flatten(comparator_estimate(
                            sim.observed, cfg.methods[m], cfg.s_points, sim.oracle_y));
                        out.ok = true;
                        out.ci.resize(T);
                        out.sigma2.resize(T);
                }
            } catch (const std::exception&) {
                out = MethodOutcome{};
            }
        }
    });

    for (std::size_t m = 0; m < M; ++m) {
        int failures = 0;
        for (const auto& r : results) failures += r[m].ok ? 0 : 1;
        if (failures > 0.05 * cfg.B) {
            rep.flags.push_back(std::string(method_name(cfg.methods[m])) + ": " +
                                std::to_string(failures) + " of " + std::to_string(cfg.B) +
                                " replicates failed");
        }
        for (std::size_t k = 0; k < T; ++k) {
            MetricSummary ms;
            ms.method = std::string(method_name(cfg.methods[m]));
            ms.target = target_name(k == 0 ? std::nullopt : std::optional<double>(cfg.s_points[k - 1]));
            ms.truth = k == 0 ? rep.truth.auc : rep.truth.roc[k - 1];
            ms.failures = failures;

            std::vector<double> est;
            int covered = 0;
            double length = 0.0, sig = 0.0;
            int n_sig = 0;
            for (const auto& r : results) {
                const MethodOutcome& o = r[m];
                if (!o.ok) continue;
                est.push_back(o.estimate[k]);
                if (o.ci[k]) {
                    ++ms.ci_replicates;
                    covered += o.ci[k]->contains(ms.truth) ? 1 : 0;
                    length += o.ci[k]->length();
                }
                if (o.sigma2[k]) {
                    sig += *o.sigma2[k];
                    ++n_sig;
                }
            }
            ms.replicates = static_cast<int>(est.size());
            if (!est.empty()) {
                ms.rb_percent = relative_bias_percent(est, ms.truth);
                ms.mse = mean_squared_error(est, ms.truth);
                double mean = 0.0;
                for (double a : est) mean += a;
                mean /= static_cast<double>(est.size());
                ms.mean_estimate = mean;
                if (est.size() > 1) {
                    const double sd = sample_sd(est);
                    ms.n_var = static_cast<double>(cfg.n) * sd * sd;
                }
            }
            if (ms.ci_replicates > 0) {
                ms.cp = static_cast<double>(covered) / ms.ci_replicates;
                ms.al = length / ms.ci_replicates;
            }
            if (n_sig > 0) ms.mean_sigma2 = sig / n_sig;
            rep.rows.push_back(std::move(ms));
        }
    }
    return rep;
}

}  // namespace nmroc
