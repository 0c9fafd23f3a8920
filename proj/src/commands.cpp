#include "nmroc/commands.hpp"

#include "nmroc/error.hpp"
#include "nmroc/gof.hpp"
#include "nmroc/inference.hpp"
#include "nmroc/simulation.hpp"

#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

namespace nmroc {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Nulls stand in for non-finite numbers in JSON output.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fixed(double v, int digits = 3) {
    if (!std::isfinite(v)) return "nan";
    return fmt::format("{:.{}f}", v, digits);
}

std::string exact(double v) { return fmt::format("{:.17g}", v); }

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

Scenario load_scenario(const ScenarioOptions& opt) {
    if (!opt.file.empty()) {
        if (opt.builtin) throw InputError("give either --scenario or --scenario-file, not both");
        std::ifstream in(opt.file);
        if (!in) throw InputError("cannot open scenario file '" + opt.file + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        return scenario_from_json(buf.str());
    }
    if (!opt.builtin) throw InputError("no scenario given");
    return builtin_scenario(*opt.builtin);
}

void validate(const RunConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    for (double s : cfg.s_points) {
        if (!(s > 0.0 && s < 1.0)) throw InputError("s points must lie in (0, 1)");
    }
    for (double s : cfg.s_grid) {
        if (!(s > 0.0 && s < 1.0)) throw InputError("s grid must lie in (0, 1)");
    }
}

json coefficients_json(const std::vector<CoefficientRow>& rows) {
    json arr = json::array();
    for (const auto& c : rows) {
        arr.push_back({{"model", c.model},
                       {"term", c.term},
                       {"estimate", number(c.estimate)},
                       {"se", number(c.se)},
                       {"z", number(c.z)},
                       {"p_value", number(c.p_value)},
                       {"significant", c.significant}});
    }
    return arr;
}

json fit_json(const FitReport& rep) {
    const auto& id = rep.identifiability;
    json diag = {{"full_rank", id.full_rank},
                 {"min_relative_singular_value", number(id.min_singular_value)},
                 {"distinct_biomarker_values", id.distinct_biomarker_values},
                 {"biomarker_continuous", id.biomarker_continuous},
                 {"warnings", id.warnings}};
    if (id.biomarker_effect_doubtful) diag["biomarker_effect_doubtful"] = *id.biomarker_effect_doubtful;
    return {{"converged", rep.fit.converged},
            {"iterations", rep.fit.iterations},
            {"loglik", number(rep.fit.loglik)},
            {"score_norm", number(rep.fit.score_norm)},
            {"separation", rep.fit.separation},
            {"coefficients", coefficients_json(rep.coefficients)},
            {"identifiability", diag},
            {"warnings", rep.warnings}};
}

// Two-column layout: verification model beside disease model, the Y row last.
void print_fit_table(std::ostream& out, const FitReport& rep) {
    out << fmt::format("converged: {}  iterations: {}  loglik: {}  max|score|/n: {:.2e}\n",
                       rep.fit.converged ? "yes" : "no", rep.fit.iterations,
                       fixed(rep.fit.loglik, 4), rep.fit.score_norm);
    std::vector<std::string> terms;
    for (const auto& c : rep.coefficients) {
        if (std::find(terms.begin(), terms.end(), c.term) == terms.end()) terms.push_back(c.term);
    }
    std::size_t width = 8;
    for (const auto& t : terms) width = std::max(width, t.size());
    auto cell = [&](const std::string& model, const std::string& term) -> std::string {
        for (const auto& c : rep.coefficients) {
            if (c.model == model && c.term == term) {
                return fmt::format("{} ({}){}", fixed(c.estimate), fixed(c.se), c.significant ? " *" : "");
            }
        }
        return "";
    };
    out << fmt::format("{:<{}}  {:>22}  {:>22}\n", "term", width, "verification model", "disease model");
    for (const auto& t : terms) {
        out << fmt::format("{:<{}}  {:>22}  {:>22}\n", t, width, cell("verification", t), cell("disease", t));
    }
    out << "estimates with standard errors in parentheses; * significant at the 5% level\n";
    const auto& id = rep.identifiability;
    out << fmt::format("identifiability: design {} (min relative singular value {:.3e}), "
                       "{} distinct biomarker values\n",
                       id.full_rank ? "full rank" : "RANK DEFICIENT", id.min_singular_value,
                       id.distinct_biomarker_values);
}

CurvePoint roc_point(const PluginContext* ctx, const CdfEstimates& cdf, double s, std::size_t n,
                     double alpha) {
    CurvePoint p;
    p.s = s;
    p.roc = estimate_roc(cdf.f0, cdf.f1, s);
    p.se = p.lo = p.hi = kNaN;
    if (!ctx) {
        p.error = "variance unavailable";
        return p;
    }
    try {
        const VarianceEstimate v = ctx->roc_variance(s);
        const Interval ci = wald_ci(p.roc, v.sigma2, n, alpha);
        p.se = std::sqrt(v.sigma2 / static_cast<double>(n));
        p.lo = ci.lo;
        p.hi = ci.hi;
        if (v.clamped) p.error = "negative variance clamped to 0";
    } catch (const NumericalError& e) {
        p.error = e.what();
    }
    return p;
}

json point_json(const CurvePoint& p) {
    json j = {{"s", p.s}, {"roc", number(p.roc)}, {"se", number(p.se)}, {"lo", number(p.lo)}, {"hi", number(p.hi)}};
    if (!p.error.empty()) j["error"] = p.error;
    return j;
}

std::string method_label(Method m) {
    return m == Method::IPW ? "IPW (approx.)" : std::string(method_name(m));
}

}  // namespace

std::vector<double> default_s_grid() {
    std::vector<double> s;
    for (int k = 1; k <= 99; ++k) s.push_back(k / 100.0);
    return s;
}

FitReport make_fit_report(const Dataset& data, const InputSchema& schema, const RunConfig& config) {
    FitReport rep;
    rep.identifiability = check_identifiability(data);
    if (!rep.identifiability.full_rank) {
        throw InputError("design matrix (1, biomarker, covariates) is rank deficient");
    }
    rep.fit = fit_mle(data, std::nullopt, config.fit);
    check_identifiability_post_fit(rep.identifiability, rep.fit.eta_hat);
    if (rep.fit.separation) {
        rep.warnings.push_back("some |coefficient| exceeds 50: possible separation");
    }

    const std::size_t p = data.covariate_dim();
    const std::size_t k2 = rep.fit.eta_hat.size();
    const double n = static_cast<double>(data.size());
    Eigen::VectorXd var = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k2), kNaN);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.fit.obs_info);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double big = ev.cwiseAbs().maxCoeff();
    if (es.info() == Eigen::Success && ev.minCoeff() > 1e-13 * big) {
        const Eigen::MatrixXd inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                                    es.eigenvectors().transpose();
        var = inv.diagonal() / n;
    } else {
        rep.warnings.push_back("observed information is not positive definite; standard errors unavailable");
    }

    std::vector<std::string> names{"Intercept", schema.biomarker.empty() ? "x" : schema.biomarker};
    for (std::size_t j = 0; j < p; ++j) {
        names.push_back(j < schema.covariates.size() ? schema.covariates[j] : "v" + std::to_string(j + 1));
    }
    auto add = [&](const std::string& model, const std::string& term, std::size_t idx) {
        CoefficientRow c;
        c.model = model;
        c.term = term;
        c.estimate = rep.fit.eta_hat[idx];
        c.se = std::sqrt(var[static_cast<Eigen::Index>(idx)]);
        c.z = c.estimate / c.se;
        c.p_value = std::isfinite(c.z) ? std::erfc(std::abs(c.z) / std::sqrt(2.0)) : kNaN;
        c.significant = std::isfinite(c.p_value) && c.p_value < 0.05;
        rep.coefficients.push_back(c);
    };
    for (std::size_t j = 0; j < p + 2; ++j) add("verification", names[j], p + 3 + j);
    add("verification", "Y", p + 2);
    for (std::size_t j = 0; j < p + 2; ++j) add("disease", names[j], j);
    return rep;
}

EstimateReport make_estimate_report(const Dataset& data, const InputSchema& schema,
                                    const RunConfig& config) {
    validate(config);
    EstimateReport rep;
    rep.fit = make_fit_report(data, schema, config);
    if (!rep.fit.fit.converged) return rep;

    const std::size_t n = data.size();
    const CdfEstimates cdf = estimate_cdfs(data, rep.fit.fit.eta_hat.theta());
    rep.auc = estimate_auc(cdf.f0, cdf.f1);
    rep.auc_se = rep.auc_lo = rep.auc_hi = kNaN;

    std::optional<PluginContext> ctx;
    try {
        ctx.emplace(data, rep.fit.fit, cdf);
        for (const auto& w : ctx->bandwidth_info().warnings) rep.warnings.push_back(w);
        const VarianceEstimate va = ctx->auc_variance();
        const Interval ci = wald_ci(rep.auc, va.sigma2, n, config.alpha);
        rep.auc_se = std::sqrt(va.sigma2 / static_cast<double>(n));
        rep.auc_lo = ci.lo;
        rep.auc_hi = ci.hi;
        if (va.clamped) rep.warnings.push_back("AUC variance: negative quadratic form clamped to 0");
    } catch (const NumericalError& e) {
        rep.warnings.push_back(std::string("variance estimation failed: ") + e.what());
        ctx.reset();
    }
    const PluginContext* c = ctx ? &*ctx : nullptr;
    for (double s : config.s_points) rep.points.push_back(roc_point(c, cdf, s, n, config.alpha));
    for (double s : config.s_grid) rep.curve.push_back(roc_point(c, cdf, s, n, config.alpha));
    for (const auto& pt : rep.points) {
        if (!pt.error.empty()) rep.warnings.push_back(fmt::format("ROC({}): {}", pt.s, pt.error));
    }

    for (Method m : {Method::IG, Method::VER, Method::IPW}) {
        try {
            rep.comparators.emplace_back(m, comparator_estimate(data, m, config.s_points, {}, &rep.fit.fit));
        } catch (const NumericalError& e) {
            rep.warnings.push_back(method_label(m) + ": " + e.what());
        }
    }
    return rep;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "s,roc,se,lo,hi\n";
    for (const auto& p : curve) {
        out << exact(p.s) << ',' << exact(p.roc) << ',' << exact(p.se) << ',' << exact(p.lo) << ','
            << exact(p.hi) << '\n';
    }
}

int cmd_fit(const DataOptions& input, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset data = read_csv_file(input.path, input.schema);
        const FitReport rep = make_fit_report(data, input.schema, config);
        print_warnings(err, rep.identifiability.warnings);
        print_warnings(err, rep.warnings);
        if (config.format == OutputFormat::Json) {
            out << fit_json(rep).dump(2) << '\n';
        } else {
            print_fit_table(out, rep);
        }
        if (!rep.fit.converged) {
            err << "likelihood maximization did not converge in " << rep.fit.iterations << " iterations\n";
            return static_cast<int>(kExitNonConvergence);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_estimate(const DataOptions& input, const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
    return guarded(err, [&] {
        const Dataset data = read_csv_file(input.path, input.schema);
        const EstimateReport rep = make_estimate_report(data, input.schema, config);
        print_warnings(err, rep.fit.identifiability.warnings);
        print_warnings(err, rep.fit.warnings);
        if (!rep.fit.fit.converged) {
            err << "likelihood maximization did not converge in " << rep.fit.fit.iterations
                << " iterations\n";
            return static_cast<int>(kExitNonConvergence);
        }
        print_warnings(err, rep.warnings);
        if (!config.out.empty()) {
            std::ofstream f(config.out);
            if (!f) throw InputError("cannot write '" + config.out + "'");
            write_curve_csv(f, rep.curve);
        }

        const double level = 100.0 * (1.0 - config.alpha);
        if (config.format == OutputFormat::Json) {
            json j;
            j["n"] = data.size();
            j["verified"] = data.verified_count();
            j["alpha"] = config.alpha;
            j["auc"] = {{"estimate", number(rep.auc)}, {"se", number(rep.auc_se)},
                        {"lo", number(rep.auc_lo)}, {"hi", number(rep.auc_hi)}};
            json pts = json::array();
            for (const auto& p : rep.points) pts.push_back(point_json(p));
            j["roc"] = pts;
            json comp = json::object();
            for (const auto& [m, pe] : rep.comparators) {
                json roc = json::array();
                for (std::size_t k = 0; k < pe.roc.size(); ++k) {
                    roc.push_back({{"s", config.s_points[k]}, {"roc", number(pe.roc[k])}});
                }
                comp[method_label(m)] = {{"auc", number(pe.auc)}, {"roc", roc}};
            }
            j["comparators"] = comp;
            json curve = json::array();
            for (const auto& p : rep.curve) curve.push_back(point_json(p));
            j["curve"] = curve;
            j["warnings"] = rep.warnings;
            out << j.dump(2) << '\n';
        } else {
            out << fmt::format("n = {}, verified = {}\n", data.size(), data.verified_count());
            out << fmt::format("{:<16} {:>8} {:>8}   {:.0f}% CI\n", "target", "estimate", "se", level);
            out << fmt::format("{:<16} {:>8} {:>8}   ({}, {})  length {}\n", "AUC", fixed(rep.auc),
                               fixed(rep.auc_se), fixed(rep.auc_lo), fixed(rep.auc_hi),
                               fixed(rep.auc_hi - rep.auc_lo));
            for (const auto& p : rep.points) {
                out << fmt::format("{:<16} {:>8} {:>8}   ({}, {})  length {}\n",
                                   fmt::format("ROC({})", p.s), fixed(p.roc), fixed(p.se), fixed(p.lo),
                                   fixed(p.hi), fixed(p.hi - p.lo));
            }
            out << "comparator point estimates\n";
            out << fmt::format("{:<16} {:>8}", "method", "AUC");
            for (double s : config.s_points) out << fmt::format(" {:>10}", fmt::format("ROC({})", s));
            out << '\n';
            for (const auto& [m, pe] : rep.comparators) {
                out << fmt::format("{:<16} {:>8}", method_label(m), fixed(pe.auc));
                for (double r : pe.roc) out << fmt::format(" {:>10}", fixed(r));
                out << '\n';
            }
            if (!config.out.empty()) out << "curve written to " << config.out << '\n';
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_gof(const DataOptions& input, const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(config);
        const Dataset data = read_csv_file(input.path, input.schema);
        GofOptions opts;
        opts.B = config.gof_B;
        opts.seed = config.seed;
        opts.threads = config.threads;
        opts.fit = config.fit;
        const GofResult disease = gof_disease(data, opts);
        const FitResult fit = fit_mle(data, std::nullopt, config.fit);
        if (!fit.converged) {
            err << "likelihood maximization did not converge in " << fit.iterations << " iterations\n";
            return static_cast<int>(kExitNonConvergence);
        }
        const GofResult verification = gof_verification(data, opts, &fit);
        const bool disease_passes = disease.p_value >= config.alpha;
        const std::string note =
            "the verification-model test is interpretable only when the disease-model test does not reject";

        if (config.format == OutputFormat::Json) {
            auto one = [](const GofResult& r) {
                return json{{"statistic", number(r.statistic)}, {"T", number(r.raw_T)},
                            {"se_boot", number(r.se_boot)}, {"p_value", number(r.p_value)},
                            {"B", r.B}, {"failures", r.failures}};
            };
            json j = {{"disease_model", one(disease)},
                      {"verification_model", one(verification)},
                      {"disease_model_passes", disease_passes},
                      {"note", note}};
            out << j.dump(2) << '\n';
        } else {
            out << fmt::format("{:<20} {:>12} {:>12} {:>10} {:>8}\n", "test", "T", "T/se", "p-value", "failed");
            auto row = [&](const char* name, const GofResult& r) {
                out << fmt::format("{:<20} {:>12.4f} {:>12.4f} {:>10.3f} {:>4}/{}\n", name, r.raw_T,
                                   r.statistic, r.p_value, r.failures, r.B);
            };
            row("disease model", disease);
            row("verification model", verification);
            out << "note: " << note << '\n';
            if (!disease_passes) {
                out << fmt::format("note: the disease-model test rejects at level {}\n", config.alpha);
            }
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_simulate(const SimulateOptions& sim, const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
    return guarded(err, [&] {
        validate(config);
        CampaignConfig cc;
        cc.scenario = load_scenario(sim.scenario);
        cc.n = sim.n;
        cc.B = sim.B;
        cc.methods = sim.methods;
        cc.s_points = config.s_points;
        cc.seed = config.seed;
        cc.alpha = config.alpha;
        cc.threads = config.threads;
        cc.n_truth = sim.n_truth;
        cc.ipw_bootstrap = sim.ipw_bootstrap;
        cc.fit = config.fit;
        const McReport rep = run_campaign(cc);
        print_warnings(err, rep.flags);

        // Tabular file: one row per method x target x metric.
        std::ostringstream tsv;
        tsv << "scenario\tn\tmethod\ttarget\tmetric\tvalue\n";
        json rows = json::array();
        for (const auto& r : rep.rows) {
            std::vector<std::pair<std::string, double>> metrics{
                {"truth", r.truth},
                {"replicates", r.replicates},
                {"failures", r.failures},
                {"rb_percent", r.rb_percent},
                {"mse", r.mse},
                {"mean_estimate", r.mean_estimate},
                {"n_var", r.n_var},
                {"ci_replicates", r.ci_replicates}};
            if (r.cp) metrics.emplace_back("cp", *r.cp);
            if (r.al) metrics.emplace_back("al", *r.al);
            if (r.mean_sigma2) metrics.emplace_back("mean_sigma2", *r.mean_sigma2);
            json mj = json::object();
            for (const auto& [name, value] : metrics) {
                tsv << rep.scenario << '\t' << rep.n << '\t' << r.method << '\t' << r.target << '\t'
                    << name << '\t' << exact(value) << '\n';
                mj[name] = number(value);
            }
            rows.push_back({{"method", r.method}, {"target", r.target}, {"metrics", mj}});
        }
        json truth = {{"n_mc", rep.truth.n_mc},
                      {"prevalence", rep.truth.prevalence},
                      {"prevalence_se", rep.truth.prevalence_se},
                      {"verified_rate", rep.truth.verified_rate},
                      {"verified_rate_se", rep.truth.verified_rate_se},
                      {"auc", rep.truth.auc},
                      {"auc_se", rep.truth.auc_se},
                      {"s", rep.truth.s},
                      {"roc", rep.truth.roc},
                      {"roc_se", rep.truth.roc_se}};
        const json doc = {{"scenario", rep.scenario}, {"n", rep.n},         {"B", rep.B},
                          {"seed", rep.seed},         {"alpha", rep.alpha}, {"truth", truth},
                          {"flags", rep.flags},       {"rows", rows}};

        if (!config.out.empty()) {
            std::ofstream ft(config.out + ".tsv");
            std::ofstream fj(config.out + ".json");
            if (!ft || !fj) throw InputError("cannot write output files with stem '" + config.out + "'");
            ft << tsv.str();
            fj << doc.dump(2) << '\n';
        }

        if (config.format == OutputFormat::Json) {
            out << doc.dump(2) << '\n';
            return static_cast<int>(kExitOk);
        }
        out << fmt::format("{}: n = {}, replicates = {}, seed = {}\n", rep.scenario, rep.n, rep.B, rep.seed);
        out << fmt::format("truth: P(Y=1) = {:.3f}, P(R=1) = {:.3f}, AUC = {:.3f}", rep.truth.prevalence,
                           rep.truth.verified_rate, rep.truth.auc);
        for (std::size_t k = 0; k < rep.truth.s.size(); ++k) {
            out << fmt::format(", ROC({}) = {:.3f}", rep.truth.s[k], rep.truth.roc[k]);
        }
        out << '\n';
        std::vector<std::string> targets;
        for (const auto& r : rep.rows) {
            if (std::find(targets.begin(), targets.end(), r.target) == targets.end()) targets.push_back(r.target);
        }
        for (const auto& t : targets) {
            out << fmt::format("\n{}\n{:<16} {:>8} {:>10} {:>7} {:>7} {:>6}\n", t, "method", "RB(%)",
                               "MSE(x1000)", "CP", "AL", "fail");
            for (const auto& r : rep.rows) {
                if (r.target != t) continue;
                out << fmt::format("{:<16} {:>8} {:>10} {:>7} {:>7} {:>6}\n",
                                   r.method == "IPW" ? "IPW (approx.)" : r.method,
                                   fixed(r.rb_percent, 3), fixed(1000.0 * r.mse, 3),
                                   r.cp ? fixed(*r.cp) : "-", r.al ? fixed(*r.al) : "-", r.failures);
            }
        }
        if (!config.out.empty()) {
            out << "\nwrote " << config.out << ".tsv and " << config.out << ".json\n";
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_generate(const GenerateOptions& gen, const RunConfig& config, std::ostream& out,
                 std::ostream& err) {
    return guarded(err, [&] {
        const Scenario sc = load_scenario(gen.scenario);
        const SimulatedData sim = simulate_dataset(sc, gen.n, config.seed);
        const std::vector<std::string> names{"v1", "v2"};
        const std::vector<int>* truth = gen.with_truth ? &sim.oracle_y : nullptr;
        if (config.out.empty()) {
            write_csv(out, sim.observed, names, truth);
        } else {
            std::ofstream f(config.out);
            if (!f) throw InputError("cannot write '" + config.out + "'");
            write_csv(f, sim.observed, names, truth);
        }
        return static_cast<int>(kExitOk);
    });
}

}  // namespace nmroc
