#pragma once

// Simulation designs and Monte Carlo campaigns.
//
// Covariates: X ~ Uniform[-1, 1], V1 ~ N(0, 1), V2 ~ Bernoulli(0.5), independent.
// Disease predictor  h_d = d1 + d2 x + d3 v1 + d4 v2 + d_sq v1^2
// Verification pred. h_r = r1 + r2 x + r3 v1 + r4 v2 + r_sq v1^2
//   P(Y=1 | x, v, R=1) = 1/(1 + exp(h_d))
//   P(R=1 | y, x, v)   = 1/(1 + exp(h_r + beta y))
// Subjects are drawn R first, from the induced P(R=1 | x, v) = 1/(1 + exp(h_r + c)),
// then Y from P(Y=1 | x, v, r) = 1/(1 + exp(h_d + (r - 1) beta)).

#include "nmroc/curves.hpp"
#include "nmroc/dataset.hpp"
#include "nmroc/inference.hpp"
#include "nmroc/likelihood.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nmroc {

struct Scenario {
    std::string name;
    std::array<double, 4> disease{};       // over (1, x, v1, v2)
    double disease_v1sq = 0.0;
    std::array<double, 4> verification{};  // over (1, x, v1, v2)
    double verification_v1sq = 0.0;
    double beta = 0.0;

    double disease_predictor(double x, double v1, double v2) const;
    double verification_predictor(double x, double v1, double v2) const;
    // True eta for the linear working model; meaningful when both v1^2 terms are 0.
    ParameterVector linear_parameters() const;
};

// Built-in designs 1 (MAR), 2 (non-ignorable), 3 (non-ignorable with v1^2 terms).
Scenario builtin_scenario(int index);
// JSON object with keys name, disease[4], disease_v1sq, verification[4],
// verification_v1sq, beta. Throws InputError on malformed input.
Scenario scenario_from_json(const std::string& text);

// Observed data plus the true disease status of every subject. Only the Full
// comparator reads oracle_y; `observed` never exposes y for unverified records.
struct SimulatedData {
    Dataset observed;
    std::vector<int> oracle_y;
};

SimulatedData simulate_dataset(const Scenario& scenario, std::size_t n, std::uint64_t seed);

struct TrueTargets {
    std::size_t n_mc = 0;
    double prevalence = 0.0;
    double prevalence_se = 0.0;
    double verified_rate = 0.0;
    double verified_rate_se = 0.0;
    double auc = 0.0;
    double auc_se = 0.0;
    std::vector<double> s;
    std::vector<double> roc;
    std::vector<double> roc_se;
};

// Monte Carlo truth from n_mc oracle draws; standard errors from 10 batches.
TrueTargets true_targets(const Scenario& scenario, std::size_t n_mc, std::uint64_t seed,
                         std::span<const double> s);

struct CampaignConfig {
    Scenario scenario;
    std::size_t n = 5000;
    int B = 300;
    std::vector<Method> methods{Method::Our, Method::IPW, Method::IG, Method::VER, Method::FULL};
    std::vector<double> s_points{0.1, 0.2};
    std::uint64_t seed = 1;
    double alpha = 0.05;
    unsigned threads = 1;
    std::size_t n_truth = 4'000'000;
    std::optional<TrueTargets> truth;  // computed when absent
    int ipw_bootstrap = 0;             // >0: percentile CIs for IPW from this many resamples
    FitOptions fit;
};

struct MetricSummary {
    std::string method;
    std::string target;   // "AUC" or "ROC(s)"
    double truth = 0.0;
    int replicates = 0;   // successful point estimates
    int failures = 0;
    double rb_percent = 0.0;
    double mse = 0.0;
    double mean_estimate = 0.0;
    double n_var = 0.0;   // n times the empirical variance of the estimates
    std::optional<double> cp;
    std::optional<double> al;
    std::optional<double> mean_sigma2;  // mean plug-in variance (Our only)
    int ci_replicates = 0;
};

struct McReport {
    std::string scenario;
    std::size_t n = 0;
    int B = 0;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    TrueTargets truth;
    std::vector<MetricSummary> rows;
    std::vector<std::string> flags;  // methods whose failure rate exceeds 5%

    const MetricSummary* find(std::string_view method, std::string_view target) const;
};

std::string target_name(std::optional<double> s);

// RB(%) and MSE of a set of estimates against a truth.
double relative_bias_percent(std::span<const double> estimates, double truth);
double mean_squared_error(std::span<const double> estimates, double truth);

McReport run_campaign(const CampaignConfig& config);

}  // namespace nmroc
