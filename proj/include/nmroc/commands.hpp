#pragma once

// Command implementations behind the nmroc executable. Each cmd_* writes its
// report to `out`, diagnostics to `err`, and returns a process exit code.

#include "nmroc/csv_input.hpp"
#include "nmroc/curves.hpp"
#include "nmroc/likelihood.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nmroc {

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,
    kExitNonConvergence = 3,
    kExitNumerical = 4,
};

enum class OutputFormat { Table, Json };

std::vector<double> default_s_grid();  // 0.01, 0.02, ..., 0.99

struct RunConfig {
    double alpha = 0.05;
    std::vector<double> s_grid = default_s_grid();
    std::vector<double> s_points{0.1, 0.2};
    int gof_B = 200;
    std::uint64_t seed = 1;
    FitOptions fit;
    OutputFormat format = OutputFormat::Table;
    std::string out;  // fit: unused; estimate: curve CSV; simulate: file stem; generate: CSV
    unsigned threads = 1;
};

struct CoefficientRow {
    std::string model;  // "disease", "verification" or "selection"
    std::string term;
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_value = 0.0;
    bool significant = false;
};

struct FitReport {
    FitResult fit;
    IdentifiabilityReport identifiability;
    std::vector<CoefficientRow> coefficients;
    std::vector<std::string> warnings;
};

// SEs are sqrt(diag(J^{-1}) / n) with J the observed information per record.
FitReport make_fit_report(const Dataset& data, const InputSchema& schema, const RunConfig& config);

struct CurvePoint {
    double s = 0.0;
    double roc = 0.0;
    double se = 0.0;  // nan when the variance could not be computed
    double lo = 0.0;
    double hi = 0.0;
    std::string error;
};

struct EstimateReport {
    FitReport fit;
    double auc = 0.0;
    double auc_se = 0.0;
    double auc_lo = 0.0;
    double auc_hi = 0.0;
    std::vector<CurvePoint> points;  // at config.s_points
    std::vector<CurvePoint> curve;   // at config.s_grid
    std::vector<std::pair<Method, PointEstimates>> comparators;  // IG, VER, IPW
    std::vector<std::string> warnings;
};

EstimateReport make_estimate_report(const Dataset& data, const InputSchema& schema,
                                    const RunConfig& config);

// Curve CSV with columns s,roc,se,lo,hi.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

struct DataOptions {
    std::string path;
    InputSchema schema;
};

int cmd_fit(const DataOptions& input, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_estimate(const DataOptions& input, const RunConfig& config, std::ostream& out,
                 std::ostream& err);
int cmd_gof(const DataOptions& input, const RunConfig& config, std::ostream& out, std::ostream& err);

struct ScenarioOptions {
    std::optional<int> builtin;
    std::string file;  // JSON scenario description
};

struct SimulateOptions {
    ScenarioOptions scenario;
    std::size_t n = 5000;
    int B = 300;
    std::vector<Method> methods{Method::Our, Method::IPW, Method::IG, Method::VER, Method::FULL};
    std::size_t n_truth = 4'000'000;
    int ipw_bootstrap = 0;
};

// Writes <out>.tsv and <out>.json when config.out is set; always prints a table.
int cmd_simulate(const SimulateOptions& sim, const RunConfig& config, std::ostream& out,
                 std::ostream& err);

struct GenerateOptions {
    ScenarioOptions scenario;
    std::size_t n = 1000;
    bool with_truth = false;  // adds a y_true column
};

// Writes one simulated dataset as CSV (columns x, v1, v2, r, y) to config.out or `out`.
int cmd_generate(const GenerateOptions& gen, const RunConfig& config, std::ostream& out,
                 std::ostream& err);

}  // namespace nmroc
