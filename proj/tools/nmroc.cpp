#include "nmroc/commands.hpp"
#include "nmroc/parallel.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Common {
    nmroc::RunConfig cfg;
    std::vector<double> s_points;
    std::string format = "table";
};

void add_run_options(CLI::App* sub, Common& c) {
    sub->add_option("--alpha", c.cfg.alpha, "1 - confidence level")->capture_default_str();
    sub->add_option("--s", c.s_points, "false positive rate to report (repeatable; default 0.1 and 0.2)");
    sub->add_option("--seed", c.cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--tol", c.cfg.fit.tol, "convergence tolerance on max|score|/n")->capture_default_str();
    sub->add_option("--max-iter", c.cfg.fit.max_iter, "Newton iteration limit")->capture_default_str();
    sub->add_option("--format", c.format, "table or json")
        ->check(CLI::IsMember({"table", "json"}))
        ->capture_default_str();
    sub->add_option("--threads", c.cfg.threads, "worker threads")->capture_default_str();
}

struct DataFlags {
    std::string path;
    std::string biomarker = "x";
    std::string covariates;
    std::string verified = "r";
    std::string disease = "y";
    std::string transform;
};

void add_data_options(CLI::App* sub, DataFlags& d) {
    sub->add_option("csv", d.path, "input CSV with a header row")->required();
    sub->add_option("--biomarker", d.biomarker, "biomarker column")->capture_default_str();
    sub->add_option("--covariates", d.covariates, "comma-separated covariate columns");
    sub->add_option("--verified", d.verified, "verification indicator column (0/1)")->capture_default_str();
    sub->add_option("--disease", d.disease, "disease column (0/1, empty or NA when unverified)")
        ->capture_default_str();
    sub->add_option("--transform", d.transform, "a,b: use (x - a)/b as the biomarker");
}

nmroc::DataOptions to_data_options(const DataFlags& d) {
    nmroc::DataOptions o;
    o.path = d.path;
    o.schema.biomarker = d.biomarker;
    o.schema.covariates = split_list(d.covariates);
    o.schema.verified = d.verified;
    o.schema.disease = d.disease;
    if (!d.transform.empty()) {
        const auto parts = split_list(d.transform);
        if (parts.size() != 2) throw CLI::ValidationError("--transform", "expected a,b");
        try {
            o.schema.transform = std::make_pair(std::stod(parts[0]), std::stod(parts[1]));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--transform", "expected two numbers a,b");
        }
    }
    return o;
}

void finish(Common& c) {
    if (!c.s_points.empty()) c.cfg.s_points = c.s_points;
    c.cfg.format = c.format == "json" ? nmroc::OutputFormat::Json : nmroc::OutputFormat::Table;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ROC curve and AUC estimation with non-ignorable missing disease status"};
    app.require_subcommand(1);

    Common common;
    common.cfg.threads = nmroc::default_threads();
    DataFlags data;

    auto* fit = app.add_subcommand("fit", "fit the disease and verification models");
    add_data_options(fit, data);
    add_run_options(fit, common);

    auto* est = app.add_subcommand("estimate", "AUC and ROC estimates with confidence intervals");
    add_data_options(est, data);
    add_run_options(est, common);
    est->add_option("--out", common.cfg.out, "write the ROC curve (s,roc,se,lo,hi) to this CSV");

    auto* gof = app.add_subcommand("gof", "goodness-of-fit tests for both models");
    add_data_options(gof, data);
    add_run_options(gof, common);
    gof->add_option("--gof-B", common.cfg.gof_B, "bootstrap replicates")->capture_default_str();

    nmroc::SimulateOptions sim;
    std::string methods;
    int builtin = 0;
    auto* simc = app.add_subcommand("simulate", "Monte Carlo campaign");
    add_run_options(simc, common);
    simc->add_option("--scenario", builtin, "built-in scenario 1, 2 or 3");
    simc->add_option("--scenario-file", sim.scenario.file, "JSON scenario description");
    simc->add_option("--n", sim.n, "sample size")->capture_default_str();
    simc->add_option("--B", sim.B, "replicates")->capture_default_str();
    simc->add_option("--methods", methods, "comma-separated subset of Our,IPW,IG,VER,Full");
    simc->add_option("--n-truth", sim.n_truth, "draws for the Monte Carlo truth")->capture_default_str();
    simc->add_option("--ipw-boot", sim.ipw_bootstrap, "bootstrap resamples for IPW intervals (0: none)")
        ->capture_default_str();
    simc->add_option("--out", common.cfg.out, "write <out>.tsv and <out>.json");

    nmroc::GenerateOptions gen;
    auto* genc = app.add_subcommand("generate", "write one simulated dataset as CSV");
    genc->add_option("--scenario", builtin, "built-in scenario 1, 2 or 3");
    genc->add_option("--scenario-file", gen.scenario.file, "JSON scenario description");
    genc->add_option("--n", gen.n, "sample size")->capture_default_str();
    genc->add_option("--seed", common.cfg.seed, "random seed")->capture_default_str();
    genc->add_flag("--with-truth", gen.with_truth, "add a y_true column with every disease status");
    genc->add_option("--out", common.cfg.out, "output CSV (default: standard output)");

    nmroc::DataOptions input;
    try {
        app.parse(argc, argv);
        finish(common);
        if (!fit->parsed() && !est->parsed() && !gof->parsed()) {
            if (builtin != 0) {
                sim.scenario.builtin = builtin;
                gen.scenario.builtin = builtin;
            }
            if (!methods.empty()) {
                sim.methods.clear();
                for (const auto& m : split_list(methods)) {
                    const auto parsed = nmroc::parse_method(m);
                    if (!parsed) throw CLI::ValidationError("--methods", "unknown method '" + m + "'");
                    sim.methods.push_back(*parsed);
                }
            }
        } else {
            input = to_data_options(data);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return nmroc::kExitInput;
    }

    if (fit->parsed()) return nmroc::cmd_fit(input, common.cfg, std::cout, std::cerr);
    if (est->parsed()) return nmroc::cmd_estimate(input, common.cfg, std::cout, std::cerr);
    if (gof->parsed()) return nmroc::cmd_gof(input, common.cfg, std::cout, std::cerr);
    if (simc->parsed()) return nmroc::cmd_simulate(sim, common.cfg, std::cout, std::cerr);
    return nmroc::cmd_generate(gen, common.cfg, std::cout, std::cerr);
}
