#pragma once

// Two-step model checking with unweighted-sum-of-squares statistics
//   T = sum_i {(o_i - p_i)^2 - p_i (1 - p_i)}
// standardized by a case-resampling bootstrap standard error and referred to N(0,1).
// Step 1 checks the disease model on verified records (o = y, p = p1).
// Step 2 checks the induced verification model on all records (o = r, p = pi); it
// is interpretable only once the disease model passes step 1.

#include "nmroc/dataset.hpp"
#include "nmroc/likelihood.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace nmroc {

struct GofOptions {
    int B = 200;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    FitOptions fit;
};

struct GofResult {
    double statistic = 0.0;  // raw_T / se_boot
    double raw_T = 0.0;
    double se_boot = 0.0;
    double p_value = 1.0;    // two-sided
    int B = 0;
    int failures = 0;        // bootstrap refits that failed
    std::vector<double> replicate_Ts;  // successful replicates, in replicate order
};

double unweighted_sum_of_squares(std::span<const int> outcome, std::span<const double> prob);

GofResult gof_disease(const Dataset& data, const GofOptions& opts = {});

// `fit` may carry the joint fit on `data`; it is recomputed when absent.
GofResult gof_verification(const Dataset& data, const GofOptions& opts = {},
                           const FitResult* fit = nullptr);

}  // namespace nmroc
