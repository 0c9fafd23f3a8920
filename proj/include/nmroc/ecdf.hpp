#pragma once

#include <span>
#include <vector>

namespace nmroc {

// Discrete distribution on sorted support points. Ties in the input are merged.
class WeightedEcdf {
public:
    WeightedEcdf() = default;
    // Weights must be nonnegative with a positive total; they are normalized.
    WeightedEcdf(std::span<const double> x, std::span<const double> w);

    static WeightedEcdf unweighted(std::span<const double> x);

    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& cumulative() const { return cum_; }
    bool empty() const { return support_.empty(); }

    // F(x) = total weight on support points <= x (right-continuous).
    double eval(double x) const;
    // F(x-) = total weight on support points < x.
    double eval_left(double x) const;
    // inf{x in support : F(x) >= q}; for q = 0 a point one unit below the support.
    double quantile(double q) const;

private:
    std::vector<double> support_;
    std::vector<double> weights_;
    std::vector<double> cum_;
};

}  // namespace nmroc
