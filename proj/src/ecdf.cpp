#include "nmroc/ecdf.hpp"

#include "nmroc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nmroc {

namespace {
// Cumulative weights within this distance of q count as reaching q.
constexpr double kQuantileSlack = 1e-12;
}  // namespace

WeightedEcdf::WeightedEcdf(std::span<const double> x, std::span<const double> w) {
    if (x.size() != w.size()) throw InputError("WeightedEcdf: size mismatch");
    if (x.empty()) throw InputError("WeightedEcdf: empty support");
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        if (!(w[i] >= 0.0) || !std::isfinite(w[i])) {
            throw InputError("WeightedEcdf: weights must be finite and nonnegative");
        }
        if (!std::isfinite(x[i])) throw InputError("WeightedEcdf: non-finite support point");
        if (!support_.empty() && support_.back() == x[i]) {
            weights_.back() += w[i];
        } else {
            support_.push_back(x[i]);
            weights_.push_back(w[i]);
        }
        total += w[i];
    }
    if (!(total > 0.0)) throw NumericalError("WeightedEcdf: total weight is zero");

    cum_.resize(weights_.size());
    double run = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        run += weights_[j];
        cum_[j] = run / total;
        weights_[j] /= total;
    }
    cum_.back() = 1.0;
}

WeightedEcdf WeightedEcdf::unweighted(std::span<const double> x) {
    const std::vector<double> w(x.size(), 1.0);
    return WeightedEcdf(x, w);
}

double WeightedEcdf::eval(double x) const {
    const auto it = std::upper_bound(support_.begin(), support_.end(), x);
    if (it == support_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

double WeightedEcdf::eval_left(double x) const {
    const auto it = std::lower_bound(support_.begin(), support_.end(), x);
    if (it == support_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

double WeightedEcdf::quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("WeightedEcdf::quantile: q outside [0,1]");
    if (support_.empty()) throw InputError("WeightedEcdf::quantile: empty distribution");
    if (q == 0.0) return support_.front() - 1.0;
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), q - std::min(kQuantileSlack, 0.5 * q));
    return support_[static_cast<std::size_t>(it - cum_.begin())];
}

}  // namespace nmroc
