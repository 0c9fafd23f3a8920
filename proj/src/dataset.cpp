#include "nmroc/dataset.hpp"

#include "nmroc/error.hpp"

#include <cmath>
#include <string>

namespace nmroc {

Dataset::Dataset(std::span<const Record> records) {
    if (records.empty()) throw InputError("dataset: no records");
    p_ = records.front().v.size();
    const std::size_t n = records.size();
    x_.resize(n);
    v_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p_));
    r_.resize(n);
    y_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Record& rec = records[i];
        if (rec.v.size() != p_) {
            throw InputError("dataset: record " + std::to_string(i) + " has " +
                             std::to_string(rec.v.size()) + " covariates, expected " +
                             std::to_string(p_));
        }
        if (rec.r != 0 && rec.r != 1) {
            throw InputError("dataset: record " + std::to_string(i) + " has r not in {0,1}");
        }
        if (!std::isfinite(rec.x)) {
            throw InputError("dataset: record " + std::to_string(i) + " has non-finite biomarker");
        }
        x_[i] = rec.x;
        for (std::size_t j = 0; j < p_; ++j) {
            if (!std::isfinite(rec.v[j])) {
                throw InputError("dataset: record " + std::to_string(i) +
                                 " has non-finite covariate");
            }
            v_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rec.v[j];
        }
        r_[i] = rec.r;
        if (rec.r == 1) {
            if (!rec.y || (*rec.y != 0 && *rec.y != 1)) {
                throw InputError("dataset: verified record " + std::to_string(i) +
                                 " lacks a 0/1 disease status");
            }
            y_[i] = *rec.y;
            ++n1_;
        } else if (rec.y) {
            throw InputError("dataset: unverified record " + std::to_string(i) +
                             " carries a disease status");
        }
    }
    build_design();
}

Dataset::Dataset(std::size_t p, std::vector<double> x, RowMatrix v, std::vector<int> r,
                 std::vector<std::optional<int>> y)
    : p_(p), x_(std::move(x)), v_(std::move(v)), r_(std::move(r)) {
    const std::size_t n = x_.size();
    if (n == 0) throw InputError("dataset: no records");
    if (static_cast<std::size_t>(v_.rows()) != n || static_cast<std::size_t>(v_.cols()) != p_ ||
        r_.size() != n || y.size() != n) {
        throw InputError("dataset: column lengths disagree");
    }
    y_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x_[i])) {
            throw InputError("dataset: record " + std::to_string(i) + " has non-finite biomarker");
        }
        if (r_[i] != 0 && r_[i] != 1) {
            throw InputError("dataset: record " + std::to_string(i) + " has r not in {0,1}");
        }
        if (r_[i] == 1) {
            if (!y[i] || (*y[i] != 0 && *y[i] != 1)) {
                throw InputError("dataset: verified record " + std::to_string(i) +
                                 " lacks a 0/1 disease status");
            }
            y_[i] = *y[i];
            ++n1_;
        } else if (y[i]) {
            throw InputError("dataset: unverified record " + std::to_string(i) +
                             " carries a disease status");
        }
    }
    if (!v_.allFinite()) throw InputError("dataset: non-finite covariate");
    build_design();
}

void Dataset::build_design() {
    const auto n = static_cast<Eigen::Index>(x_.size());
    const auto p = static_cast<Eigen::Index>(p_);
    design_.resize(n, p + 2);
    design_.col(0).setOnes();
    design_.col(1) = Eigen::Map<const Eigen::VectorXd>(x_.data(), n);
    if (p > 0) design_.rightCols(p) = v_;
}

Record Dataset::record(std::size_t i) const {
    Record rec;
    rec.x = x_[i];
    const auto sp = v(i);
    rec.v.assign(sp.begin(), sp.end());
    rec.r = r_[i];
    rec.y = y(i);
    return rec;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    const std::size_t m = rows.size();
    std::vector<double> x(m);
    RowMatrix v(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p_));
    std::vector<int> r(m);
    std::vector<std::optional<int>> ys(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = rows[k];
        x[k] = x_[i];
        v.row(static_cast<Eigen::Index>(k)) = v_.row(static_cast<Eigen::Index>(i));
        r[k] = r_[i];
        ys[k] = y(i);
    }
    return Dataset(p_, std::move(x), std::move(v), std::move(r), std::move(ys));
}

Dataset Dataset::verified_only() const {
    std::vector<std::size_t> rows;
    rows.reserve(n1_);
    for (std::size_t i = 0; i < size(); ++i) {
        if (r_[i] == 1) rows.push_back(i);
    }
    return subset(rows);
}

std::size_t Dataset::count_verified_with(int y) const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        if (r_[i] == 1 && y_[i] == y) ++k;
    }
    return k;
}

}  // namespace nmroc
