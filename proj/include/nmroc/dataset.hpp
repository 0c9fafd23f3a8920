#pragma once

#include "nmroc/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nmroc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Observed data in columnar form. Disease status is stored only for verified
// records: there is no way to read y for a record with r = 0.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::span<const Record> records);
    Dataset(std::size_t p, std::vector<double> x, RowMatrix v, std::vector<int> r,
            std::vector<std::optional<int>> y);

    std::size_t size() const { return x_.size(); }
    std::size_t covariate_dim() const { return p_; }
    std::size_t verified_count() const { return n1_; }

    double x(std::size_t i) const { return x_[i]; }
    std::span<const double> v(std::size_t i) const {
        return {v_.data() + i * p_, p_};
    }
    int r(std::size_t i) const { return r_[i]; }
    // Disease status, present iff r(i) == 1.
    std::optional<int> y(std::size_t i) const {
        if (r_[i] == 0) return std::nullopt;
        return y_[i];
    }

    const std::vector<double>& biomarker() const { return x_; }
    const std::vector<int>& verified() const { return r_; }
    // Rows (1, x, v').
    const RowMatrix& design() const { return design_; }

    Record record(std::size_t i) const;
    Dataset subset(std::span<const std::size_t> rows) const;
    Dataset verified_only() const;

    std::size_t count_verified_with(int y) const;

private:
    void build_design();

    std::size_t p_ = 0;
    std::size_t n1_ = 0;
    std::vector<double> x_;
    RowMatrix v_;
    std::vector<int> r_;
    std::vector<int> y_;  // 0 where unverified; never exposed for those rows
    RowMatrix design_;
};

}  // namespace nmroc
