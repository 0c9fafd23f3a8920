#pragma once

#include "nmroc/dataset.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nmroc {

// Column roles for CSV ingestion.
struct InputSchema {
    std::string biomarker;
    std::vector<std::string> covariates;
    std::string verified;
    std::string disease;
    // (x - a) / b applied to the biomarker.
    std::optional<std::pair<double, double>> transform;
};

// Reads a comma-separated file with a header row. The disease cell must be
// empty or "NA" exactly when the verified cell is 0. Errors name the line.
Dataset read_csv(std::istream& in, const InputSchema& schema);
Dataset read_csv_file(const std::string& path, const InputSchema& schema);

// Writes x, v1..vp, r, y (y empty on unverified rows) and, when given, a
// y_true column carrying oracle disease status.
void write_csv(std::ostream& out, const Dataset& data, const std::vector<std::string>& covariate_names,
               const std::vector<int>* oracle_y = nullptr);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace nmroc
