#include "nmroc/csv_input.hpp"

#include "nmroc/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace nmroc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

std::string where(std::size_t line, const std::string& column) {
    return "line " + std::to_string(line) + ", column '" + column + "'";
}

double parse_real(const std::string& cell, std::size_t line, const std::string& column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
        throw InputError(where(line, column) + ": cannot parse '" + cell + "' as a number");
    }
    if (!std::isfinite(v)) {
        throw InputError(where(line, column) + ": value must be finite");
    }
    return v;
}

int parse_binary(const std::string& cell, std::size_t line, const std::string& column) {
    if (cell == "0") return 0;
    if (cell == "1") return 1;
    throw InputError(where(line, column) + ": expected 0 or 1, got '" + cell + "'");
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

Dataset read_csv(std::istream& in, const InputSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    // Header, skipping a UTF-8 byte order mark.
    if (!std::getline(in, line)) throw InputError("input is empty: a header row is required");
    ++line_no;
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < header.size(); ++j) col.emplace(header[j], j);

    auto locate = [&](const std::string& name, const char* role) {
        if (name.empty()) throw InputError(std::string("no column given for the ") + role);
        const auto it = col.find(name);
        if (it == col.end()) {
            throw InputError(std::string("column '") + name + "' (" + role + ") not found in header");
        }
        return it->second;
    };
    const std::size_t cx = locate(schema.biomarker, "biomarker");
    const std::size_t cr = locate(schema.verified, "verification flag");
    const std::size_t cy = locate(schema.disease, "disease status");
    std::vector<std::size_t> cv;
    for (const auto& name : schema.covariates) cv.push_back(locate(name, "covariate"));
    if (schema.transform && !(schema.transform->second != 0.0)) {
        throw InputError("transform scale must be nonzero");
    }

    std::vector<Record> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw InputError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(cells.size()));
        }
        Record rec;
        rec.x = parse_real(cells[cx], line_no, schema.biomarker);
        if (schema.transform) rec.x = (rec.x - schema.transform->first) / schema.transform->second;
        for (std::size_t k = 0; k < cv.size(); ++k) {
            rec.v.push_back(parse_real(cells[cv[k]], line_no, schema.covariates[k]));
        }
        rec.r = parse_binary(cells[cr], line_no, schema.verified);
        const std::string& ycell = cells[cy];
        if (rec.r == 0) {
            if (!is_missing(ycell)) {
                throw InputError(where(line_no, schema.disease) +
                                 ": disease status present on an unverified row");
            }
        } else {
            if (is_missing(ycell)) {
                throw InputError(where(line_no, schema.disease) +
                                 ": disease status missing on a verified row");
            }
            rec.y = parse_binary(ycell, line_no, schema.disease);
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw InputError("input has a header but no data rows");
    return Dataset(records);
}

Dataset read_csv_file(const std::string& path, const InputSchema& schema) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data, const std::vector<std::string>& covariate_names,
               const std::vector<int>* oracle_y) {
    if (covariate_names.size() != data.covariate_dim()) {
        throw InputError("write_csv: covariate name count does not match the data");
    }
    out << "x";
    for (const auto& name : covariate_names) out << ',' << name;
    out << ",r,y";
    if (oracle_y) out << ",y_true";
    out << '\n';
    char buf[64];
    auto num = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << num(data.x(i));
        for (double v : data.v(i)) out << ',' << num(v);
        out << ',' << data.r(i) << ',';
        if (const auto y = data.y(i)) out << *y;
        if (oracle_y) out << ',' << (*oracle_y)[i];
        out << '\n';
    }
}

}  // namespace nmroc
