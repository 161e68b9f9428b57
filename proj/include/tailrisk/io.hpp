#pragma once

// Small CSV readers for asset statistics, correlation matrices and samples.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tailrisk/errors.hpp"
#include "tailrisk/portfolio.hpp"

namespace tailrisk::io {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n\"");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n\"");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    return ec == std::errc() && ptr == last;
}

inline double to_double(const std::string& s, const std::string& where) {
    double v;
    if (!parse_double(s, v)) throw validation_error(where + ": cannot parse '" + s + "' as a number");
    return v;
}

/// Non-blank lines of a text file.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!trim(line).empty()) lines.push_back(line);
    return lines;
}

/// Single-column numeric sample; a non-numeric first line is taken as a header.
inline std::vector<double> read_sample_csv(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<double> xs;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto cells = split(lines[i]);
        double v;
        if (i == 0 && !cells.empty() && !parse_double(cells[0], v)) continue;
        if (cells.empty()) continue;
        xs.push_back(to_double(cells[0], path + " line " + std::to_string(i + 1)));
    }
    if (xs.empty()) throw validation_error(path + ": sample is empty");
    return xs;
}

struct AssetTable {
    std::vector<std::string> names;
    Eigen::VectorXd expected_return;
    Eigen::VectorXd stdev;
};

/// Columns name, expected_return, stdev (fractions); header row required.
inline AssetTable read_assets_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw validation_error(path + ": expected a header and at least one asset");
    const auto header = split(lines[0]);
    int col_name = -1, col_ret = -1, col_sd = -1;
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
        if (header[j] == "name") col_name = j;
        else if (header[j] == "expected_return") col_ret = j;
        else if (header[j] == "stdev") col_sd = j;
    }
    if (col_name < 0 || col_ret < 0 || col_sd < 0)
        throw validation_error(path + ": header must contain name, expected_return, stdev");
    AssetTable t;
    const auto n = static_cast<Eigen::Index>(lines.size() - 1);
    t.expected_return.resize(n);
    t.stdev.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto cells = split(lines[i + 1]);
        const std::string where = path + " line " + std::to_string(i + 2);
        if (static_cast<int>(cells.size()) <= std::max({col_name, col_ret, col_sd}))
            throw validation_error(where + ": too few columns");
        t.names.push_back(cells[col_name]);
        t.expected_return(i) = to_double(cells[col_ret], where);
        t.stdev(i) = to_double(cells[col_sd], where);
    }
    return t;
}

struct CorrelationTable {
    std::vector<std::string> names;
    Eigen::MatrixXd matrix;
};

/// Square matrix with a header row and a leading column of asset names.
inline CorrelationTable read_correlation_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw validation_error(path + ": empty correlation file");
    const auto header = split(lines[0]);
    CorrelationTable t;
    t.names.assign(header.begin() + 1, header.end());
    const auto n = static_cast<Eigen::Index>(t.names.size());
    if (static_cast<Eigen::Index>(lines.size() - 1) != n)
        throw validation_error(path + ": correlation matrix is not square");
    t.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto cells = split(lines[i + 1]);
        const std::string where = path + " line " + std::to_string(i + 2);
        if (static_cast<Eigen::Index>(cells.size()) != n + 1) throw validation_error(where + ": correlation matrix is not square");
        if (cells[0] != t.names[i]) throw validation_error(where + ": row name '" + cells[0] + "' does not match header");
        for (Eigen::Index j = 0; j < n; ++j) t.matrix(i, j) = to_double(cells[j + 1], where);
    }
    return t;
}

/// Assets and correlations combined; names must agree in order.
inline AssetUniverse load_universe(const std::string& assets_path, const std::string& corr_path) {
    auto a = read_assets_csv(assets_path);
    auto c = read_correlation_csv(corr_path);
    if (a.names.size() != c.names.size())
        throw validation_error("correlation matrix has " + std::to_string(c.names.size()) + " assets, asset file has " +
                               std::to_string(a.names.size()));
    for (std::size_t i = 0; i < a.names.size(); ++i)
        if (a.names[i] != c.names[i])
            throw validation_error("asset '" + a.names[i] + "' does not match correlation column '" + c.names[i] + "'");
    return AssetUniverse::make(std::move(a.names), std::move(a.expected_return), std::move(a.stdev), std::move(c.matrix));
}

}  // namespace tailrisk::io
