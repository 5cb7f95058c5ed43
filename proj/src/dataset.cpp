#include "srmcts/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace srmcts {

std::string_view to_string(DatasetSource s) noexcept
{
    switch (s) {
    case DatasetSource::synthetic_in_domain: return "synthetic_in_domain";
    case DatasetSource::synthetic_out_of_domain: return "synthetic_out_of_domain";
    case DatasetSource::external: return "external";
    }
    return "?";
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    Dataset out;
    out.id = id;
    out.X = X.select_rows(rows);
    out.y.reserve(rows.size());
    for (std::size_t r : rows) out.y.push_back(y[r]);
    out.source = source;
    out.ground_truth = ground_truth;
    return out;
}

void validate(const Dataset& ds)
{
    if (ds.y.empty()) throw std::invalid_argument("dataset '" + ds.id + "' has no rows");
    if (ds.X.rows() != ds.y.size()) throw std::invalid_argument("dataset '" + ds.id + "': X/y row mismatch");
    if (ds.X.cols() < 1 || ds.X.cols() > static_cast<std::size_t>(kMaxVariables))
        throw std::invalid_argument("dataset '" + ds.id + "' has " + std::to_string(ds.X.cols()) +
                                    " features; supported range is 1..10");
    for (double v : ds.y)
        if (!std::isfinite(v)) throw std::invalid_argument("dataset '" + ds.id + "': non-finite target");
    for (std::size_t j = 0; j < ds.X.cols(); ++j)
        for (double v : ds.X.col(j))
            if (!std::isfinite(v)) throw std::invalid_argument("dataset '" + ds.id + "': non-finite input");
}

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        out.push_back(cell.substr(b));
    }
    return out;
}

} // namespace

Dataset read_csv(const std::filesystem::path& path, std::string id)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header row");
    const auto header = split_csv(line);
    if (header.size() < 2 || header.back() != "y")
        throw std::runtime_error(path.string() + ": header must be x0..x(d-1),y");
    const std::size_t d = header.size() - 1;
    if (d > static_cast<std::size_t>(kMaxVariables))
        throw std::runtime_error(path.string() + ": " + std::to_string(d) +
                                 " features exceeds the limit of 10");
    for (std::size_t j = 0; j < d; ++j)
        if (header[j] != "x" + std::to_string(j))
            throw std::runtime_error(path.string() + ": column " + std::to_string(j) + " must be named x" +
                                     std::to_string(j));

    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() != d + 1)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(d + 1) + " cells");
        std::vector<double> row(d);
        for (std::size_t j = 0; j <= d; ++j) {
            double v = 0.0;
            const auto& c = cells[j];
            auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc{} || p != c.data() + c.size())
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
            if (j < d) row[j] = v;
            else y.push_back(v);
        }
        rows.push_back(std::move(row));
    }

    Dataset ds;
    ds.id = id.empty() ? path.stem().string() : std::move(id);
    ds.X = Matrix::from_rows(rows);
    if (rows.empty()) ds.X = Matrix(0, d);
    ds.y = std::move(y);
    ds.source = DatasetSource::external;
    validate(ds);
    return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (int j = 0; j < ds.dims(); ++j) out << 'x' << j << ',';
    out << "y\n";
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        for (int j = 0; j < ds.dims(); ++j) out << format_constant(ds.X(i, static_cast<std::size_t>(j))) << ',';
        out << format_constant(ds.y[i]) << '\n';
    }
}

} // namespace srmcts
