#pragma once

#include "srmcts/expr.hpp"
#include "srmcts/matrix.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace srmcts {

enum class DatasetSource { synthetic_in_domain, synthetic_out_of_domain, external };

std::string_view to_string(DatasetSource s) noexcept;

struct Dataset {
    std::string id;
    Matrix X;
    std::vector<double> y;
    DatasetSource source = DatasetSource::external;
    std::optional<Expression> ground_truth;

    std::size_t rows() const noexcept { return y.size(); }
    int dims() const noexcept { return static_cast<int>(X.cols()); }

    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Throws std::invalid_argument unless N >= 1, 1 <= d <= 10, shapes agree and
/// every entry is finite.
void validate(const Dataset& ds);

/// CSV with header x0..x(d-1),y. Throws std::runtime_error with a diagnostic on
/// schema problems, including more than 10 feature columns.
Dataset read_csv(const std::filesystem::path& path, std::string id = {});
void write_csv(const Dataset& ds, const std::filesystem::path& path);

} // namespace srmcts
