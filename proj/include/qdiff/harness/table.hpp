#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace qdiff::harness {

struct Column {
    std::string name;
    std::string unit = "1";  ///< "1" for dimensionless quantities
};

using Cell = std::variant<double, long long, std::string>;

/// Rows of typed cells under a schema fixed at construction. Non-finite numbers
/// are accepted only when the table carries a flag column, which is then set
/// on every row containing one.
class ResultTable {
public:
    explicit ResultTable(std::vector<Column> schema, bool flag_nonfinite = false);

    void add_row(std::vector<Cell> row);

    const std::vector<Column>& columns() const { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    bool has_flag_column() const { return flag_; }

    /// Seeds the rows were computed from (recorded in the run manifest).
    std::vector<std::uint64_t> seeds;

private:
    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> rows_;
    bool flag_ = false;
};

/// Formats a double with 17 significant digits ("inf", "-inf", "nan" when non-finite).
std::string format_number(double v);

/// RFC-4180 CSV: header "name (unit)", LF line endings, 17 significant digits.
/// Throws std::runtime_error naming the path on I/O failure.
void emit_table(const ResultTable& table, const std::filesystem::path& path);

struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
/// Reads a file written by emit_table (quoted fields supported).
CsvData read_csv(const std::filesystem::path& path);

}  // namespace qdiff::harness
