#include "qdiff/harness/table.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qdiff/errors.hpp"

namespace qdiff::harness {

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string render(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return quote(std::get<std::string>(c));
}

}  // namespace

ResultTable::ResultTable(std::vector<Column> schema, bool flag_nonfinite)
    : columns_(std::move(schema)), flag_(flag_nonfinite) {
    require(!columns_.empty(), "ResultTable: empty schema");
    for (const auto& c : columns_) require(!c.name.empty() && !c.unit.empty(), "ResultTable: column needs name and unit");
    if (flag_) columns_.push_back({"nonfinite", "flag"});
}

void ResultTable::add_row(std::vector<Cell> row) {
    const std::size_t data_cols = columns_.size() - (flag_ ? 1 : 0);
    require(row.size() == data_cols, "ResultTable: row has " + std::to_string(row.size()) + " cells, schema has " +
                                         std::to_string(data_cols));
    bool nonfinite = false;
    for (const auto& c : row)
        if (const auto* d = std::get_if<double>(&c); d && !std::isfinite(*d)) nonfinite = true;
    if (nonfinite && !flag_) throw ValidationError("ResultTable: non-finite value in a table without a flag column");
    if (flag_) row.emplace_back(static_cast<long long>(nonfinite ? 1 : 0));
    rows_.push_back(std::move(row));
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit_table(const ResultTable& table, const std::filesystem::path& path) {
    std::ostringstream out;
    for (std::size_t i = 0; i < table.columns().size(); ++i) {
        const auto& c = table.columns()[i];
        out << (i ? "," : "") << quote(c.name + " (" + c.unit + ")");
    }
    out << '\n';
    for (const auto& row : table.rows()) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << render(row[i]);
        out << '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const std::string s = out.str();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

CsvData read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool in_quotes = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n') {
            rec.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(rec));
            rec.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
            any = true;
        }
    }
    if (any) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    CsvData out;
    if (!records.empty()) {
        out.header = std::move(records.front());
        out.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
    }
    return out;
}

}  // namespace qdiff::harness
