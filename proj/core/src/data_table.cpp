#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "adjfas/data.hpp"

namespace adjfas::data {

namespace {

constexpr int kMaxCardinality = 256;

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

CategoricalTable::CategoricalTable(std::vector<std::string> names, std::vector<int> cardinalities,
                                   std::vector<std::vector<std::uint8_t>> columns)
    : names_(std::move(names)), cards_(std::move(cardinalities)), columns_(std::move(columns)) {
    if (names_.size() != cards_.size() || names_.size() != columns_.size())
        throw ValidationError("table: names, cardinalities and columns differ in length");
    std::set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw ValidationError("table: empty variable name");
        if (!seen.insert(n).second) throw ValidationError("table: duplicate variable name '" + n + "'");
    }
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (cards_[j] < 1 || cards_[j] > kMaxCardinality)
            throw SchemaError("table: cardinality of '" + names_[j] + "' must be in [1, 256]");
        if (columns_[j].size() != columns_.front().size())
            throw ValidationError("table: ragged columns");
        for (std::size_t r = 0; r < columns_[j].size(); ++r) {
            if (columns_[j][r] >= cards_[j]) {
                throw SchemaError("table: row " + std::to_string(r + 1) + ", column '" + names_[j] +
                                  "': code " + std::to_string(columns_[j][r]) +
                                  " >= cardinality " + std::to_string(cards_[j]));
            }
        }
    }
}

std::size_t CategoricalTable::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw LookupError("unknown variable '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

bool CategoricalTable::has(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::vector<std::size_t> CategoricalTable::indices_of(const std::vector<std::string>& names) const {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(index_of(n));
    return out;
}

CategoricalTable CategoricalTable::select(const std::vector<std::string>& names) const {
    std::vector<int> cards;
    std::vector<std::vector<std::uint8_t>> cols;
    for (const auto& n : names) {
        auto j = index_of(n);
        cards.push_back(cards_[j]);
        cols.push_back(columns_[j]);
    }
    return CategoricalTable(names, std::move(cards), std::move(cols));
}

CategoricalTable read_observational(std::istream& in, const std::optional<std::vector<int>>& schema) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty())
        throw ParseError("observational CSV: missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    auto names = split_csv_line(line);
    const std::size_t width = names.size();
    for (std::size_t j = 0; j < width; ++j)
        if (names[j].empty()) throw ParseError("observational CSV: empty name in header column " + std::to_string(j + 1));

    if (schema && schema->size() != width)
        throw SchemaError("observational CSV: schema has " + std::to_string(schema->size()) +
                          " cardinalities for " + std::to_string(width) + " columns");

    std::vector<std::vector<std::uint8_t>> cols(width);
    std::vector<int> max_code(width, -1);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        auto cells = split_csv_line(line);
        if (cells.size() != width)
            throw ParseError("observational CSV: row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " + std::to_string(width));
        for (std::size_t j = 0; j < width; ++j) {
            const auto& c = cells[j];
            int v = -1;
            auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (c.empty() || ec != std::errc() || p != c.data() + c.size() || v < 0)
                throw ParseError("observational CSV: row " + std::to_string(row) + ", column '" + names[j] +
                                 "': malformed cell '" + c + "'");
            if (schema && v >= (*schema)[j])
                throw SchemaError("observational CSV: row " + std::to_string(row) + ", column '" + names[j] +
                                  "': code " + std::to_string(v) + " >= declared cardinality " +
                                  std::to_string((*schema)[j]));
            if (v >= kMaxCardinality)
                throw SchemaError("observational CSV: row " + std::to_string(row) + ", column '" + names[j] +
                                  "': code exceeds 255");
            cols[j].push_back(static_cast<std::uint8_t>(v));
            max_code[j] = std::max(max_code[j], v);
        }
    }
    if (row == 0) throw ParseError("observational CSV: no data rows");

    std::vector<int> cards(width);
    for (std::size_t j = 0; j < width; ++j) cards[j] = schema ? (*schema)[j] : max_code[j] + 1;
    return CategoricalTable(std::move(names), std::move(cards), std::move(cols));
}

CategoricalTable load_observational(const std::filesystem::path& path, const std::optional<std::vector<int>>& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open observational CSV '" + path.string() + "'");
    return read_observational(in, schema);
}

void write_observational(std::ostream& out, const CategoricalTable& table) {
    const auto& names = table.names();
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << '\n';
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
        for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << table.at(r, j);
        out << '\n';
    }
}

void save_observational(const std::filesystem::path& path, const CategoricalTable& table) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_observational(out, table);
}

}  // namespace adjfas::data
