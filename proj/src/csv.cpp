#include "slowfast/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "slowfast/errors.hpp"

namespace slowfast {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    rows_.push_back(cells);
}

void CsvWriter::add_row_reals(const Eigen::VectorXd& values) {
    std::vector<std::string> cells;
    cells.reserve(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
        cells.push_back(format_real(values(i)));
    rows_.push_back(std::move(cells));
}

void CsvWriter::write() const {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path_ + "' for writing");
    if (!comment_.empty()) out << "# " << comment_ << "\n";
    for (std::size_t i = 0; i < header_.size(); ++i)
        out << (i ? "," : "") << header_[i];
    out << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path_ + "'");
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    CsvTable table;
    std::vector<std::vector<double>> rows;
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!saw_header) {
            table.header = cells;
            saw_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw IoError("'" + path + "': non-numeric cell '" + c + "'");
            }
        }
        if (row.size() != table.header.size())
            throw IoError("'" + path + "': ragged row with " +
                          std::to_string(row.size()) + " cells");
        rows.push_back(std::move(row));
    }
    if (!saw_header) throw IoError("'" + path + "': missing header row");

    table.data.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            table.data(static_cast<Eigen::Index>(r),
                       static_cast<Eigen::Index>(c)) = rows[r][c];
    return table;
}

}  // namespace slowfast
