#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace slowfast {

/// Formats a double with 17 significant digits, '.' decimal point, no
/// thousands separators.
std::string format_real(double v);

/// Minimal CSV writer: one optional leading comment line, a header row, then
/// data rows. All reals go through format_real so reruns are byte-identical.
class CsvWriter {
public:
    explicit CsvWriter(std::string path) : path_(std::move(path)) {}

    void set_comment(std::string comment) { comment_ = std::move(comment); }
    void set_header(std::vector<std::string> names) { header_ = std::move(names); }
    void add_row(const std::vector<std::string>& cells);
    void add_row_reals(const Eigen::VectorXd& values);

    /// Writes the whole file. Throws IoError on failure.
    void write() const;

private:
    std::string path_;
    std::string comment_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Parsed numeric CSV: comment lines (leading '#') are skipped, the first
/// non-comment line is the header.
struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd data;

    /// Column index by exact name, -1 when absent.
    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace slowfast
