#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsmc/datagen.hpp"
#include "nsmc/model.hpp"
#include "nsmc/optimizer.hpp"

namespace nsmc {

/// Malformed CSV input. `line` is 1-based; 0 when the error is not tied to a line.
class CsvError : public std::runtime_error {
public:
    CsvError(std::size_t line, const std::string& what);
    std::size_t line;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; ///< source line of each row

    /// Column index by name, or -1.
    [[nodiscard]] long column(std::string_view name) const;
};

/// Comma-separated text with a header row. Fields may be double-quoted
/// ("" escapes a quote). Blank lines and lines starting with '#' are skipped.
/// Throws CsvError on ragged rows or an unterminated quote.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Parses a whole cell as a double (surrounding blanks allowed).
/// Throws CsvError naming the line and column otherwise.
double parse_cell(const std::string& cell, std::size_t line, const std::string& column);

/// Shortest text that round-trips to the same double.
std::string format_double(double v);

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header);

/// Header f0..f{d-1}, one row per item.
void write_features_csv(std::ostream& out, const Matrix& features);

/// Columns row_index,col_index,y with 1-based indices.
void write_edges_csv(std::ostream& out, const EdgeSampleSet& set);

/// One weight matrix: a "# d,r" shape line, then d rows of r values.
void write_weight_matrix_csv(std::ostream& out, const Matrix& w);
Matrix read_weight_matrix_csv(std::istream& in);

/// Columns iter,loss,grad_norm,dist_sq.
void write_trace_csv(std::ostream& out, const GdTrace& trace);

/// Writes `text` to `path`, throwing std::runtime_error if the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace nsmc
