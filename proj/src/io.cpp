#include "nsmc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nsmc {

CsvError::CsvError(std::size_t line_, const std::string& what)
    : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ": " + what : what), line(line_) {}

long CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<long>(i);
    }
    return -1;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line, std::size_t lineno) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            out.push_back(was_quoted ? field : trim(field));
            field.clear();
            was_quoted = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw CsvError(lineno, "unterminated quoted field");
    out.push_back(was_quoted ? field : trim(field));
    return out;
}

} // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        auto fields = split_line(line, lineno);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw CsvError(lineno, "expected " + std::to_string(t.header.size()) + " fields, found " +
                                       std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (!have_header) throw CsvError(0, "empty CSV: no header row");
    return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(0, "cannot open " + path.string());
    return read_csv(in);
}

double parse_cell(const std::string& cell, std::size_t line, const std::string& column) {
    const std::string s = trim(cell);
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last) {
        throw CsvError(line, "column '" + column + "': non-numeric value '" + cell + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header) {
    if (static_cast<Eigen::Index>(header.size()) != m.cols()) {
        throw std::invalid_argument("write_matrix_csv: header has " + std::to_string(header.size()) +
                                    " names for " + std::to_string(m.cols()) + " columns");
    }
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
        out << '\n';
    }
}

void write_features_csv(std::ostream& out, const Matrix& features) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < features.cols(); ++j) header.push_back("f" + std::to_string(j));
    write_matrix_csv(out, features, header);
}

void write_edges_csv(std::ostream& out, const EdgeSampleSet& set) {
    out << "row_index,col_index,y\n";
    for (const auto& e : set.entries) out << e.row + 1 << ',' << e.col + 1 << ',' << format_double(e.y) << '\n';
}

void write_weight_matrix_csv(std::ostream& out, const Matrix& w) {
    out << "# " << w.rows() << ',' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? "," : "") << format_double(w(i, j));
        out << '\n';
    }
}

Matrix read_weight_matrix_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw CsvError(1, "expected a '# d,r' shape line");
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw CsvError(1, "expected a '# d,r' shape line");
    const double d = parse_cell(line.substr(2, comma - 2), 1, "d");
    const double r = parse_cell(line.substr(comma + 1), 1, "r");
    if (d < 1 || r < 1 || d != std::floor(d) || r != std::floor(r)) throw CsvError(1, "bad shape line");
    Matrix w(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(r));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        ++line_no;
        if (!std::getline(in, line)) throw CsvError(line_no, "expected " + std::to_string(w.rows()) + " rows");
        std::istringstream fields(line);
        std::string cell;
        Eigen::Index j = 0;
        while (std::getline(fields, cell, ',')) {
            if (j >= w.cols()) throw CsvError(line_no, "too many columns");
            w(i, j) = parse_cell(cell, line_no, "c" + std::to_string(j));
            ++j;
        }
        if (j != w.cols()) throw CsvError(line_no, "expected " + std::to_string(w.cols()) + " columns");
    }
    return w;
}

void write_trace_csv(std::ostream& out, const GdTrace& trace) {
    out << "iter,loss,grad_norm,dist_sq\n";
    for (const auto& r : trace.records) {
        out << r.iter << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm) << ','
            << format_double(r.dist_sq) << '\n';
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace nsmc
