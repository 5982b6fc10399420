#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "nsmc/experiments.hpp"
#include "nsmc/io.hpp"
#include "nsmc/random.hpp"

namespace nsmc {

Matrix standardize_columns(const Matrix& x) {
    Matrix out = x;
    const auto n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).sum() / n;
        out.col(j).array() -= mean;
        const double sd = std::sqrt(out.col(j).squaredNorm() / n);
        if (sd > 0.0) {
            out.col(j) /= sd;
        } else {
            out.col(j).setZero();
        }
    }
    return out;
}

LabeledData load_labeled_csv(const std::filesystem::path& path, const LoadOptions& opts) {
    const CsvTable table = read_csv_file(path);
    const long label_col = table.column(opts.label_column);
    if (label_col < 0) {
        throw ConfigError("label_column", "label column '" + opts.label_column + "' not found in " + path.string());
    }
    if (table.rows.empty()) throw CsvError(0, path.string() + ": no data rows");

    const bool all_one_hot = opts.one_hot_columns.size() == 1 && opts.one_hot_columns[0] == "*";
    for (const auto& name : opts.one_hot_columns) {
        if (name != "*" && table.column(name) < 0) {
            throw ConfigError("one_hot_columns", "one-hot column '" + name + "' not found in " + path.string());
        }
    }

    struct Column {
        std::size_t index;
        bool one_hot;
        std::vector<std::string> levels; // sorted
    };
    std::vector<Column> columns;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (static_cast<long>(j) == label_col) continue;
        const bool oh = all_one_hot || std::find(opts.one_hot_columns.begin(), opts.one_hot_columns.end(),
                                                 table.header[j]) != opts.one_hot_columns.end();
        Column c{j, oh, {}};
        if (oh) {
            std::set<std::string> levels;
            for (const auto& row : table.rows) levels.insert(row[j]);
            c.levels.assign(levels.begin(), levels.end());
        }
        columns.push_back(std::move(c));
    }

    LabeledData out;
    for (const auto& c : columns) {
        if (!c.one_hot) {
            out.feature_names.push_back(table.header[c.index]);
            continue;
        }
        for (const auto& level : c.levels) out.feature_names.push_back(table.header[c.index] + "=" + level);
    }
    if (out.feature_names.empty()) throw ConfigError("label_column", path.string() + ": no feature columns");

    const auto n = static_cast<Eigen::Index>(table.rows.size());
    out.features = Matrix::Zero(n, static_cast<Eigen::Index>(out.feature_names.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        const std::size_t line = table.line_numbers[static_cast<std::size_t>(i)];
        Eigen::Index k = 0;
        for (const auto& c : columns) {
            if (c.one_hot) {
                const auto pos = std::lower_bound(c.levels.begin(), c.levels.end(), row[c.index]) - c.levels.begin();
                out.features(i, k + pos) = 1.0;
                k += static_cast<Eigen::Index>(c.levels.size());
            } else {
                out.features(i, k++) = parse_cell(row[c.index], line, table.header[c.index]);
            }
        }
    }

    std::set<std::string> label_set;
    for (const auto& row : table.rows) label_set.insert(row[static_cast<std::size_t>(label_col)]);
    const std::vector<std::string> label_levels(label_set.begin(), label_set.end());
    for (const auto& row : table.rows) {
        const auto pos = std::lower_bound(label_levels.begin(), label_levels.end(), row[static_cast<std::size_t>(label_col)]);
        out.labels.push_back(static_cast<int>(pos - label_levels.begin()) + 1);
    }
    out.classes = static_cast<int>(label_levels.size());
    if (opts.standardize) out.features = standardize_columns(out.features);
    return out;
}

LabeledData cap_per_class(const LabeledData& data, int cap, std::uint64_t seed) {
    if (cap <= 0) return data;
    Rng rng(seed);
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.labels.size(); ++i) by_class[data.labels[i]].push_back(i);
    std::vector<std::size_t> keep;
    for (auto& [label, idx] : by_class) {
        if (static_cast<int>(idx.size()) > cap) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(static_cast<std::size_t>(cap));
        }
        keep.insert(keep.end(), idx.begin(), idx.end());
    }
    std::sort(keep.begin(), keep.end());

    LabeledData out;
    out.feature_names = data.feature_names;
    out.classes = data.classes;
    out.features.resize(static_cast<Eigen::Index>(keep.size()), data.features.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(keep[i]));
        out.labels.push_back(data.labels[keep[i]]);
    }
    return out;
}

std::string blob_csv(const BlobOptions& opts) {
    if (opts.clusters < 1 || opts.dim < 1 || opts.per_cluster < 1) {
        throw std::invalid_argument("blob_csv: clusters, dim and per_cluster must be >= 1");
    }
    Rng rng(opts.seed);
    const Matrix centers = opts.separation * gaussian_matrix(opts.clusters, opts.dim, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::ostringstream out;
    for (int j = 0; j < opts.dim; ++j) out << 'f' << j << ',';
    out << "label\n";
    for (int c = 0; c < opts.clusters; ++c) {
        for (int i = 0; i < opts.per_cluster; ++i) {
            for (int j = 0; j < opts.dim; ++j) out << format_double(centers(c, j) + normal(rng)) << ',';
            out << "c" << c + 1 << '\n';
        }
    }
    return out.str();
}

} // namespace nsmc
