#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "nsmc/config.hpp"
#include "nsmc/experiments.hpp"
#include "nsmc/io.hpp"
#include "oracles.hpp"

using namespace nsmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nsmc_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::size_t csv_error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        read_csv(in);
    } catch (const CsvError& e) {
        return e.line;
    }
    return 0;
}

std::string config_error_field(const fs::path& path, const std::string& sub) {
    try {
        Config::from_file(path, config_schema(sub)).validate();
    } catch (const ConfigError& e) {
        return e.field.empty() ? "<empty>" : e.field;
    }
    return "";
}

} // namespace

TEST(Csv, ParsesQuotesCommentsAndBlankLines) {
    std::istringstream in("a,b,c\n# comment\n\n1,\"x,y\",\"say \"\"hi\"\"\"\n2,3,4\n");
    const CsvTable t = read_csv(in);
    ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][1], "x,y");
    EXPECT_EQ(t.rows[0][2], "say \"hi\"");
    EXPECT_EQ(t.line_numbers, (std::vector<std::size_t>{4, 5}));
    EXPECT_EQ(t.column("c"), 2);
    EXPECT_EQ(t.column("nope"), -1);
}

TEST(Csv, ErrorsCarryLineNumbers) {
    EXPECT_EQ(csv_error_line("a,b\n1,2\n3\n"), 3u);
    EXPECT_EQ(csv_error_line("a,b\n1,2\n\n4,5,6\n"), 4u);
    EXPECT_EQ(csv_error_line("a,b\n\"1,2\n"), 2u);
    try {
        parse_cell("abc", 7, "f2");
        FAIL();
    } catch (const CsvError& e) {
        EXPECT_EQ(e.line, 7u);
        EXPECT_NE(std::string(e.what()).find("f2"), std::string::npos);
    }
    EXPECT_EQ(parse_cell(" 2.5 ", 1, "x"), 2.5);
    EXPECT_THROW(parse_cell("2.5x", 1, "x"), CsvError);
    EXPECT_THROW(parse_cell("", 1, "x"), CsvError);
}

TEST(Csv, FormatDoubleRoundTrips) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
}

TEST(Csv, WeightMatrixRoundTrip) {
    std::mt19937_64 rng(32);
    const Matrix w = oracle::gaussian(7, 3, rng);
    std::stringstream s;
    write_weight_matrix_csv(s, w);
    EXPECT_EQ(s.str().rfind("# 7,3\n", 0), 0u);
    const Matrix back = read_weight_matrix_csv(s);
    EXPECT_EQ(back, w);

    std::istringstream bad("# 2,2\n1,2\n3\n");
    try {
        read_weight_matrix_csv(bad);
        FAIL();
    } catch (const CsvError& e) {
        EXPECT_EQ(e.line, 3u);
    }
    std::istringstream short_rows("# 3,1\n1\n2\n");
    EXPECT_THROW(read_weight_matrix_csv(short_rows), CsvError);
}

TEST(Csv, TraceAndEdgeWriters) {
    GdTrace t;
    t.records.push_back({0, 1.5, 0.25, 0.5});
    t.records.push_back({1, 1.25, 0.125, 0.375});
    std::ostringstream out;
    write_trace_csv(out, t);
    EXPECT_EQ(out.str(), "iter,loss,grad_norm,dist_sq\n0,1.5,0.25,0.5\n1,1.25,0.125,0.375\n");

    EdgeSampleSet e;
    e.entries.push_back({0, 4, 2.0});
    std::ostringstream eo;
    write_edges_csv(eo, e);
    EXPECT_EQ(eo.str(), "row_index,col_index,y\n1,5,2\n");
}

TEST(Config, DefaultsValidateAndResolve) {
    for (const std::string& sub : config_subcommands()) {
        const Config c = Config::defaults(config_schema(sub));
        if (sub == "semisup") {
            EXPECT_THROW(c.validate(), ConfigError);
        } else {
            EXPECT_NO_THROW(c.validate()) << sub;
        }
        EXPECT_EQ(c.resolved_text().rfind("[" + sub + "]\n", 0), 0u);
    }
    EXPECT_THROW(config_schema("train"), ConfigError);
}

TEST(Config, FileErrorsNameTheField) {
    const fs::path dir = scratch_dir("config");
    const Config defaults = Config::defaults(config_schema("cluster"));
    std::string full = defaults.resolved_text();
    EXPECT_EQ(config_error_field(write_file(dir / "ok.ini", full), "cluster"), "");

    std::string missing = full;
    missing.erase(missing.find("spread ="), missing.find('\n', missing.find("spread =")) - missing.find("spread =") + 1);
    EXPECT_EQ(config_error_field(write_file(dir / "missing.ini", missing), "cluster"), "spread");

    std::string empty = full;
    empty.replace(empty.find("trials = 20"), 11, "trials =");
    EXPECT_EQ(config_error_field(write_file(dir / "empty.ini", empty), "cluster"), "trials");

    EXPECT_EQ(config_error_field(write_file(dir / "unknown.ini", full + "bogus = 1\n"), "cluster"), "bogus");
    EXPECT_EQ(config_error_field(write_file(dir / "section.ini", "[verify]\nseeds = 1\n"), "cluster"), "cluster");
    fs::remove_all(dir);
}

TEST(Config, TypedGettersAndLists) {
    Config c = Config::defaults(config_schema("converge"));
    EXPECT_EQ(c.get_int("d1"), 10);
    EXPECT_EQ(c.get_list("a2"), (std::vector<std::string>{"relu", "sigmoid", "tanh"}));
    c.set("seeds", "1..3, 7");
    EXPECT_EQ(c.get_int_list("seeds"), (std::vector<long long>{1, 2, 3, 7}));
    c.set("seeds", "5..2");
    EXPECT_THROW(c.get_int_list("seeds"), ConfigError);
    c.set("d1", "ten");
    try {
        (void)c.get_int("d1");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field, "d1");
    }
    c.set("sigma", "0.5");
    EXPECT_EQ(c.get_double("sigma"), 0.5);
    EXPECT_THROW(c.set("nonsense", "1"), ConfigError);
    c.set("a2", "relu,,tanh");
    EXPECT_THROW(c.get_list("a2"), ConfigError);
}

TEST(Config, HashTracksResolvedText) {
    Config a = Config::defaults(config_schema("misspec"));
    Config b = Config::defaults(config_schema("misspec"));
    EXPECT_EQ(a.hash(), b.hash());
    b.set("m", "999");
    EXPECT_NE(a.hash(), b.hash());
    b.set("m", "1000");
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");

    // a file with the same values in another order resolves identically
    const fs::path dir = scratch_dir("hash");
    std::string text = a.resolved_text();
    const auto first = text.find('\n') + 1;
    const auto second = text.find('\n', first) + 1;
    std::string reordered = text.substr(0, first) + text.substr(second) + text.substr(first, second - first);
    const Config c = Config::from_file(write_file(dir / "r.ini", reordered), config_schema("misspec"));
    EXPECT_EQ(c.hash(), a.hash());
    fs::remove_all(dir);
}

TEST(Report, AggregatesAreMeansOverSeeds) {
    ExperimentReport r;
    r.rows = {{"e", "NSMC", "1", "E_U", 0.25}, {"e", "NSMC", "2", "E_U", 0.75}, {"e", "NIMC", "1", "E_U", 1.0},
              {"e", "NSMC", "1", "E_V", 2.0}};
    add_aggregates(r);
    ASSERT_EQ(r.aggregates.size(), 3u);
    EXPECT_EQ(r.aggregates[0].method, "NSMC");
    EXPECT_EQ(r.aggregates[0].metric, "E_U");
    EXPECT_EQ(r.aggregates[0].seed, "mean");
    EXPECT_EQ(r.aggregates[0].value, 0.5);
    EXPECT_EQ(r.aggregates[1].method, "NIMC");
    EXPECT_EQ(r.aggregates[2].metric, "E_V");

    const Config c = Config::defaults(config_schema("verify"));
    const std::string csv = results_csv(r, c);
    EXPECT_EQ(csv.rfind("# config_hash=" + hex64(c.hash()) + "\nexperiment,method,seed,metric,value\n", 0), 0u);
    EXPECT_NE(csv.find("e,NSMC,mean,E_U,0.5\n"), std::string::npos);

    McCheckResult bad;
    bad.pass = false;
    EXPECT_TRUE(r.all_passed());
    r.checks.push_back(bad);
    EXPECT_FALSE(r.all_passed());
}

TEST(Dataset, LoadsOneHotsAndStandardizes) {
    const fs::path dir = scratch_dir("dataset");
    const fs::path p = write_file(dir / "d.csv", "color,size,kind\nred,1,b\nblue,3,a\nred,5,b\n");
    LoadOptions o;
    o.label_column = "kind";
    o.one_hot_columns = {"color"};
    o.standardize = false;
    const LabeledData d = load_labeled_csv(p, o);
    EXPECT_EQ(d.classes, 2);
    EXPECT_EQ(d.labels, (std::vector<int>{2, 1, 2}));
    EXPECT_EQ(d.feature_names, (std::vector<std::string>{"color=blue", "color=red", "size"}));
    EXPECT_EQ(d.features(1, 0), 1.0);
    EXPECT_EQ(d.features(1, 1), 0.0);
    EXPECT_EQ(d.features(2, 2), 5.0);

    o.standardize = true;
    const LabeledData s = load_labeled_csv(p, o);
    EXPECT_NEAR(s.features.col(2).mean(), 0.0, 1e-15);
    EXPECT_NEAR(s.features.col(2).squaredNorm() / 3.0, 1.0, 1e-12);

    o.one_hot_columns.clear();
    try {
        load_labeled_csv(p, o);
        FAIL();
    } catch (const CsvError& e) {
        EXPECT_EQ(e.line, 2u);
    }
    o.label_column = "species";
    try {
        load_labeled_csv(p, o);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field, "label_column");
    }
    fs::remove_all(dir);
}

TEST(Dataset, StandardizeAndCap) {
    Matrix x(4, 2);
    x << 1, 5, 2, 5, 3, 5, 4, 5;
    const Matrix s = standardize_columns(x);
    EXPECT_EQ(s.col(1), Vector::Zero(4));
    EXPECT_NEAR(s(0, 0), -1.5 / std::sqrt(1.25), 1e-15);

    LabeledData d;
    d.features = Matrix::Zero(10, 1);
    for (int i = 0; i < 10; ++i) {
        d.features(i, 0) = i;
        d.labels.push_back(i < 7 ? 1 : 2);
    }
    d.classes = 2;
    const LabeledData c = cap_per_class(d, 3, 5);
    EXPECT_EQ(c.labels.size(), 6u);
    for (Eigen::Index i = 1; i < c.features.rows(); ++i) EXPECT_LT(c.features(i - 1, 0), c.features(i, 0));
    EXPECT_EQ(std::count(c.labels.begin(), c.labels.end(), 2), 3);
}

TEST(Dataset, BlobCsvShape) {
    BlobOptions o;
    o.clusters = 3;
    o.dim = 4;
    o.per_cluster = 5;
    const std::string text = blob_csv(o);
    std::istringstream in(text);
    const CsvTable t = read_csv(in);
    EXPECT_EQ(t.header, (std::vector<std::string>{"f0", "f1", "f2", "f3", "label"}));
    EXPECT_EQ(t.rows.size(), 15u);
    EXPECT_EQ(text, blob_csv(o));
}
