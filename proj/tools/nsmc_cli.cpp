#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsmc/config.hpp"
#include "nsmc/experiments.hpp"
#include "nsmc/io.hpp"
#include "nsmc/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

struct Common {
    std::string config_path;
    std::optional<long long> seed;
    std::string out;
    int threads = 0;
    std::map<std::string, std::string> overrides;
    bool inject_flip = false;
};

void add_common(CLI::App* sub, Common& c, const nsmc::ConfigSchema& schema) {
    sub->add_option("--config", c.config_path, "INI file with a [" + schema.section + "] section");
    sub->add_option("--seed", c.seed, "single root seed (replaces the seeds list)");
    sub->add_option("--out", c.out, "output directory (default results/" + schema.section + ")");
    sub->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
    for (const auto& f : schema.fields) {
        sub->add_option_function<std::string>(
            "--" + f.key, [&c, key = f.key](const std::string& v) { c.overrides[key] = v; },
            f.help + " [" + (f.default_value.empty() ? std::string("required") : f.default_value) + "]");
    }
}

nsmc::Config build_config(const Common& c, const nsmc::ConfigSchema& schema) {
    nsmc::Config cfg = c.config_path.empty() ? nsmc::Config::defaults(schema)
                                             : nsmc::Config::from_file(c.config_path, schema);
    for (const auto& [k, v] : c.overrides) cfg.set(k, v);
    if (c.seed) cfg.set("seeds", std::to_string(*c.seed));
    if (c.inject_flip) cfg.set("inject_b_sign_flip", "true");
    cfg.validate();
    return cfg;
}

nsmc::ExperimentReport dispatch(const std::string& sub, const nsmc::Config& cfg, const std::filesystem::path& out) {
    if (sub == "converge") return nsmc::run_convergence(cfg, out);
    if (sub == "misspec") return nsmc::run_misspec(cfg, out);
    if (sub == "cluster") return nsmc::run_cluster(cfg, out);
    if (sub == "semisup") return nsmc::run_semisup(cfg, out);
    return nsmc::run_verify(cfg, out);
}

void print_summary(const nsmc::ExperimentReport& report) {
    for (const auto& a : report.aggregates) {
        std::cout << a.experiment << "  " << a.method << "  " << a.metric << " = " << nsmc::format_double(a.value)
                  << '\n';
    }
    for (const auto& ch : report.checks) {
        std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << "  " << ch.description << '\n';
    }
}

bool any_failed_cell(const nsmc::ExperimentReport& report) {
    for (const auto& r : report.rows) {
        if (r.metric == "failed") return true;
    }
    return false;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear semiparametric matrix completion experiments"};
    app.require_subcommand(1);

    std::map<std::string, Common> common;
    for (const auto& name : nsmc::config_subcommands()) {
        const auto& schema = nsmc::config_schema(name);
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        add_common(sub, common[name], schema);
        if (name == "verify") {
            sub->add_flag("--inject-b-sign-flip", common[name].inject_flip, "debug mutation: negate B in the loss");
        }
    }

    nsmc::BlobOptions blobs;
    std::string blob_out;
    CLI::App* blob_cmd = app.add_subcommand("blobs", "write a labeled Gaussian-blob CSV for semisup");
    blob_cmd->add_option("--clusters", blobs.clusters, "number of blobs")->check(CLI::PositiveNumber);
    blob_cmd->add_option("--dim", blobs.dim, "feature dimension")->check(CLI::PositiveNumber);
    blob_cmd->add_option("--per-cluster", blobs.per_cluster, "points per blob")->check(CLI::PositiveNumber);
    blob_cmd->add_option("--separation", blobs.separation, "standard deviation of the blob centers");
    blob_cmd->add_option("--seed", blobs.seed, "random seed");
    blob_cmd->add_option("--out", blob_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "blobs") {
            nsmc::write_text_file(blob_out, nsmc::blob_csv(blobs));
            return kExitOk;
        }
        const Common& c = common.at(sub);
        const nsmc::Config cfg = build_config(c, nsmc::config_schema(sub));
        nsmc::set_thread_count(c.threads);
        const std::filesystem::path out = c.out.empty() ? std::filesystem::path("results") / sub : std::filesystem::path(c.out);
        const nsmc::ExperimentReport report = dispatch(sub, cfg, out);
        nsmc::write_report(report, cfg, out);
        for (const auto& n : report.notes) std::cerr << "note: " << n << '\n';
        print_summary(report);
        return report.all_passed() && !any_failed_cell(report) ? kExitOk : kExitCheckFailed;
    } catch (const nsmc::ConfigError& e) {
        std::cerr << "config error";
        if (!e.field.empty()) std::cerr << " [" << e.field << "]";
        std::cerr << ": " << e.what() << '\n';
        return kExitConfigError;
    } catch (const nsmc::CsvError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
}
