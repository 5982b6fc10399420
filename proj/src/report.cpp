#include <filesystem>
#include <map>
#include <sstream>

#include "nsmc/experiments.hpp"
#include "nsmc/io.hpp"

namespace nsmc {

bool ExperimentReport::all_passed() const {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

void add_aggregates(ExperimentReport& report) {
    struct Group {
        std::size_t first = 0;
        double sum = 0.0;
        int count = 0;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Group> groups;
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        const auto key = std::make_tuple(r.experiment, r.method, r.metric);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) {
            it->second.first = i;
            order.push_back(key);
        }
        it->second.sum += r.value;
        ++it->second.count;
    }
    for (const auto& key : order) {
        const Group& g = groups.at(key);
        report.aggregates.push_back(
            {std::get<0>(key), std::get<1>(key), "mean", std::get<2>(key), g.sum / g.count});
    }
}

std::string results_csv(const ExperimentReport& report, const Config& config) {
    std::ostringstream out;
    out << "# config_hash=" << hex64(config.hash()) << '\n';
    out << "experiment,method,seed,metric,value\n";
    auto emit = [&](const ResultRow& r) {
        out << r.experiment << ',' << r.method << ',' << r.seed << ',' << r.metric << ',' << format_double(r.value)
            << '\n';
    };
    for (const auto& r : report.rows) emit(r);
    for (const auto& r : report.aggregates) emit(r);
    return out.str();
}

void write_report(const ExperimentReport& report, const Config& config, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "results.csv", results_csv(report, config));
    write_text_file(out_dir / "resolved_config.txt",
                    config.resolved_text() + "# config_hash=" + hex64(config.hash()) + "\n");
}

} // namespace nsmc
