#include "nsmc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace nsmc {

const ConfigField* ConfigSchema::find(std::string_view key) const {
    for (const auto& f : fields) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

namespace {

// Shared GD fields; the defaults differ per experiment.
std::vector<ConfigField> gd_fields(const std::string& max_iters) {
    return {
        {"radius_sq", "1", "squared distance of the initial point from the truth"},
        {"step", "auto", "constant step size, or auto for 1/lambda_max at the start"},
        {"max_iters", max_iters, "iteration cap"},
        {"grad_tol", "1e-8", "stop when the gradient norm falls below this"},
    };
}

ConfigSchema make_converge() {
    ConfigSchema s{"converge", {
        {"d1", "10", "row feature dimension"},
        {"d2", "10", "column feature dimension"},
        {"r", "3", "embedding rank"},
        {"n1", "400", "row pool size"},
        {"n2", "400", "column pool size"},
        {"m", "2000", "observations per sample set"},
        {"a1", "relu", "row activation"},
        {"a2", "relu,sigmoid,tanh", "column activations, one cell each"},
        {"laws", "gaussian,binomial,poisson", "response laws, one cell each"},
        {"sigma", "1", "Gaussian law scale"},
        {"trials", "20", "Binomial trials N_B"},
        {"fix_first_row", "auto", "auto pins the first row of U when an activation is relu"},
        {"plateau_factor", "2", "fit window keeps records with dist_sq >= factor * min dist_sq"},
        {"min_r_squared", "0.9", "pass threshold on the log-distance fit"},
        {"step_scale", "0.1", "fraction of 1/lambda_max used when step = auto"},
        {"seeds", "1", "root seeds (list or a..b range)"},
    }};
    for (auto& f : gd_fields("400")) s.fields.push_back(f);
    return s;
}

ConfigSchema make_misspec() {
    ConfigSchema s{"misspec", {
        {"law", "gaussian", "gaussian (grid = tau), binomial (grid = N_B) or poisson (grid = a2)"},
        {"grid", "0,0.2,0.4", "values of the varied parameter"},
        {"d1", "50", "row feature dimension"},
        {"d2", "50", "column feature dimension"},
        {"r", "3", "embedding rank"},
        {"n1", "400", "row pool size"},
        {"n2", "400", "column pool size"},
        {"m", "1000", "observations per sample set"},
        {"a1", "relu", "row activation"},
        {"a2", "relu", "column activation (ignored when law = poisson)"},
        {"methods", "NSMC,SMC,NIMC,IMC", "estimators to fit"},
        {"test_size", "2000", "fresh (x, z) pairs for the Theta error"},
        {"nimc_transform", "auto", "auto, none, arcsin or sqrt response transform for NIMC/IMC"},
        {"fix_first_row", "auto", "auto pins the first row of U when an activation is relu"},
        {"seeds", "1..10", "root seeds (list or a..b range)"},
    }};
    for (auto& f : gd_fields("500")) s.fields.push_back(f);
    return s;
}

ConfigSchema make_cluster() {
    ConfigSchema s{"cluster", {
        {"d1", "30", "row feature dimension"},
        {"d2", "30", "column feature dimension"},
        {"r", "2", "embedding rank"},
        {"n1", "400", "row pool size"},
        {"n2", "400", "column pool size"},
        {"m", "1000", "observations per sample set"},
        {"activation", "tanh", "activation on both sides"},
        {"trials", "20", "Binomial trials N_B"},
        {"components", "4", "mixture components per side"},
        {"center_scale", "1.5", "pre-activation offset of each mixture center along the truth's columns"},
        {"spread", "0.5", "isotropic standard deviation around each center"},
        {"methods", "NSMC,NIMC", "estimators to fit"},
        {"nimc_transform", "arcsin", "none, arcsin or sqrt response transform for NIMC"},
        {"kmeans_restarts", "20", "k-means++ restarts"},
        {"seeds", "1..5", "root seeds (list or a..b range)"},
    }};
    for (auto& f : gd_fields("500")) s.fields.push_back(f);
    return s;
}

ConfigSchema make_semisup() {
    ConfigSchema s{"semisup", {
        {"dataset", "", "CSV file with feature columns and a label column"},
        {"label_column", "", "name of the label column"},
        {"one_hot_columns", "", "categorical columns to one-hot encode, or * for all", false},
        {"standardize", "true", "z-score every feature column"},
        {"max_per_class", "0", "subsample each class to at most this many items (0 keeps all)"},
        {"n_items", "1000", "items per sampled set (n1 = n2)"},
        {"m", "5000", "similarity pairs per observation set"},
        {"r", "2", "embedding rank (also the number of singular vectors kept)"},
        {"activation", "tanh", "shared activation"},
        {"methods", "NSMC,NIMC", "estimators to fit"},
        {"step", "auto", "constant step size, or auto"},
        {"max_iters", "300", "iteration cap"},
        {"grad_tol", "1e-8", "stop when the gradient norm falls below this"},
        {"kmeans_restarts", "20", "k-means++ restarts"},
        {"seeds", "1", "root seeds (list or a..b range)"},
    }};
    return s;
}

ConfigSchema make_verify() {
    return {"verify", {
        {"lemma_draws", "4000", "response redraws for the conditional-mean check"},
        {"stationarity_draws", "50", "data sets averaged for the zero-gradient check"},
        {"stationarity_m", "500", "sample size of the zero-gradient check"},
        {"stationarity_m_large", "2000", "larger sample size for the shrinkage check"},
        {"curvature_draws", "50", "data sets averaged for the curvature checks"},
        {"curvature_m", "500", "sample size of the curvature checks"},
        {"fd_instances", "20", "random instances per activation pair in the FD suites"},
        {"convergence_iters", "400", "GD iterations of the linear-convergence check"},
        {"convergence_step_scale", "0.1", "fraction of 1/lambda_max used by the linear-convergence check"},
        {"inject_b_sign_flip", "false", "debug mutation: negate B in the loss"},
        {"seeds", "1", "root seed (first entry used)"},
    }};
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_number(const std::string& s, T& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return !s.empty() && ec == std::errc() && ptr == last;
}

} // namespace

const ConfigSchema& config_schema(std::string_view subcommand) {
    static const ConfigSchema converge = make_converge();
    static const ConfigSchema misspec = make_misspec();
    static const ConfigSchema cluster = make_cluster();
    static const ConfigSchema semisup = make_semisup();
    static const ConfigSchema verify = make_verify();
    if (subcommand == "converge") return converge;
    if (subcommand == "misspec") return misspec;
    if (subcommand == "cluster") return cluster;
    if (subcommand == "semisup") return semisup;
    if (subcommand == "verify") return verify;
    throw ConfigError("", "unknown subcommand '" + std::string(subcommand) + "'");
}

std::vector<std::string> config_subcommands() { return {"converge", "misspec", "cluster", "semisup", "verify"}; }

Config Config::defaults(const ConfigSchema& schema) {
    Config c(schema);
    for (const auto& f : schema.fields) {
        if (!f.default_value.empty() || !f.required) c.values_[f.key] = f.default_value;
    }
    return c;
}

Config Config::from_file(const std::filesystem::path& path, const ConfigSchema& schema) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("", "config " + path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    const auto section = tree.get_child_optional(schema.section);
    if (!section) throw ConfigError(schema.section, "config " + path.string() + ": missing section [" + schema.section + "]");

    Config c(schema);
    for (const auto& f : schema.fields) {
        if (!f.required) c.values_[f.key] = f.default_value;
    }
    for (const auto& [key, node] : *section) {
        if (!schema.find(key)) {
            throw ConfigError(key, "config " + path.string() + ": unknown key '" + key + "' in [" + schema.section + "]");
        }
        c.values_[key] = trim(node.data());
    }
    return c;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!schema_->find(key)) throw ConfigError(key, "unknown key '" + key + "' for " + schema_->section);
    values_[key] = trim(value);
}

void Config::validate() const {
    for (const auto& f : schema_->fields) {
        if (!f.required) continue;
        const auto it = values_.find(f.key);
        if (it == values_.end() || it->second.empty()) {
            throw ConfigError(f.key, "missing required field '" + f.key + "' in [" + schema_->section + "]");
        }
    }
}

bool Config::has(const std::string& key) const {
    const auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
}

const std::string& Config::raw(const std::string& key) const {
    if (!schema_->find(key)) throw ConfigError(key, "unknown key '" + key + "' for " + schema_->section);
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "missing required field '" + key + "' in [" + schema_->section + "]");
    return it->second;
}

std::string Config::get_string(const std::string& key) const { return raw(key); }

long long Config::get_int(const std::string& key) const {
    long long v = 0;
    if (!parse_number(raw(key), v)) throw ConfigError(key, "field '" + key + "': expected an integer, got '" + raw(key) + "'");
    return v;
}

double Config::get_double(const std::string& key) const {
    double v = 0.0;
    if (!parse_number(raw(key), v)) throw ConfigError(key, "field '" + key + "': expected a number, got '" + raw(key) + "'");
    return v;
}

bool Config::get_bool(const std::string& key) const {
    std::string v = raw(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "field '" + key + "': expected true or false, got '" + raw(key) + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    const std::string& v = raw(key);
    if (v.empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key, "field '" + key + "': empty list item in '" + v + "'");
        out.push_back(item);
    }
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        double d = 0.0;
        if (!parse_number(item, d)) throw ConfigError(key, "field '" + key + "': '" + item + "' is not a number");
        out.push_back(d);
    }
    return out;
}

std::vector<long long> Config::get_int_list(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& item : get_list(key)) {
        const auto dots = item.find("..");
        long long a = 0;
        long long b = 0;
        if (dots == std::string::npos) {
            if (!parse_number(item, a)) throw ConfigError(key, "field '" + key + "': '" + item + "' is not an integer");
            out.push_back(a);
            continue;
        }
        if (!parse_number(trim(item.substr(0, dots)), a) || !parse_number(trim(item.substr(dots + 2)), b) || b < a) {
            throw ConfigError(key, "field '" + key + "': bad range '" + item + "'");
        }
        if (b - a > 100000) throw ConfigError(key, "field '" + key + "': range '" + item + "' is too long");
        for (long long i = a; i <= b; ++i) out.push_back(i);
    }
    return out;
}

std::string Config::resolved_text() const {
    std::string out = "[" + schema_->section + "]\n";
    for (const auto& f : schema_->fields) {
        const auto it = values_.find(f.key);
        out += f.key + " = " + (it == values_.end() ? std::string() : it->second) + "\n";
    }
    return out;
}

std::uint64_t Config::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : resolved_text()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace nsmc
