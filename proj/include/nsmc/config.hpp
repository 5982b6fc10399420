#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nsmc {

/// Invalid or missing configuration; `field` names the offending key (may be empty).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field_, const std::string& what) : std::runtime_error(what), field(std::move(field_)) {}
    std::string field;
};

struct ConfigField {
    std::string key;
    std::string default_value; ///< used when no config file is given
    std::string help;
    bool required = true;      ///< must appear, non-empty, in a config file
};

struct ConfigSchema {
    std::string section; ///< also the subcommand name
    std::vector<ConfigField> fields;

    [[nodiscard]] const ConfigField* find(std::string_view key) const;
};

/// Schemas for converge, misspec, cluster, semisup and verify.
const ConfigSchema& config_schema(std::string_view subcommand);
std::vector<std::string> config_subcommands();

/// Flat key/value settings of one subcommand, validated against its schema.
class Config {
public:
    /// Every field at its default. Required fields without a default stay
    /// unset and are reported by validate().
    static Config defaults(const ConfigSchema& schema);

    /// INI file with a [section] named after the subcommand. Unknown keys are
    /// rejected; required keys must be present with a non-empty value.
    static Config from_file(const std::filesystem::path& path, const ConfigSchema& schema);

    /// Command-line override. Unknown keys throw ConfigError.
    void set(const std::string& key, const std::string& value);

    /// Throws ConfigError naming the first required field that is missing or empty.
    void validate() const;

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& key) const;
    [[nodiscard]] long long get_int(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key) const;
    [[nodiscard]] bool get_bool(const std::string& key) const;
    /// Comma-separated items, blanks trimmed; empty value gives an empty list.
    [[nodiscard]] std::vector<std::string> get_list(const std::string& key) const;
    [[nodiscard]] std::vector<double> get_double_list(const std::string& key) const;
    /// Comma-separated integers and inclusive ranges "a..b".
    [[nodiscard]] std::vector<long long> get_int_list(const std::string& key) const;

    /// "[section]" followed by "key = value" lines in schema order.
    [[nodiscard]] std::string resolved_text() const;
    /// 64-bit FNV-1a of resolved_text().
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] const ConfigSchema& schema() const { return *schema_; }

private:
    explicit Config(const ConfigSchema& schema) : schema_(&schema) {}
    [[nodiscard]] const std::string& raw(const std::string& key) const;

    const ConfigSchema* schema_;
    std::map<std::string, std::string> values_;
};

std::string hex64(std::uint64_t v);

} // namespace nsmc
