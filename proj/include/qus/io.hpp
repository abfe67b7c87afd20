// File formats: the `key = value` config format with [section] headers, and
// the qus-map v1 CSV matrix container. All numeric output is %.17g so files
// round-trip doubles exactly and reruns are byte-identical.

#pragma once

#include "qus/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qus {

// Raised for malformed configs / CLI usage (exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Raised for malformed or inconsistent data files (exit code 2).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Config {
  public:
    Config() = default;
    static Config parse(const std::string& text, const std::string& origin = "<string>");
    static Config load(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    // Throwing typed getters; the *_or forms supply defaults.
    std::string get_str(const std::string& section, const std::string& key) const;
    std::string get_str_or(const std::string& section, const std::string& key, const std::string& dflt) const;
    double get_num(const std::string& section, const std::string& key) const;
    double get_num_or(const std::string& section, const std::string& key, double dflt) const;
    long get_int(const std::string& section, const std::string& key) const;
    long get_int_or(const std::string& section, const std::string& key, long dflt) const;
    bool get_bool_or(const std::string& section, const std::string& key, bool dflt) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_num(const std::string& section, const std::string& key, double value);
    void set_int(const std::string& section, const std::string& key, long value);

    std::vector<std::string> sections() const;
    const std::map<std::string, std::string>& section(const std::string& name) const;

    // Canonical text: sections and keys sorted, one `key = value` per line.
    std::string serialize() const;
    // Optional header comment (without the leading '#') is prepended.
    void save(const std::filesystem::path& path, const std::string& header = "") const;

  private:
    std::map<std::string, std::map<std::string, std::string>> data_;
};

// 64-bit FNV-1a over the canonical serialization, as an 16-hex-digit tag
// for output headers.
std::string config_hash(const Config& cfg);

// Shortest-round-trip decimal for a double (%.17g), locale-independent.
std::string format_double(double v);

// ---- qus-map v1 ----
//
//   # qus-map v1, rows=depth(cm), cols=<label>, cmd=<command>, cfg=<hash>
//   depth\<label>,<col axis values...>
//   <depth>,<row values...>

struct MapFile {
    Eigen::MatrixXd values;           // rows = depth
    std::vector<double> row_axis;     // depth values, cm
    std::vector<double> col_axis;     // frequency values or lateral indices
    std::string col_label;            // "freq(MHz)" or "lateral"
};

void write_map(const std::filesystem::path& path, const Eigen::MatrixXd& values,
               const std::vector<double>& row_axis, const std::vector<double>& col_axis,
               const std::string& col_label, const std::string& command, const std::string& cfg_hash);

MapFile read_map(const std::filesystem::path& path);

}  // namespace qus
