#include "qus/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qus {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& s, const std::string& what) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw DataError("cannot parse number '" + t + "' in " + what);
    return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
    Config cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            cfg.data_[section];  // empty sections are legal
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.data_[section][key] = value;
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto sec = data_.find(section);
    return sec != data_.end() && sec->second.count(key) > 0;
}

std::string Config::get_str(const std::string& section, const std::string& key) const {
    const auto sec = data_.find(section);
    if (sec != data_.end()) {
        const auto it = sec->second.find(key);
        if (it != sec->second.end()) return it->second;
    }
    throw ConfigError("missing config key [" + section + "] " + key);
}

std::string Config::get_str_or(const std::string& section, const std::string& key,
                               const std::string& dflt) const {
    return has(section, key) ? get_str(section, key) : dflt;
}

double Config::get_num(const std::string& section, const std::string& key) const {
    const std::string s = get_str(section, key);
    try {
        return parse_double(s, "config key [" + section + "] " + key);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

double Config::get_num_or(const std::string& section, const std::string& key, double dflt) const {
    return has(section, key) ? get_num(section, key) : dflt;
}

long Config::get_int(const std::string& section, const std::string& key) const {
    const double v = get_num(section, key);
    const long n = static_cast<long>(v);
    if (double(n) != v) throw ConfigError("config key [" + section + "] " + key + " must be an integer");
    return n;
}

long Config::get_int_or(const std::string& section, const std::string& key, long dflt) const {
    return has(section, key) ? get_int(section, key) : dflt;
}

bool Config::get_bool_or(const std::string& section, const std::string& key, bool dflt) const {
    if (!has(section, key)) return dflt;
    const std::string v = get_str(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key [" + section + "] " + key + " must be a boolean, got '" + v + "'");
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    data_[section][key] = value;
}

void Config::set_num(const std::string& section, const std::string& key, double value) {
    set(section, key, format_double(value));
}

void Config::set_int(const std::string& section, const std::string& key, long value) {
    set(section, key, std::to_string(value));
}

std::vector<std::string> Config::sections() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : data_) out.push_back(name);
    return out;
}

const std::map<std::string, std::string>& Config::section(const std::string& name) const {
    const auto it = data_.find(name);
    if (it == data_.end()) throw ConfigError("missing config section [" + name + "]");
    return it->second;
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [name, entries] : data_) {
        if (!name.empty()) out += "[" + name + "]\n";
        for (const auto& [key, value] : entries) out += key + " = " + value + "\n";
    }
    return out;
}

void Config::save(const std::filesystem::path& path, const std::string& header) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    if (!header.empty()) out << "# " << header << "\n";
    out << serialize();
}

std::string config_hash(const Config& cfg) {
    const std::string text = cfg.serialize();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_map(const std::filesystem::path& path, const Eigen::MatrixXd& values,
               const std::vector<double>& row_axis, const std::vector<double>& col_axis,
               const std::string& col_label, const std::string& command, const std::string& cfg_hash) {
    if (values.rows() != static_cast<Eigen::Index>(row_axis.size()) ||
        values.cols() != static_cast<Eigen::Index>(col_axis.size()))
        throw DataError("write_map: axis lengths do not match matrix shape for '" + path.string() + "'");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "# qus-map v1, rows=depth(cm), cols=" << col_label << ", cmd=" << command << ", cfg=" << cfg_hash
        << "\n";
    out << "depth\\" << col_label;
    for (double c : col_axis) out << "," << format_double(c);
    out << "\n";
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        out << format_double(row_axis[r]);
        for (Eigen::Index c = 0; c < values.cols(); ++c) out << "," << format_double(values(r, c));
        out << "\n";
    }
}

MapFile read_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open map file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("# qus-map v1", 0) != 0)
        throw DataError("'" + path.string() + "' is not a qus-map v1 file");

    MapFile mf;
    const std::string cols_tag = "cols=";
    const auto cols_pos = line.find(cols_tag);
    if (cols_pos != std::string::npos) {
        auto end = line.find(',', cols_pos);
        mf.col_label = line.substr(cols_pos + cols_tag.size(),
                                   end == std::string::npos ? std::string::npos : end - cols_pos - cols_tag.size());
    }

    if (!std::getline(in, line)) throw DataError("'" + path.string() + "': missing axis row");
    {
        std::istringstream row(line);
        std::string cell;
        bool first = true;
        while (std::getline(row, cell, ',')) {
            if (first) {
                first = false;  // "depth\<label>" corner cell
                continue;
            }
            mf.col_axis.push_back(parse_double(cell, path.string() + " axis row"));
        }
    }
    if (mf.col_axis.empty()) throw DataError("'" + path.string() + "': empty column axis");

    std::vector<std::vector<double>> rows;
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        bool first = true;
        while (std::getline(row, cell, ',')) {
            const double v = parse_double(cell, path.string() + ":" + std::to_string(lineno));
            if (first) {
                mf.row_axis.push_back(v);
                first = false;
            } else {
                vals.push_back(v);
            }
        }
        if (vals.size() != mf.col_axis.size())
            throw DataError("'" + path.string() + "':" + std::to_string(lineno) + ": expected " +
                            std::to_string(mf.col_axis.size()) + " values, got " + std::to_string(vals.size()));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw DataError("'" + path.string() + "': no data rows");

    mf.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(mf.col_axis.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[r].size(); ++c) mf.values(r, c) = rows[r][c];
    return mf;
}

}  // namespace qus
