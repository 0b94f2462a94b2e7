#include "treegen/io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace treegen::io {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

Config Config::from_text(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    std::string v = (it != values_.end()) ? it->second : fallback;
    effective_[key] = v;
    return v;
}

double Config::get_double(const std::string& key, double fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    double v = (it != values_.end()) ? std::stod(it->second) : fallback;
    effective_[key] = format_double(v);
    return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    std::int64_t v = (it != values_.end()) ? std::stoll(it->second) : fallback;
    effective_[key] = std::to_string(v);
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    bool v = fallback;
    if (it != values_.end()) {
        if (it->second == "true" || it->second == "1") v = true;
        else if (it->second == "false" || it->second == "0") v = false;
        else throw std::runtime_error("config key " + key + ": expected true/false");
    }
    effective_[key] = v ? "true" : "false";
    return v;
}

void Config::reject_unknown() const {
    for (const auto& [key, value] : values_)
        if (!consumed_.count(key)) throw std::runtime_error("unknown config key: " + key);
}

std::string Config::echo() const {
    std::ostringstream os;
    for (const auto& [key, value] : effective_) os << key << " = " << value << "\n";
    return os.str();
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += header[i];
    }
    buffer_ += '\n';
}

CsvWriter::~CsvWriter() { close(); }

void CsvWriter::close() {
    if (closed_) return;
    closed_ = true;
    std::ofstream out(path_, std::ios::binary);
    out << buffer_;
}

void CsvWriter::cell(const std::string& value) {
    if (row_open_) buffer_ += ',';
    buffer_ += value;
    row_open_ = true;
}

void CsvWriter::cell(double value) { cell(format_double(value)); }

void CsvWriter::cell(std::int64_t value) { cell(std::to_string(value)); }

void CsvWriter::end_row() {
    buffer_ += '\n';
    row_open_ = false;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest) {
    nlohmann::json j;
    j["tool"] = manifest.tool;
    j["command"] = manifest.command;
    j["config_hash"] = manifest.config_hash;
    j["seed"] = manifest.seed;
    j["started"] = manifest.started;
    j["finished"] = manifest.finished;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& p : manifest.outputs) {
        nlohmann::json f;
        f["file"] = p.filename().string();
        f["bytes"] = std::filesystem::file_size(p);
        f["fnv1a64"] = fnv1a64_file(p);
        files.push_back(f);
    }
    j["outputs"] = files;
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace treegen::io
