#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace treegen::io {

// key = value configuration with '#' comments. Every key must be consumed by
// the command that runs; leftovers are rejected so typos fail loudly.
class Config {
public:
    Config() = default;
    static Config from_file(const std::filesystem::path& path);
    static Config from_text(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key, double fallback);
    std::int64_t get_int(const std::string& key, std::int64_t fallback);
    bool get_bool(const std::string& key, bool fallback);

    // Throws if any key was never read.
    void reject_unknown() const;

    // Deterministic echo of every consumed key and its effective value.
    std::string echo() const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
    std::map<std::string, std::string> effective_;
};

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    ~CsvWriter();

    void cell(const std::string& value);
    void cell(double value);       // 12 significant digits
    void cell(std::int64_t value);
    void cell(int value) { cell(static_cast<std::int64_t>(value)); }
    void end_row();
    void close();  // writes the file; implied by destruction

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::string buffer_;
    bool row_open_ = false;
    bool closed_ = false;
};

std::string format_double(double value);

std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::uint64_t fnv1a64(const std::string& bytes);

struct Manifest {
    std::string tool;
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::filesystem::path> outputs;
};

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);

std::string iso_timestamp();

}  // namespace treegen::io
