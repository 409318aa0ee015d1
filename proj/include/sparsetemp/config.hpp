#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "sparsetemp/bilevel.hpp"

namespace sparsetemp {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Flat key-value config with optional [section] headers; keys are reported as
// "section.key". Values: numbers, booleans, quoted or bare strings. '#'
// starts a comment.
class KeyValueConfig {
  public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
};

struct DataConfig {
    std::string kind = "planted";  // planted | blobs | csv
    int n_samples = 2000;
    double noise_sigma = 1.0;
    std::string csv_path;
};

struct RunConfig {
    TrainerConfig trainer;
    DataConfig data;
};

// Every key has a default; an empty file yields a runnable configuration.
// Throws ConfigError on malformed values or violated constraints.
RunConfig load_run_config(const KeyValueConfig& kv);

Dataset build_dataset(const RunConfig& config);

std::string run_config_to_json(const RunConfig& config);

}  // namespace sparsetemp
