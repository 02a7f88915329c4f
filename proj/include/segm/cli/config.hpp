#pragma once

#include <segm/types.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace segm::cli {

inline constexpr int kSchemaVersion = 1;

/**
 * Effective settings of one run: command defaults, then the key = value
 * config file, then command-line flags. Keys are the long flag names
 * without dashes. An empty value means "not set".
 */
class RunConfig {
public:
    RunConfig(std::string command, std::map<std::string, std::string> values)
        : command_(std::move(command)), values_(std::move(values)) {}

    const std::string& command() const { return command_; }
    const std::map<std::string, std::string>& values() const { return values_; }

    bool has(const std::string& key) const;
    std::string str(const std::string& key) const;
    double num(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> num_list(const std::string& key) const;
    std::pair<long, long> int_pair(const std::string& key) const;

private:
    std::string command_;
    std::map<std::string, std::string> values_;
};

// Keys accepted by a command with their defaults.
const std::map<std::string, std::string>& command_defaults(const std::string& command);

// Parses "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);

RunConfig resolve_config(const std::string& command, const std::map<std::string, std::string>& flags,
                         const std::string& config_path = "");

}  // namespace segm::cli
