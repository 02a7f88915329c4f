#include <segm/cli/config.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace segm::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* first = v.data();
    const char* last = first + v.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (v.empty() || ec != std::errc() || ptr != last || !std::isfinite(out))
        throw UsageError("invalid number for --" + key + ": '" + v + "'");
    return out;
}

long parse_long(const std::string& key, const std::string& v) {
    long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw UsageError("invalid integer for --" + key + ": '" + v + "'");
    return out;
}

using Defaults = std::map<std::string, std::string>;

Defaults fit_defaults() {
    return {{"input", ""},         {"output", ""},       {"lambda", ""},        {"cv-folds", "10"},
            {"cv-grid", "50"},     {"cv-min-ratio", "0.01"}, {"penalty", "capped-l1"}, {"penalty-shape", ""},
            {"seed", "0"},         {"threads", "0"},     {"kkt-tol", "1e-5"},   {"max-stages", "10"}};
}

Defaults sampler_defaults() {
    return {{"model", "gaussian"}, {"n", ""},           {"d", ""},        {"grid", ""},
            {"mu", ""},            {"random-signs", "false"}, {"sign-seed", "0"}, {"burn-in", "1000"},
            {"thin", "10"}};
}

Defaults merge(Defaults a, const Defaults& b) {
    for (const auto& [k, v] : b) a[k] = v;
    return a;
}

}  // namespace

bool RunConfig::has(const std::string& key) const {
    auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
}

std::string RunConfig::str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown setting '" + key + "'");
    return it->second;
}

double RunConfig::num(const std::string& key) const {
    if (!has(key)) throw UsageError("--" + key + " is required for '" + command_ + "'");
    return parse_double(key, str(key));
}

long RunConfig::integer(const std::string& key) const {
    if (!has(key)) throw UsageError("--" + key + " is required for '" + command_ + "'");
    return parse_long(key, str(key));
}

bool RunConfig::flag(const std::string& key) const {
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
    throw UsageError("invalid boolean for --" + key + ": '" + v + "'");
}

std::vector<double> RunConfig::num_list(const std::string& key) const {
    if (!has(key)) throw UsageError("--" + key + " is required for '" + command_ + "'");
    std::vector<double> out;
    for (const auto& part : split(str(key), ',')) out.push_back(parse_double(key, part));
    return out;
}

std::pair<long, long> RunConfig::int_pair(const std::string& key) const {
    if (!has(key)) throw UsageError("--" + key + " is required for '" + command_ + "'");
    std::string v = str(key);
    for (char& c : v)
        if (c == 'x' || c == ' ') c = ',';
    std::vector<std::string> parts;
    for (auto& p : split(v, ','))
        if (!p.empty()) parts.push_back(p);
    if (parts.size() != 2) throw UsageError("--" + key + " expects two integers, got '" + str(key) + "'");
    return {parse_long(key, parts[0]), parse_long(key, parts[1])};
}

const std::map<std::string, std::string>& command_defaults(const std::string& command) {
    static const Defaults estimate = merge(fit_defaults(), {{"lambda-rule", "shared"}, {"symmetrize", "and"}});
    static const Defaults test = merge(fit_defaults(), {{"edge", ""},
                                                        {"alpha", "0.05"},
                                                        {"correction", "none"},
                                                        {"lambda-d", "0.2"},
                                                        {"subsamples", "100"},
                                                        {"keep", "90"}});
    static const Defaults simulate = merge(sampler_defaults(), {{"output", ""}, {"seed", "0"}});
    static const Defaults power = merge(merge(fit_defaults(), sampler_defaults()), {{"edge", "0,1"},
                                                                                    {"alpha", "0.05"},
                                                                                    {"lambda-d", "0.2"},
                                                                                    {"replicates", "100"}});
    if (command == "estimate") return estimate;
    if (command == "test") return test;
    if (command == "simulate") return simulate;
    if (command == "power") return power;
    throw UsageError("unknown command '" + command + "'");
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

RunConfig resolve_config(const std::string& command, const std::map<std::string, std::string>& flags,
                         const std::string& config_path) {
    std::map<std::string, std::string> values = command_defaults(command);
    auto apply = [&](const std::map<std::string, std::string>& src, const std::string& origin) {
        for (const auto& [k, v] : src) {
            if (!values.count(k)) throw UsageError("unknown setting '" + k + "' in " + origin + " for '" + command + "'");
            values[k] = v;
        }
    };
    if (!config_path.empty()) apply(read_config_file(config_path), "config file");
    apply(flags, "flags");
    return RunConfig(command, std::move(values));
}

}  // namespace segm::cli
