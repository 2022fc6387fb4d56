#ifndef QUAKESEG_CONFIG_HPP
#define QUAKESEG_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace quakeseg {

// Line-oriented `key = value` text. '#' starts a comment, blank lines are
// skipped, keys may not repeat. Values keep their raw text; typed access
// parses on demand and reports the key in every error.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<config>");

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    // Comma-separated numeric list.
    std::vector<double> get_list(const std::string& key) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

    // Throws ConfigError when a key outside `allowed` is present; an entry
    // ending in '*' admits every key with that prefix. Catches typos before a
    // long run starts.
    void require_known(const std::vector<std::string>& allowed) const;

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
};

} // namespace quakeseg

#endif
