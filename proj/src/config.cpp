#include "config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <sstream>

#include "errors.hpp"

namespace quakeseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
        throw ConfigError("key '" + key + "': '" + t + "' is not a finite number");
    return v;
}

} // namespace

Config Config::parse_file(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw ConfigError("cannot open config: " + path);
    std::string content;
    char chunk[4096];
    std::size_t got;
    while ((got = std::fread(chunk, 1, sizeof chunk, f.get())) > 0)
        content.append(chunk, got);
    if (std::ferror(f.get()))
        throw ConfigError("read failed: " + path);
    return parse_string(content, path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (!cfg.values_.emplace(key, value).second)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    return parse_double(get_string(key), key);
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("key '" + key + "': expected an integer");
    return i;
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string t = trim(get_string(key));
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t[0] == '-' || end != t.c_str() + t.size())
        throw ConfigError("key '" + key + "': '" + t + "' is not an unsigned integer");
    return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

std::vector<double> Config::get_list(const std::string& key) const {
    const std::string text = get_string(key);
    std::vector<double> out;
    std::istringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ','))
        out.push_back(parse_double(cell, key));
    if (out.empty())
        throw ConfigError("key '" + key + "': empty list");
    return out;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
    return has(key) ? get_list(key) : fallback;
}

void Config::require_known(const std::vector<std::string>& allowed) const {
    for (const auto& [key, value] : values_) {
        bool ok = false;
        for (const auto& a : allowed) {
            if (!a.empty() && a.back() == '*') {
                if (key.compare(0, a.size() - 1, a, 0, a.size() - 1) == 0) {
                    ok = true;
                    break;
                }
            } else if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw ConfigError(origin_ + ": unknown key '" + key + "'");
    }
}

} // namespace quakeseg
