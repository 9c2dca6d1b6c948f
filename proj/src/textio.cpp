#include "tarslab/textio.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace tarslab::textio {

std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string join_ints(const std::vector<int>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += fmt_double(v[i]);
    }
    return out;
}

namespace {

template <typename T, typename Parse>
std::vector<T> split_parse(std::string_view s, char sep, Parse parse) {
    std::vector<T> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        const std::string_view tok = s.substr(start, end == s.npos ? s.npos : end - start);
        out.push_back(parse(tok));
        if (end == s.npos) break;
        start = end + 1;
    }
    return out;
}

int parse_one_int(std::string_view tok) {
    int v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw std::invalid_argument("bad integer field: '" + std::string(tok) + "'");
    }
    return v;
}

double parse_one_double(std::string_view tok) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw std::invalid_argument("bad float field: '" + std::string(tok) + "'");
    }
    return v;
}

}  // namespace

std::vector<int> parse_ints(std::string_view s, char sep) {
    return split_parse<int>(s, sep, parse_one_int);
}

std::vector<double> parse_doubles(std::string_view s, char sep) {
    return split_parse<double>(s, sep, parse_one_double);
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != line.npos) line.resize(hash);
        const auto trim = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t\r");
            if (a == s.npos) return std::string();
            const std::size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == t.npos) {
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " has no '=' in " + path);
        }
        out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
}

Record Record::parse(std::string_view line) {
    Record r;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        if (pos >= line.size()) break;
        const std::size_t end = line.find(' ', pos);
        const std::string_view field =
            line.substr(pos, end == line.npos ? line.npos : end - pos);
        const std::size_t eq = field.find('=');
        if (eq == field.npos) {
            throw std::invalid_argument("record field without '=': '" + std::string(field) + "'");
        }
        r.set(std::string(field.substr(0, eq)), std::string(field.substr(eq + 1)));
        if (end == line.npos) break;
        pos = end + 1;
    }
    return r;
}

const std::string& Record::get(const std::string& key) const {
    const auto it = fields_.find(key);
    if (it == fields_.end()) throw std::invalid_argument("record missing field '" + key + "'");
    return it->second;
}

std::int64_t Record::get_int(const std::string& key) const {
    const std::string& s = get(key);
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw std::invalid_argument("bad int field '" + key + "'");
    return v;
}

double Record::get_double(const std::string& key) const {
    const std::string& s = get(key);
    return parse_one_double(s);
}

void Record::set(const std::string& key, std::string value) {
    if (fields_.emplace(key, value).second) {
        order_.push_back(key);
    } else {
        fields_[key] = std::move(value);
    }
}

void Record::set_int(const std::string& key, std::int64_t v) { set(key, std::to_string(v)); }

void Record::set_double(const std::string& key, double v) { set(key, fmt_double(v)); }

std::string Record::to_line() const {
    std::string out;
    for (const auto& key : order_) {
        if (!out.empty()) out += ' ';
        out += key;
        out += '=';
        out += fields_.at(key);
    }
    return out;
}

}  // namespace tarslab::textio
