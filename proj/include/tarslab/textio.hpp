#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

// Flat structured-text records: one record per line, space-separated
// key=value fields. Floats are written as shortest round-trip decimals so
// regenerated files are byte-identical.
namespace tarslab::textio {

std::string fmt_double(double v);
std::string join_ints(const std::vector<int>& v, char sep = ',');
std::string join_doubles(const std::vector<double>& v, char sep = ',');

std::vector<int> parse_ints(std::string_view s, char sep = ',');
std::vector<double> parse_doubles(std::string_view s, char sep = ',');

// Flat config file: `key = value` lines, one dotted nesting level for module
// sections (train.lr, world.rho), '#' comments. Returns dotted-key -> value.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// A parsed key=value line. Keys must be unique within a record.
class Record {
  public:
    Record() = default;
    static Record parse(std::string_view line);

    bool has(const std::string& key) const { return fields_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;

    void set(const std::string& key, std::string value);
    void set_int(const std::string& key, std::int64_t v);
    void set_double(const std::string& key, double v);

    // Fields rendered in insertion order.
    std::string to_line() const;

  private:
    std::map<std::string, std::string> fields_;
    std::vector<std::string> order_;
};

}  // namespace tarslab::textio
