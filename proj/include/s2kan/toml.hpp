#pragma once

#include <map>
#include <string>
#include <vector>

namespace s2kan::toml {

// Minimal TOML subset: [section] headers, key = value pairs, strings,
// numbers, booleans, flat arrays, # comments. Keys flatten to
// "section.key". Covers every config surface this project writes.
struct Value {
  enum class Type { String, Number, Bool, NumberArray, StringArray };
  Type type = Type::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<double> nums;
  std::vector<std::string> strs;
};

using Table = std::map<std::string, Value>;

Table parse(const std::string& text);      // throws std::invalid_argument
Table parse_file(const std::string& path); // adds the path to messages

std::string escape(const std::string& s);  // quote + escape for writing

}  // namespace s2kan::toml
