#include "s2kan/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "s2kan/common.hpp"

namespace s2kan::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::invalid_argument(strf("config line %d: %s", line, what.c_str()));
}

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

// Removes a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
      return false;
    }
  }
  return true;
}

std::string parse_string(const std::string& raw, int line) {
  if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
  std::string out;
  for (size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 2 < raw.size()) {
      ++i;
      switch (raw[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, strf("unsupported escape \\%c", raw[i]));
      }
    } else {
      out += raw[i];
    }
  }
  return out;
}

double parse_number(const std::string& raw, int line) {
  try {
    size_t used = 0;
    double v = std::stod(raw, &used);
    if (used != raw.size()) fail(line, "malformed number \"" + raw + "\"");
    return v;
  } catch (const std::invalid_argument&) {
    fail(line, "malformed number \"" + raw + "\"");
  } catch (const std::out_of_range&) {
    fail(line, "number out of range \"" + raw + "\"");
  }
}

Value parse_scalar(const std::string& raw, int line) {
  Value v;
  if (!raw.empty() && raw[0] == '"') {
    v.type = Value::Type::String;
    v.str = parse_string(raw, line);
  } else if (raw == "true" || raw == "false") {
    v.type = Value::Type::Bool;
    v.boolean = raw == "true";
  } else {
    v.type = Value::Type::Number;
    v.num = parse_number(raw, line);
  }
  return v;
}

Value parse_array(const std::string& raw, int line) {
  if (raw.back() != ']') fail(line, "unterminated array");
  std::string body = strip(raw.substr(1, raw.size() - 2));
  Value v;
  v.type = Value::Type::NumberArray;
  if (body.empty()) return v;
  std::vector<std::string> items;
  bool in_str = false;
  std::string cur;
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (c == ',' && !in_str) {
      items.push_back(strip(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  items.push_back(strip(cur));
  const bool strings = !items[0].empty() && items[0][0] == '"';
  v.type = strings ? Value::Type::StringArray : Value::Type::NumberArray;
  for (const auto& item : items) {
    if (item.empty()) fail(line, "empty array element");
    if (strings) {
      if (item[0] != '"') fail(line, "mixed array element types");
      v.strs.push_back(parse_string(item, line));
    } else {
      v.nums.push_back(parse_number(item, line));
    }
  }
  return v;
}

}  // namespace

Table parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = strip(line.substr(1, line.size() - 2));
      if (!valid_key(section)) fail(line_no, "bad section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = strip(line.substr(0, eq));
    std::string raw = strip(line.substr(eq + 1));
    if (!valid_key(key)) fail(line_no, "bad key \"" + key + "\"");
    if (raw.empty()) fail(line_no, "missing value for \"" + key + "\"");
    Value v = raw[0] == '[' ? parse_array(raw, line_no) : parse_scalar(raw, line_no);
    std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full)) fail(line_no, "duplicate key \"" + full + "\"");
    table.emplace(std::move(full), std::move(v));
  }
  return table;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const std::invalid_argument& ex) {
    throw std::invalid_argument(path + ": " + ex.what());
  }
}

std::string escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace s2kan::toml
