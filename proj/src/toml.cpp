#include "inoc/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "inoc/errors.hpp"

namespace inoc {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw ParseError("config line " + std::to_string(line_no) + ": " + msg);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string trim_ws(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string interpolate_env(const std::string& s, std::size_t line_no) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
      std::size_t end = s.find('}', i + 2);
      if (end == std::string::npos) fail(line_no, "unterminated ${...}");
      std::string name = s.substr(i + 2, end - i - 2);
      const char* v = std::getenv(name.c_str());
      if (v) out += v;
      i = end + 1;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

std::string parse_basic_string(const std::string& raw, std::size_t line_no) {
  if (raw.size() < 2 || raw.back() != '"') fail(line_no, "unterminated string");
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\' && i + 2 < raw.size() + 1) {
      char n = raw[++i];
      switch (n) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: fail(line_no, std::string("unsupported escape \\") + n);
      }
    } else {
      out.push_back(c);
    }
  }
  return interpolate_env(out, line_no);
}

ordered_json parse_scalar(const std::string& raw, std::size_t line_no) {
  std::string v = trim_ws(raw);
  if (v.empty()) fail(line_no, "empty value");
  if (v.front() == '"') return parse_basic_string(v, line_no);
  if (v == "true") return true;
  if (v == "false") return false;
  // Number: integer if it parses entirely as one, float otherwise.
  try {
    std::size_t pos = 0;
    long long iv = std::stoll(v, &pos);
    if (pos == v.size()) return iv;
    double dv = std::stod(v, &pos);
    if (pos == v.size()) return dv;
  } catch (const std::exception&) {
  }
  fail(line_no, "cannot parse value '" + v + "'");
}

std::vector<std::string> split_dotted(const std::string& s, std::size_t line_no) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '.') {
      if (cur.empty()) fail(line_no, "empty key segment");
      parts.push_back(trim_ws(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cur = trim_ws(cur);
  if (cur.empty()) fail(line_no, "empty key segment");
  parts.push_back(cur);
  return parts;
}

ordered_json* descend(ordered_json& root, const std::vector<std::string>& path) {
  ordered_json* node = &root;
  for (const auto& key : path) {
    if (!node->contains(key)) (*node)[key] = ordered_json::object();
    node = &(*node)[key];
  }
  return node;
}

}  // namespace

ordered_json parse_toml(const std::string& text) {
  ordered_json root = ordered_json::object();
  ordered_json* table = &root;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim_ws(strip_comment(line));
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') fail(line_no, "unterminated table header");
      std::string name = trim_ws(s.substr(1, s.size() - 2));
      if (name.empty()) fail(line_no, "empty table name");
      table = descend(root, split_dotted(name, line_no));
      continue;
    }

    std::size_t eq = std::string::npos;
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') in_string = !in_string;
      if (s[i] == '=' && !in_string) {
        eq = i;
        break;
      }
    }
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = trim_ws(s.substr(0, eq));
    std::string value = trim_ws(s.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");

    ordered_json parsed;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') fail(line_no, "unterminated array");
      parsed = ordered_json::array();
      std::string body = value.substr(1, value.size() - 2);
      std::string cur;
      bool str = false;
      for (char c : body) {
        if (c == '"') str = !str;
        if (c == ',' && !str) {
          if (!trim_ws(cur).empty()) parsed.push_back(parse_scalar(cur, line_no));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      if (!trim_ws(cur).empty()) parsed.push_back(parse_scalar(cur, line_no));
    } else {
      parsed = parse_scalar(value, line_no);
    }

    auto path = split_dotted(key, line_no);
    std::string leaf = path.back();
    path.pop_back();
    ordered_json* node = path.empty() ? table : descend(*table, path);
    if (node->contains(leaf)) fail(line_no, "duplicate key '" + key + "'");
    (*node)[leaf] = std::move(parsed);
  }
  return root;
}

ordered_json parse_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

}  // namespace inoc
