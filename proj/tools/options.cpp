#include "options.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ialf/common.hpp"

namespace ialf::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw InvalidArgument("not an integer: '" + s + "'");
  return v;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    if (key.empty()) throw InvalidArgument(path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::string> inject_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty() || args.size() < 2) return args;

  std::vector<std::string> out{args[0], args[1]};
  for (const auto& [key, value] : read_config_file(path)) {
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(item));
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) out.push_back(to_int(item));
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_doubles(text);
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) throw InvalidArgument("grid must be lo:hi[:step]");
  const double lo = to_double(parts[0]);
  const double hi = to_double(parts[1]);
  const double step = parts.size() == 3 ? to_double(parts[2]) : 1.0;
  if (!(step > 0.0) || hi < lo) throw InvalidArgument("grid needs lo <= hi and step > 0");
  std::vector<double> out;
  for (int j = 0;; ++j) {
    const double v = lo + j * step;
    if (v > hi + 1e-9 * step) break;
    out.push_back(v);
  }
  return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw InvalidArgument("expected n:K, got '" + item + "'");
    out.emplace_back(to_int(parts[0]), to_int(parts[1]));
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

}  // namespace ialf::cli
