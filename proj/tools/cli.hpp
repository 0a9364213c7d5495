#pragma once

// Run configuration, argument parsing helpers and CSV output for the CLI.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "twaves/model.hpp"
#include "twaves/nlstw.hpp"

namespace twaves::cli {

struct RunConfig {
  std::string model = "gp";
  std::map<std::string, double> params;
  int dim = 1;
  std::string mode;  // newton1d | fixed-k | pohozaev; empty picks the default for dim
  std::optional<double> c;
  std::optional<double> k;
  std::vector<std::size_t> grid;
  std::vector<double> box;
  bool box_auto = false;
  std::string sweep;
  double tol_residual = 1e-8;
  double tol_pohozaev = 1e-6;
  double tol_update = 1e-10;
  std::string out;
  unsigned seed = 0;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, what + ": cannot read '" + s + "' as a number");
  }
}

/// "128x64x64" -> {128, 64, 64}
inline std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& t : split(s, 'x')) {
    const double v = parse_double(t, "--grid");
    if (v < 1 || v != std::floor(v)) fail(ErrorCode::ParseError, "--grid: '" + t + "' is not a positive integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty() || out.size() > 3) fail(ErrorCode::ParseError, "--grid needs one to three sizes, got '" + s + "'");
  return out;
}

/// "60x120" -> {60, 120}
inline std::vector<double> parse_lengths(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : split(s, 'x')) out.push_back(parse_double(t, "--box"));
  if (out.empty() || out.size() > 3) fail(ErrorCode::ParseError, "--box needs one to three lengths, got '" + s + "'");
  return out;
}

/// "a=1,b=2" -> map
inline std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items)
    for (const auto& kv : split(item, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) fail(ErrorCode::ParseError, "--param: expected key=value, got '" + kv + "'");
      out[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1), "--param " + kv.substr(0, eq));
    }
  return out;
}

/// Sweep values: "0.02,0.04,0.06" or "start:stop:count" (inclusive, evenly spaced).
inline std::vector<double> parse_sweep(const std::string& s) {
  std::vector<double> out;
  const auto colon = split(s, ':');
  if (colon.size() == 3) {
    const double a = parse_double(colon[0], "--sweep"), b = parse_double(colon[1], "--sweep");
    const double n = parse_double(colon[2], "--sweep");
    if (n < 2 || n != std::floor(n)) fail(ErrorCode::ParseError, "--sweep: count must be an integer >= 2");
    for (int i = 0; i < static_cast<int>(n); ++i) out.push_back(a + (b - a) * i / (n - 1.0));
    return out;
  }
  if (colon.size() != 1) fail(ErrorCode::ParseError, "--sweep: expected a list or start:stop:count, got '" + s + "'");
  for (const auto& t : split(s, ',')) out.push_back(parse_double(t, "--sweep"));
  if (out.empty()) fail(ErrorCode::ParseError, "--sweep is empty");
  return out;
}

inline bool power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

inline std::string default_mode(int dim) { return dim == 1 ? "newton1d" : dim == 2 ? "fixed-k" : "pohozaev"; }

/// Fills defaults and checks the whole configuration; every violation is listed.
inline RunConfig resolve(RunConfig cfg) {
  std::vector<std::string> bad;
  if (cfg.dim < 1 || cfg.dim > 3) bad.push_back("dimension must be 1, 2 or 3 (got " + std::to_string(cfg.dim) + ")");
  if (cfg.mode.empty()) cfg.mode = default_mode(cfg.dim);
  if (cfg.mode != "newton1d" && cfg.mode != "fixed-k" && cfg.mode != "pohozaev") bad.push_back("unknown mode '" + cfg.mode + "' (newton1d, fixed-k, pohozaev)");
  else if (cfg.mode != default_mode(cfg.dim)) bad.push_back("mode " + cfg.mode + " does not run in " + std::to_string(cfg.dim) + "D");
  if (cfg.grid.empty()) {
    if (cfg.dim == 1) cfg.grid = {4096};
    if (cfg.dim == 2) cfg.grid = {256, 256};
    if (cfg.dim == 3) cfg.grid = {128, 64, 64};
  }
  if (static_cast<int>(cfg.grid.size()) != cfg.dim) bad.push_back("grid has " + std::to_string(cfg.grid.size()) + " sizes for dimension " + std::to_string(cfg.dim));
  for (auto n : cfg.grid)
    if (!power_of_two(n)) bad.push_back("grid size " + std::to_string(n) + " is not a power of two");
  if (!cfg.box.empty() && cfg.box_auto) bad.push_back("--box and --box-auto are exclusive");
  if (cfg.box.empty() && !cfg.box_auto) cfg.box_auto = true;
  if (!cfg.box.empty() && static_cast<int>(cfg.box.size()) != cfg.dim) bad.push_back("box has " + std::to_string(cfg.box.size()) + " lengths for dimension " + std::to_string(cfg.dim));
  for (double l : cfg.box)
    if (!(l > 0.0)) bad.push_back("box lengths must be positive");
  for (auto [name, v] : {std::pair{"tol_residual", cfg.tol_residual}, {"tol_pohozaev", cfg.tol_pohozaev}, {"tol_update", cfg.tol_update}})
    if (!(v > 0.0)) bad.push_back(std::string(name) + " must be positive");
  if (cfg.mode == "fixed-k" && !cfg.k && cfg.sweep.empty()) bad.push_back("fixed-k mode needs --k");
  if (cfg.mode != "fixed-k" && !cfg.c && cfg.sweep.empty()) bad.push_back(cfg.mode + " mode needs --c");
  try {
    make_model(cfg.model, cfg.params);
  } catch (const Error& e) {
    const std::string m = e.what();
    bad.push_back(m.substr(m.find(": ") + 2));
  }
  if (!bad.empty()) {
    std::string msg;
    for (const auto& b : bad) msg += (msg.empty() ? "" : "; ") + b;
    fail(ErrorCode::ValidationError, msg);
  }
  return cfg;
}

inline Grid make_grid(const RunConfig& cfg, double eps) {
  if (cfg.box_auto) return auto_box(eps, cfg.grid);
  return Grid::make(cfg.grid, cfg.box);
}

/// Relative output paths land in TWAVES_OUT_DIR when it is set.
inline std::string output_path(const std::string& path) {
  const std::filesystem::path p(path);
  const char* dir = std::getenv("TWAVES_OUT_DIR");
  if (p.is_absolute() || !dir || !*dir) return path;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / p).string();
}

// ---- CSV ----------------------------------------------------------------------

struct Csv {
  std::string kind;  // e.g. "curve"
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  static std::string num(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
  }
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  std::string str() const {
    std::ostringstream out;
    out << "# twaves " << kind << " v1\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << quote(r[i]);
      out << '\n';
    }
    return out.str();
  }
  void write(const std::string& path) const {
    std::ofstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot open " + path);
    f << str();
  }
};

}  // namespace twaves::cli
