#include "wip/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wip {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Shortest representation that round-trips; used for human-facing dumps.
static std::string format_double_short(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

TerminalFunctional scalar_quadratic(double P2, double p1, double Pbar2, double p2) {
  return TerminalFunctional::quadratic(Mat::scalar(P2), Vec{p1}, Mat::scalar(Pbar2), p2);
}

struct RawConfig {
  // section -> key -> (value, line)
  std::map<std::string, std::map<std::string, std::pair<std::string, int>>> kv;
  std::string origin;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = kv.find(sec);
    return s != kv.end() && s->second.count(key) > 0;
  }
  std::string get(const std::string& sec, const std::string& key) const {
    return kv.at(sec).at(key).first;
  }
  int line(const std::string& sec, const std::string& key) const {
    return kv.at(sec).at(key).second;
  }
};

[[noreturn]] void fail(const RawConfig& raw, const std::string& sec, const std::string& key,
                       const std::string& why) {
  throw std::invalid_argument(raw.origin + ":" + std::to_string(raw.line(sec, key)) + ": [" +
                              sec + "] " + key + ": " + why);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

double parse_number(const RawConfig& raw, const std::string& sec, const std::string& key,
                    const std::string& text) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(raw, sec, key, "expected a number, got '" + text + "'");
  }
}

std::vector<double> parse_number_list(const RawConfig& raw, const std::string& sec,
                                      const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(raw, sec, key, "empty element in list");
    out.push_back(parse_number(raw, sec, key, item));
  }
  if (out.empty()) fail(raw, sec, key, "empty list");
  return out;
}

Mat parse_square_matrix(const RawConfig& raw, const std::string& sec, const std::string& key,
                        const std::string& text, int d) {
  const std::vector<double> v = parse_number_list(raw, sec, key, text);
  if (static_cast<int>(v.size()) == 1 && d == 1) return Mat::scalar(v[0]);
  if (static_cast<int>(v.size()) != d * d)
    fail(raw, sec, key, "expected " + std::to_string(d * d) + " row-major entries");
  Mat m(d, d);
  m.a = v;
  return m;
}

RawConfig tokenize(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                    ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = unquote(trim(line.substr(eq + 1)));
    if (key.empty() || val.empty())
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": empty key or value");
    if (raw.kv[section].count(key))
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                  key + "' in section [" + section + "]");
    raw.kv[section][key] = {val, lineno};
  }
  return raw;
}

const std::map<std::string, std::string> kKnownKeys = {
    {"model", "name d b0 B Bbar sigma"},
    {"g", "type P2 p1 Pbar2 p2"},
    {"sim", "N M dt dt_rule s T seed y"},
    {"policy", "name"},
    {"output", "csv timing"},
};

void check_known_keys(const RawConfig& raw) {
  for (const auto& [sec, kv] : raw.kv) {
    auto it = kKnownKeys.find(sec);
    if (it == kKnownKeys.end())
      throw std::invalid_argument(raw.origin + ": unknown section [" + sec + "]");
    for (const auto& [key, val] : kv) {
      const std::string& allowed = it->second;
      std::stringstream ss(allowed);
      std::string tok;
      bool ok = false;
      while (ss >> tok)
        if (tok == key) ok = true;
      if (!ok)
        throw std::invalid_argument(raw.origin + ":" + std::to_string(val.second) +
                                    ": unknown key '" + key + "' in section [" + sec + "]");
    }
  }
}

}  // namespace

RunConfig named_example(const std::string& name) {
  RunConfig cfg;
  cfg.model_name = name;
  cfg.s = 0.0;
  cfg.T = 1.0;
  if (name == "example_4_1") {
    cfg.lq = LQModel::scalar(0.0, 1.0, -1.0, 0.5);
    cfg.g = scalar_quadratic(0.0, 1.0, 0.0, 0.0);
    cfg.y0 = {0.1};
  } else if (name == "example_4_2") {
    cfg.lq = LQModel::scalar(0.0, -1.0, 0.0, 1.0);
    cfg.g = scalar_quadratic(1.0, 0.0, 0.0, 0.0);
    cfg.y0 = {0.5};
  } else if (name == "sec_5_1") {
    cfg.lq = LQModel::scalar(0.0, -1.0, 2.0, 0.5);
    cfg.g = scalar_quadratic(1.0, 0.0, 0.0, 0.0);
    cfg.y0 = {0.2};
  } else if (name == "abs_outside") {
    cfg.lq = LQModel::scalar(0.0, -1.0, 2.0, 0.5);
    cfg.g = TerminalFunctional::abs_of_mean();
    cfg.y0 = {0.4};
  } else if (name == "abs_inside") {
    cfg.lq = LQModel::scalar(0.0, -1.0, 2.0, 0.5);
    cfg.g = TerminalFunctional::mean_of_abs();
    cfg.y0 = {0.4};
  } else {
    throw std::invalid_argument("unknown named example '" + name + "' (known: example_4_1, "
                                "example_4_2, sec_5_1, abs_outside, abs_inside)");
  }
  return cfg;
}

std::vector<std::string> named_example_list() {
  return {"example_4_1", "example_4_2", "sec_5_1", "abs_outside", "abs_inside"};
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RawConfig raw = tokenize(text, origin);
  check_known_keys(raw);

  RunConfig cfg;
  if (raw.has("model", "name")) {
    cfg = named_example(raw.get("model", "name"));
  }

  int d = cfg.lq.dim();
  if (raw.has("model", "d")) {
    d = static_cast<int>(parse_number(raw, "model", "d", raw.get("model", "d")));
    if (d < 1) fail(raw, "model", "d", "dimension must be >= 1");
    cfg.lq = LQModel{Vec(d, 0.0), Mat(d, d), Mat(d, d), Mat(d, 1)};
    cfg.y0.assign(d, 0.0);
  }
  if (raw.has("model", "b0")) {
    Vec v = parse_number_list(raw, "model", "b0", raw.get("model", "b0"));
    if (static_cast<int>(v.size()) != d) fail(raw, "model", "b0", "expected d entries");
    cfg.lq.b0 = v;
  }
  if (raw.has("model", "B"))
    cfg.lq.B = parse_square_matrix(raw, "model", "B", raw.get("model", "B"), d);
  if (raw.has("model", "Bbar"))
    cfg.lq.Bbar = parse_square_matrix(raw, "model", "Bbar", raw.get("model", "Bbar"), d);
  if (raw.has("model", "sigma")) {
    Vec v = parse_number_list(raw, "model", "sigma", raw.get("model", "sigma"));
    if (static_cast<int>(v.size()) != d) fail(raw, "model", "sigma", "expected d entries (m = 1)");
    cfg.lq.sigma = Mat(d, 1);
    cfg.lq.sigma.a = v;
  }

  if (raw.has("g", "type")) {
    const std::string type = raw.get("g", "type");
    if (type == "quadratic") {
      Mat P2 = raw.has("g", "P2") ? parse_square_matrix(raw, "g", "P2", raw.get("g", "P2"), d)
                                  : Mat(d, d);
      Mat Pbar2 = raw.has("g", "Pbar2")
                      ? parse_square_matrix(raw, "g", "Pbar2", raw.get("g", "Pbar2"), d)
                      : Mat(d, d);
      Vec p1(d, 0.0);
      if (raw.has("g", "p1")) {
        p1 = parse_number_list(raw, "g", "p1", raw.get("g", "p1"));
        if (static_cast<int>(p1.size()) != d) fail(raw, "g", "p1", "expected d entries");
      }
      const double p2 = raw.has("g", "p2") ? parse_number(raw, "g", "p2", raw.get("g", "p2")) : 0.0;
      cfg.g = TerminalFunctional::quadratic(std::move(P2), std::move(p1), std::move(Pbar2), p2);
    } else if (type == "abs_of_mean") {
      cfg.g = TerminalFunctional::abs_of_mean();
    } else if (type == "mean_of_abs") {
      cfg.g = TerminalFunctional::mean_of_abs();
    } else {
      fail(raw, "g", "type", "expected quadratic | abs_of_mean | mean_of_abs");
    }
  }

  if (raw.has("sim", "N")) {
    cfg.n_list.clear();
    for (double v : parse_number_list(raw, "sim", "N", raw.get("sim", "N"))) {
      if (v < 1 || v != std::floor(v)) fail(raw, "sim", "N", "N entries must be positive integers");
      cfg.n_list.push_back(static_cast<int>(v));
    }
  }
  if (raw.has("sim", "M")) {
    const double v = parse_number(raw, "sim", "M", raw.get("sim", "M"));
    if (v < 1 || v != std::floor(v)) fail(raw, "sim", "M", "M must be a positive integer");
    cfg.m = static_cast<long long>(v);
  }
  if (raw.has("sim", "dt")) {
    cfg.dt = parse_number(raw, "sim", "dt", raw.get("sim", "dt"));
    if (!(cfg.dt > 0.0)) fail(raw, "sim", "dt", "dt must be positive");
  }
  if (raw.has("sim", "dt_rule")) {
    if (raw.get("sim", "dt_rule") != "0.01/N")
      fail(raw, "sim", "dt_rule", "the only supported rule is '0.01/N'");
    cfg.dt = 0.0;
  }
  if (raw.has("sim", "s")) cfg.s = parse_number(raw, "sim", "s", raw.get("sim", "s"));
  if (raw.has("sim", "T")) cfg.T = parse_number(raw, "sim", "T", raw.get("sim", "T"));
  if (!(cfg.T > cfg.s)) {
    if (raw.has("sim", "T")) fail(raw, "sim", "T", "requires T > s");
    throw std::invalid_argument(origin + ": requires T > s");
  }
  if (raw.has("sim", "seed")) {
    const std::string v = raw.get("sim", "seed");
    try {
      cfg.seed = std::stoull(v);
    } catch (const std::exception&) {
      fail(raw, "sim", "seed", "expected a nonnegative integer");
    }
  }
  if (raw.has("sim", "y")) {
    Vec v = parse_number_list(raw, "sim", "y", raw.get("sim", "y"));
    if (static_cast<int>(v.size()) != d) fail(raw, "sim", "y", "expected d entries");
    cfg.y0 = v;
  }

  if (raw.has("policy", "name")) {
    const std::string p = raw.get("policy", "name");
    if (p != "zero" && p != "lq_optimal" && p != "sign_outside" && p != "sign_inside")
      fail(raw, "policy", "name", "expected zero | lq_optimal | sign_outside | sign_inside");
    cfg.policy = p;
  }
  if (raw.has("output", "csv")) cfg.out_path = raw.get("output", "csv");
  if (raw.has("output", "timing")) {
    const std::string v = raw.get("output", "timing");
    if (v == "true" || v == "1")
      cfg.timing = true;
    else if (v == "false" || v == "0")
      cfg.timing = false;
    else
      fail(raw, "output", "timing", "expected true|false");
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string print_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[model]\n";
  if (!cfg.model_name.empty()) out << "name = " << cfg.model_name << "\n";
  const int d = cfg.lq.dim();
  out << "d = " << d << "\n";
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += format_double_short(v[i]);
    }
    return s;
  };
  out << "b0 = " << join(cfg.lq.b0) << "\n";
  out << "B = " << join(cfg.lq.B.a) << "\n";
  out << "Bbar = " << join(cfg.lq.Bbar.a) << "\n";
  out << "sigma = " << join(cfg.lq.sigma.a) << "\n";
  out << "\n[g]\n";
  if (cfg.g) {
    switch (cfg.g->kind()) {
      case TerminalFunctional::Kind::quadratic:
        out << "type = quadratic\n";
        out << "P2 = " << join(cfg.g->P2().a) << "\n";
        out << "p1 = " << join(cfg.g->p1()) << "\n";
        out << "Pbar2 = " << join(cfg.g->Pbar2().a) << "\n";
        out << "p2 = " << format_double_short(cfg.g->p2()) << "\n";
        break;
      case TerminalFunctional::Kind::abs_of_mean:
        out << "type = abs_of_mean\n";
        break;
      case TerminalFunctional::Kind::mean_of_abs:
        out << "type = mean_of_abs\n";
        break;
    }
  }
  out << "\n[sim]\n";
  out << "N = ";
  for (size_t i = 0; i < cfg.n_list.size(); ++i) out << (i ? ", " : "") << cfg.n_list[i];
  out << "\n";
  out << "M = " << cfg.m << "\n";
  if (cfg.dt > 0.0)
    out << "dt = " << format_double_short(cfg.dt) << "\n";
  else
    out << "dt_rule = 0.01/N\n";
  out << "s = " << format_double_short(cfg.s) << "\n";
  out << "T = " << format_double_short(cfg.T) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "y = " << join(cfg.y0) << "\n";
  out << "\n[policy]\n";
  out << "name = " << cfg.policy << "\n";
  out << "\n[output]\n";
  if (!cfg.out_path.empty()) out << "csv = " << cfg.out_path << "\n";
  out << "timing = " << (cfg.timing ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace wip
