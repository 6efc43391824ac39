#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wip/measures.hpp"
#include "wip/models.hpp"

namespace wip {

// Resolved experiment configuration. Named examples pin coefficients; file
// keys and CLI flags override them field by field.
struct RunConfig {
  std::string model_name;  // empty, or one of the named examples
  LQModel lq = LQModel::scalar(0.0, 0.0, 0.0, 1.0);
  std::optional<TerminalFunctional> g;

  std::vector<int> n_list{5};
  long long m = 100000;
  double dt = 0.0;  // 0 -> rule 0.01/N
  double s = 0.0;
  double T = 1.0;
  uint64_t seed = 0;
  Vec y0{0.0};  // single starting point, replicated across particles

  std::string policy = "zero";
  std::string out_path;
  bool timing = true;
  int riccati_steps = 10000;
};

// Names: example_4_1, example_4_2, sec_5_1, abs_outside, abs_inside.
RunConfig named_example(const std::string& name);
std::vector<std::string> named_example_list();

// TOML-style sectioned key/value file ([model], [g], [sim], [policy],
// [output]); '#' comments. Throws std::invalid_argument with a line-numbered
// message on malformed input.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

// Serializes the resolved config in the same key/value format.
std::string print_config(const RunConfig& cfg);

// Full-precision, locale-independent formatting (17 significant digits).
std::string format_double(double v);

}  // namespace wip
