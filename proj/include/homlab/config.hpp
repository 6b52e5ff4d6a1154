#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "homlab/corrector.hpp"
#include "homlab/ensemble.hpp"
#include "homlab/solver.hpp"

namespace homlab {

struct RunConfig {
  std::string command;
  EnsembleSpec spec;
  std::vector<int> sizes{32};
  std::size_t samples = 16;
  std::vector<double> moments{2.0};
  double tolerance = 1e-10;
  std::size_t max_iterations = 0;
  std::string out = "out";
  /// 0 selects the HOMLAB_WORKERS / hardware default.
  std::size_t workers = 0;
  /// Directory for resumable progress files; empty disables them.
  std::string checkpoint;
  MinimalRadiusParams minrad;

  /// Full validation, including the power-of-two size rule. Throws ConfigError.
  void validate() const;
  SolveOptions solve_options() const;

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

/// `key = value` lines, optionally grouped under [ensemble], [run], [solver]
/// and [minrad]; `#` starts a comment. Lists are comma separated. Unknown or
/// duplicate keys and bad values raise ConfigError naming `source:line`.
/// The result is validated.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>", RunConfig base = {});
RunConfig parse_config_file(const std::string& path, RunConfig base = {});

/// Inverse of parse_config.
std::string serialize(const RunConfig& cfg);

/// Sizes: power of two in [8, 512].
bool valid_size(int L);

}  // namespace homlab
