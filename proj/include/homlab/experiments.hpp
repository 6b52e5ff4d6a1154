#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "homlab/config.hpp"
#include "homlab/runner.hpp"

namespace homlab {

/// One pass/fail statement about an experiment. `value` is compared against
/// `threshold` in the direction described by `detail`.
struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  std::vector<std::string> header;
  std::vector<Record> records;
  nlohmann::json summary;
  std::vector<Check> checks;
  std::size_t failed_samples = 0;

  bool passed() const;
};

/// Commands accepted by run_experiment (everything except gen and report).
const std::vector<std::string>& experiment_names();

/// Runs cfg.command over cfg.sizes x cfg.samples. Sizes only need L >= 8 here;
/// the power-of-two rule is a CLI policy (RunConfig::validate).
ExperimentResult run_experiment(const RunConfig& cfg);

/// Homogenized coefficient used as reference: exact where a closed form
/// exists (point mass, d = 1, self-dual d = 2 laws), otherwise the mean of 8
/// periodic RVE samples on a torus of side 64.
struct ReferenceAbar {
  double value = 0.0;
  bool exact = false;
};
ReferenceAbar reference_abar(const EnsembleSpec& spec, const SolveOptions& opts = {});

/// Relative sign between the quenched mixed derivative and the corrector
/// prediction, fixed on a low-contrast sample as the one minimizing |E|.
struct SignChoice {
  double sign = -1.0;
  double error_minus = 0.0;
  double error_plus = 0.0;
};
const SignChoice& expansion_sign();

nlohmann::json to_json(const Check& c);
nlohmann::json to_json(const RateFit& f);

}  // namespace homlab
