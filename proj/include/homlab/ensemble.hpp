#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "homlab/domain.hpp"
#include "homlab/field.hpp"

namespace homlab {

enum class Law { two_phase, log_uniform };

/// Law of iid edge conductances.
///
/// two_phase: a_e = alpha with probability `prob`, beta otherwise.
/// log_uniform: log a_e uniform on [log lambda, -log lambda].
struct EnsembleSpec {
  int dim = 2;
  double lambda = 0.25;
  Law law = Law::two_phase;
  double alpha = 0.25;
  double beta = 4.0;
  double prob = 0.5;
  std::uint64_t seed = 0;

  /// Throws ConfigError when the spec violates ellipticity or range limits.
  void validate() const;

  /// Edge-law mean and variance (exact).
  double law_mean() const;
  double law_variance() const;
  /// True when the law is a point mass.
  bool degenerate() const;

  friend bool operator==(const EnsembleSpec&, const EnsembleSpec&) = default;
};

std::string to_string(Law law);
Law parse_law(const std::string& name);

/// Per-sample seed: splitmix64 mix of (base seed, sample index, stream tag).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t sample_index, std::uint64_t stream = 0);

/// 53-bit uniform in [0, 1); bit-exact across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// One conductance per edge slot of a domain (see DomainGrid for the slot
/// layout). Slots that are not edges of a box still carry a sampled value.
struct CoefficientField {
  DomainKind kind = DomainKind::torus;
  int dim = 0;
  int side = 0;
  double lambda = 0.0;
  EdgeField values;

  DomainGrid domain() const;
  bool matches(const DomainGrid& grid) const noexcept;
  double min() const;
  double max() const;

  friend bool operator==(const CoefficientField&, const CoefficientField&) = default;
};

CoefficientField sample_field(const EnsembleSpec& spec, const DomainGrid& grid, std::uint64_t sample_index);
CoefficientField constant_field(const DomainGrid& grid, double value, double lambda);

/// result[e] = field[e] + delta[e], re-projected into [lambda, 1/lambda] when
/// `clamp` is set.
CoefficientField perturb(const CoefficientField& field, const EdgeField& delta, bool clamp);

/// Edge slots of a box of side `box_side` cut out of a torus field (box node x
/// sits on torus node x). Requires box_side + 1 <= torus side.
CoefficientField restrict_to_box(const CoefficientField& torus_field, int box_side);

/// Mean over samples of the Pearson correlation between axis-0 edge values at
/// lattice distance `lag` along axis 0, on a torus of side `side`. Returns 0
/// for zero-variance laws.
double correlation_probe(const EnsembleSpec& spec, int n_samples, int lag, int side = 32);

/// Binary field file: "HGF1", u32 d, u32 dims[d], u8 kind, f64 LE values.
void write_field(std::ostream& out, const CoefficientField& field);
CoefficientField read_field(std::istream& in);
void write_field_file(const std::string& path, const CoefficientField& field);
CoefficientField read_field_file(const std::string& path);

}  // namespace homlab
