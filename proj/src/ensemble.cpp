#include "homlab/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}


template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw ConfigError("field file truncated");
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void EnsembleSpec::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("dimension must be 1, 2 or 3");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("lambda must lie in (0, 1)");
  if (law == Law::two_phase) {
    const double lo = lambda, hi = 1.0 / lambda;
    if (!(alpha >= lo && alpha <= hi)) throw ConfigError("alpha outside [lambda, 1/lambda]");
    if (!(beta >= lo && beta <= hi)) throw ConfigError("beta outside [lambda, 1/lambda]");
    if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("phase probability outside [0, 1]");
  }
}

double EnsembleSpec::law_mean() const {
  if (law == Law::two_phase) return prob * alpha + (1.0 - prob) * beta;
  const double width = -2.0 * std::log(lambda);
  return (1.0 / lambda - lambda) / width;
}

double EnsembleSpec::law_variance() const {
  if (law == Law::two_phase) return prob * (1.0 - prob) * (alpha - beta) * (alpha - beta);
  const double width = -2.0 * std::log(lambda);
  const double second = (1.0 / (lambda * lambda) - lambda * lambda) / (2.0 * width);
  const double m = law_mean();
  return second - m * m;
}

bool EnsembleSpec::degenerate() const {
  if (law == Law::two_phase) return alpha == beta || prob == 0.0 || prob == 1.0;
  return false;
}

std::string to_string(Law law) { return law == Law::two_phase ? "two-phase" : "log-uniform"; }

Law parse_law(const std::string& name) {
  if (name == "two-phase" || name == "two_phase") return Law::two_phase;
  if (name == "log-uniform" || name == "log_uniform") return Law::log_uniform;
  throw ConfigError("unknown law '" + name + "' (expected two-phase or log-uniform)");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t sample_index, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(base) ^ sample_index) ^ (stream * 0x632be59bd9b4e019ULL));
}

DomainGrid CoefficientField::domain() const {
  return kind == DomainKind::torus ? DomainGrid::torus(side, dim) : DomainGrid::box(side, dim);
}

bool CoefficientField::matches(const DomainGrid& grid) const noexcept {
  return grid.kind() == kind && grid.dim() == dim && grid.side() == side && grid.edge_slots() == values.size();
}

double CoefficientField::min() const { return *std::min_element(values.begin(), values.end()); }
double CoefficientField::max() const { return *std::max_element(values.begin(), values.end()); }

CoefficientField sample_field(const EnsembleSpec& spec, const DomainGrid& grid, std::uint64_t sample_index) {
  spec.validate();
  if (grid.dim() != spec.dim) throw ConfigError("ensemble dimension does not match the domain");

  CoefficientField field{grid.kind(), grid.dim(), grid.side(), spec.lambda, EdgeField(grid.edge_slots())};
  std::mt19937_64 rng(derive_seed(spec.seed, sample_index));
  const double lo = spec.lambda, hi = 1.0 / spec.lambda;
  const double log_lo = std::log(lo), log_hi = std::log(hi);
  for (double& v : field.values) {
    const double u = unit_uniform(rng);
    if (spec.law == Law::two_phase)
      v = u < spec.prob ? spec.alpha : spec.beta;
    else
      v = std::clamp(std::exp(log_lo + (log_hi - log_lo) * u), lo, hi);
  }
  return field;
}

CoefficientField constant_field(const DomainGrid& grid, double value, double lambda) {
  return CoefficientField{grid.kind(), grid.dim(), grid.side(), lambda, EdgeField(grid.edge_slots(), value)};
}

CoefficientField perturb(const CoefficientField& field, const EdgeField& delta, bool clamp) {
  if (delta.size() != field.values.size()) throw ArgumentError("perturbation does not match the edge set");
  CoefficientField out = field;
  const double lo = field.lambda, hi = 1.0 / field.lambda;
  for (std::size_t e = 0; e < delta.size(); ++e) {
    out.values[e] = field.values[e] + delta[e];
    if (clamp) out.values[e] = std::clamp(out.values[e], lo, hi);
  }
  return out;
}

CoefficientField restrict_to_box(const CoefficientField& torus_field, int box_side) {
  if (torus_field.kind != DomainKind::torus) throw ArgumentError("restriction source must be a torus field");
  if (box_side + 1 > torus_field.side) throw ArgumentError("box does not fit inside the torus");
  const DomainGrid torus = torus_field.domain();
  const DomainGrid box = DomainGrid::box(box_side, torus_field.dim);
  CoefficientField out{DomainKind::box, torus_field.dim, box_side, torus_field.lambda, EdgeField(box.edge_slots())};
  for (int k = 0; k < box.dim(); ++k)
    for (std::size_t node = 0; node < box.node_count(); ++node) {
      const std::size_t t = torus.index(box.coords(node));
      out.values[box.edge_index(k, node)] = torus_field.values[torus.edge_index(k, t)];
    }
  return out;
}

double correlation_probe(const EnsembleSpec& spec, int n_samples, int lag, int side) {
  if (n_samples < 2) throw ArgumentError("correlation probe needs at least 2 samples");
  if (lag < 0) throw ArgumentError("lag must be non-negative");
  spec.validate();
  if (spec.degenerate()) return 0.0;
  const DomainGrid grid = DomainGrid::torus(side, spec.dim);
  double total = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const CoefficientField field = sample_field(spec, grid, static_cast<std::uint64_t>(s));
    const std::size_t n = grid.node_count();
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t node = 0; node < n; ++node) {
      const double x = field.values[grid.edge_index(0, node)];
      const double y = field.values[grid.edge_index(0, grid.neighbor(node, 0, lag))];
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    const double cov = sxy / dn - (sx / dn) * (sy / dn);
    const double vx = sxx / dn - (sx / dn) * (sx / dn);
    const double vy = syy / dn - (sy / dn) * (sy / dn);
    // A sample may come out constant even for a non-degenerate law.
    total += (vx > 0.0 && vy > 0.0) ? cov / std::sqrt(vx * vy) : 0.0;
  }
  return total / n_samples;
}

void write_field(std::ostream& out, const CoefficientField& field) {
  out.write("HGF1", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.dim));
  const DomainGrid grid = field.domain();
  for (int k = 0; k < field.dim; ++k) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.extent()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(field.kind));
  for (double v : field.values) put_le<double>(out, v);
  if (!out) throw ConfigError("failed to write field file");
}

CoefficientField read_field(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "HGF1", 4) != 0) throw ConfigError("not a field file (bad magic)");
  const auto d = get_le<std::uint32_t>(in);
  if (d < 1 || d > 3) throw ConfigError("field file: unsupported dimension");
  std::vector<std::uint32_t> dims(d);
  for (auto& n : dims) n = get_le<std::uint32_t>(in);
  if (!std::all_of(dims.begin(), dims.end(), [&](std::uint32_t n) { return n == dims[0]; }))
    throw ConfigError("field file: only cubic grids are supported");
  const auto kind_byte = get_le<std::uint8_t>(in);
  if (kind_byte > 1) throw ConfigError("field file: unknown domain kind");
  const auto kind = static_cast<DomainKind>(kind_byte);
  const int side = kind == DomainKind::torus ? static_cast<int>(dims[0]) : static_cast<int>(dims[0]) - 1;

  CoefficientField field;
  field.kind = kind;
  field.dim = static_cast<int>(d);
  field.side = side;
  const DomainGrid grid = field.domain();
  field.values = EdgeField(grid.edge_slots());
  for (double& v : field.values) v = get_le<double>(in);
  const double lo = field.min(), hi = field.max();
  if (!(lo > 0.0)) throw ConfigError("field file: non-positive conductance");
  field.lambda = std::min({lo, 1.0 / hi, 1.0});
  return field;
}

void write_field_file(const std::string& path, const CoefficientField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write_field(out, field);
}

CoefficientField read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_field(in);
}

}  // namespace homlab
