#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace homlab {

/// One CSV row produced by a sample. `cells` is the full row; `sample` only
/// drives the merge order.
struct Record {
  std::uint64_t sample = 0;
  std::vector<std::string> cells;

  friend bool operator==(const Record&, const Record&) = default;
};

/// Shortest text that round-trips the double ("%.17g").
std::string format_number(double v);
std::string format_number(long long v);
inline std::string format_number(int v) { return format_number(static_cast<long long>(v)); }
inline std::string format_number(std::size_t v) { return format_number(static_cast<long long>(v)); }

struct RunOptions {
  std::size_t samples = 1;
  /// 0 selects default_workers().
  std::size_t workers = 0;
  /// Append-only progress file; empty disables checkpointing.
  std::string checkpoint;
  double max_failure_rate = 0.01;
};

struct RunOutcome {
  /// Sorted by sample; rows of one sample keep their task order.
  std::vector<Record> records;
  std::vector<std::uint64_t> failed;
  std::size_t resumed = 0;
  std::size_t computed = 0;
};

/// Records of one sample. Solver failures (SolverError, SingularError) mark
/// the sample as failed; any other exception aborts the run.
using SampleTask = std::function<std::vector<Record>(std::uint64_t sample)>;

/// Runs samples 0..N-1 on a worker pool. Samples completed in an existing
/// checkpoint are reused, not recomputed. Throws RunError when more than
/// max_failure_rate of the samples failed.
RunOutcome run_ensemble(const RunOptions& opts, const SampleTask& task);

/// HOMLAB_WORKERS when set, otherwise the hardware concurrency.
std::size_t default_workers();

void write_csv(std::ostream& out, const std::vector<std::string>& header, const std::vector<Record>& records);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<Record>& records);

/// Parses a cell written by format_number.
double parse_number(const std::string& cell);

}  // namespace homlab
