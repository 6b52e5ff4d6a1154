#include "homlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "homlab/errors.hpp"

namespace homlab {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_number(long long v) { return std::to_string(v); }

double parse_number(const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) throw ArgumentError("not a number: '" + cell + "'");
  return v;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("HOMLAB_WORKERS")) {
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), n);
    if (ec == std::errc() && *ptr == '\0' && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n") != std::string::npos) throw ArgumentError("CSV cell contains a separator");
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// sample -> completed rows, from a possibly truncated checkpoint. `valid` is
// the length up to the last complete line; anything after it is dropped.
std::map<std::uint64_t, std::vector<Record>> read_checkpoint(const std::string& path, std::uintmax_t& valid) {
  std::map<std::uint64_t, std::vector<Record>> done;
  valid = 0;
  std::ifstream in(path, std::ios::binary);
  if (!in) return done;
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  text.erase(text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1);
  valid = text.size();
  std::istringstream lines(text);
  std::map<std::uint64_t, std::vector<Record>> pending;
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line);
    if (cells.size() < 2) throw RunError("malformed checkpoint line in " + path);
    std::uint64_t sample = 0;
    const std::string& key = cells[0] == "#done" ? cells[1] : cells[0];
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), sample);
    if (ec != std::errc() || ptr != key.data() + key.size()) throw RunError("malformed checkpoint line in " + path);
    if (cells[0] == "#done") {
      done[sample] = std::move(pending[sample]);
      pending.erase(sample);
    } else {
      cells.erase(cells.begin());
      pending[sample].push_back({sample, std::move(cells)});
    }
  }
  return done;
}

}  // namespace

RunOutcome run_ensemble(const RunOptions& opts, const SampleTask& task) {
  if (opts.samples == 0) throw ArgumentError("run needs at least one sample");
  std::map<std::uint64_t, std::vector<Record>> results;
  std::uintmax_t valid = 0;
  if (!opts.checkpoint.empty()) results = read_checkpoint(opts.checkpoint, valid);
  for (auto it = results.begin(); it != results.end();)
    it = it->first >= opts.samples ? results.erase(it) : std::next(it);

  RunOutcome outcome;
  outcome.resumed = results.size();
  std::vector<std::uint64_t> todo;
  for (std::uint64_t s = 0; s < opts.samples; ++s)
    if (!results.contains(s)) todo.push_back(s);

  std::ofstream ckpt;
  if (!opts.checkpoint.empty()) {
    // Cut a half-written last line so the next block starts clean.
    std::error_code ec;
    if (std::filesystem::exists(opts.checkpoint, ec) && std::filesystem::file_size(opts.checkpoint, ec) != valid)
      std::filesystem::resize_file(opts.checkpoint, valid);
    ckpt.open(opts.checkpoint, std::ios::app);
    if (!ckpt) throw RunError("cannot open checkpoint " + opts.checkpoint);
  }

  std::mutex lock;
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  const auto worker = [&] {
    for (;;) {
      const std::size_t n = next.fetch_add(1);
      if (n >= todo.size()) return;
      const std::uint64_t sample = todo[n];
      std::vector<Record> rows;
      bool failed = false;
      try {
        rows = task(sample);
        for (Record& r : rows) r.sample = sample;
      } catch (const SolverError&) {
        failed = true;
      } catch (const SingularError&) {
        failed = true;
      } catch (...) {
        const std::lock_guard g(lock);
        if (!fatal) fatal = std::current_exception();
        next = todo.size();
        return;
      }
      const std::lock_guard g(lock);
      if (failed) {
        outcome.failed.push_back(sample);
        continue;
      }
      if (ckpt.is_open()) {
        std::string block;
        for (const Record& r : rows) block += std::to_string(sample) + ',' + join(r.cells) + '\n';
        block += "#done," + std::to_string(sample) + '\n';
        ckpt << block << std::flush;
      }
      results[sample] = std::move(rows);
      ++outcome.computed;
    }
  };

  const std::size_t workers = std::min(opts.workers ? opts.workers : default_workers(), std::max<std::size_t>(todo.size(), 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  std::sort(outcome.failed.begin(), outcome.failed.end());
  const double rate = static_cast<double>(outcome.failed.size()) / static_cast<double>(opts.samples);
  if (rate > opts.max_failure_rate)
    throw RunError(std::to_string(outcome.failed.size()) + " of " + std::to_string(opts.samples) +
                   " samples failed (limit " + format_number(100.0 * opts.max_failure_rate) + "%)");

  for (auto& [sample, rows] : results)
    for (Record& r : rows) outcome.records.push_back(std::move(r));
  return outcome;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const std::vector<Record>& records) {
  out << join(header) << '\n';
  for (const Record& r : records) {
    if (r.cells.size() != header.size()) throw ArgumentError("record width does not match the CSV header");
    out << join(r.cells) << '\n';
  }
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RunError("cannot write " + path);
  write_csv(out, header, records);
}

}  // namespace homlab
