#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "homlab/errors.hpp"
#include "homlab/runner.hpp"

using namespace homlab;
namespace fs = std::filesystem;

namespace {

std::vector<Record> two_rows(std::uint64_t s) {
  const double v = std::sqrt(static_cast<double>(s) + 0.1);
  return {{s, {format_number(s), "a", format_number(v)}}, {s, {format_number(s), "b", format_number(v * v)}}};
}

std::string csv_of(const RunOutcome& o) {
  std::ostringstream out;
  write_csv(out, {"sample", "kind", "value"}, o.records);
  return out.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("homlab_test_" + name);
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("worker count does not change the output") {
  RunOptions one;
  one.samples = 37;
  one.workers = 1;
  RunOptions four = one;
  four.workers = 4;
  const auto a = run_ensemble(one, two_rows);
  const auto b = run_ensemble(four, two_rows);
  CHECK(a.records.size() == 74);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(a.records[1].cells[1] == "b");
}

TEST_CASE("checkpoint resume skips finished samples") {
  const fs::path ckpt = scratch("resume.ckpt");
  RunOptions opts;
  opts.samples = 6;
  opts.workers = 2;
  opts.checkpoint = ckpt.string();
  const auto first = run_ensemble(opts, two_rows);
  CHECK(first.computed == 6);

  std::atomic<int> calls{0};
  const auto again = run_ensemble(opts, [&](std::uint64_t s) {
    ++calls;
    return two_rows(s);
  });
  CHECK(calls == 0);
  CHECK(again.resumed == 6);
  CHECK(csv_of(again) == csv_of(first));

  // Growing N computes only the new samples.
  opts.samples = 9;
  const auto more = run_ensemble(opts, [&](std::uint64_t s) {
    ++calls;
    return two_rows(s);
  });
  CHECK(calls == 3);
  opts.workers = 1;
  opts.checkpoint.clear();
  CHECK(csv_of(more) == csv_of(run_ensemble(opts, two_rows)));
  fs::remove(ckpt);
}

TEST_CASE("a truncated checkpoint block is recomputed") {
  const fs::path ckpt = scratch("trunc.ckpt");
  RunOptions opts;
  opts.samples = 4;
  opts.workers = 1;
  opts.checkpoint = ckpt.string();
  const auto fresh = run_ensemble(opts, two_rows);

  // Keep samples 0 and 1, then half a line of sample 2.
  std::string text;
  {
    std::ifstream in(ckpt);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  const std::size_t cut = text.find("#done,1\n") + 8;
  {
    std::ofstream out(ckpt, std::ios::trunc);
    out << text.substr(0, cut) << "2,2,a,1.4";
  }
  std::vector<std::uint64_t> seen;
  const auto resumed = run_ensemble(opts, [&](std::uint64_t s) {
    seen.push_back(s);
    return two_rows(s);
  });
  CHECK(seen == std::vector<std::uint64_t>{2, 3});
  CHECK(resumed.resumed == 2);
  CHECK(csv_of(resumed) == csv_of(fresh));
  // And the file is clean for a third pass.
  CHECK(csv_of(run_ensemble(opts, [](std::uint64_t) -> std::vector<Record> { throw std::logic_error("no"); })) ==
        csv_of(fresh));
  fs::remove(ckpt);
}

TEST_CASE("failures") {
  RunOptions opts;
  opts.samples = 200;
  opts.workers = 3;
  const auto flaky = [](std::uint64_t s) {
    if (s == 17) throw SolverError("no convergence", 1.0, 10);
    return two_rows(s);
  };
  const auto out = run_ensemble(opts, flaky);
  CHECK(out.failed == std::vector<std::uint64_t>{17});
  CHECK(out.records.size() == 398);

  const auto bad = [](std::uint64_t s) {
    if (s % 50 == 3) throw SingularError("singular");
    return two_rows(s);
  };
  CHECK_THROWS_AS(run_ensemble(opts, bad), RunError);
  CHECK_THROWS_AS(run_ensemble(opts, [](std::uint64_t) -> std::vector<Record> { throw std::logic_error("bug"); }),
                  std::logic_error);
  opts.samples = 0;
  CHECK_THROWS_AS(run_ensemble(opts, two_rows), ArgumentError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 6.02214076e23, 5e-324, -1.7976931348623157e308, 0.1 + 0.2})
    CHECK(parse_number(format_number(v)) == v);
  CHECK(format_number(42) == "42");
  CHECK(std::isinf(parse_number(format_number(std::numeric_limits<double>::infinity()))));
  CHECK_THROWS_AS(parse_number("1.5x"), ArgumentError);
  CHECK_THROWS_AS(parse_number(""), ArgumentError);
  std::ostringstream out;
  CHECK_THROWS_AS(write_csv(out, {"a", "b"}, {{0, {"1"}}}), ArgumentError);
  CHECK_THROWS_AS(write_csv(out, {"a"}, {{0, {"x,y"}}}), ArgumentError);
}
