// homlab: command-line driver for the experiment suite.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "homlab/config.hpp"
#include "homlab/errors.hpp"
#include "homlab/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace homlab;

namespace {

// git blob hash: sha1("blob <size>\0" + content).
std::string blob_hash(const std::string& content) {
  const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RunError("cannot write " + p.string());
  out << text;
}

struct Flags {
  std::string config;
  std::string law;
  int dim = 0;
  double lambda = 0, alpha = 0, beta = 0, prob = 0;
  std::uint64_t seed = 0;
  std::vector<int> sizes;
  std::size_t samples = 0;
  std::vector<double> moments;
  double tolerance = 0;
  std::size_t max_iterations = 0;
  std::string out;
  std::size_t workers = 0;
  std::string checkpoint;
  double theta = 0, p = 0, gamma = 0, c_theta = 0;
  std::map<std::string, CLI::Option*> opt;

  bool given(const std::string& name) const {
    const auto it = opt.find(name);
    return it != opt.end() && it->second->count() > 0;
  }
};

void add_flags(CLI::App* sub, Flags& f, bool experiment) {
  f.opt["config"] = sub->add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
  f.opt["law"] = sub->add_option("--law", f.law, "two-phase or log-uniform");
  f.opt["dim"] = sub->add_option("--dim,-d", f.dim, "dimension 1..3");
  f.opt["lambda"] = sub->add_option("--lambda", f.lambda, "ellipticity: a in [lambda, 1/lambda]");
  f.opt["alpha"] = sub->add_option("--alpha", f.alpha, "two-phase value taken with probability prob");
  f.opt["beta"] = sub->add_option("--beta", f.beta, "two-phase value taken otherwise");
  f.opt["prob"] = sub->add_option("--prob", f.prob, "two-phase probability of alpha");
  f.opt["seed"] = sub->add_option("--seed", f.seed, "base seed");
  f.opt["L"] = sub->add_option("--L", f.sizes, "domain side(s), comma separated")->delimiter(',');
  f.opt["out"] = sub->add_option("--out", f.out, experiment ? "output directory" : "output field file (.hgf)");
  if (!experiment) return;
  f.opt["N"] = sub->add_option("--N", f.samples, "samples per size");
  f.opt["moments"] = sub->add_option("--moments", f.moments, "moment orders p, comma separated")->delimiter(',');
  f.opt["tolerance"] = sub->add_option("--tol", f.tolerance, "CG relative residual");
  f.opt["max_iterations"] = sub->add_option("--max-iter", f.max_iterations, "CG iteration cap (0 = automatic)");
  f.opt["workers"] = sub->add_option("--workers", f.workers, "worker threads (0 = HOMLAB_WORKERS or all cores)");
  f.opt["checkpoint"] = sub->add_option("--checkpoint", f.checkpoint, "directory for resumable progress");
  f.opt["theta"] = sub->add_option("--theta", f.theta, "minimal radius threshold");
  f.opt["p"] = sub->add_option("--p", f.p, "minimal radius integrability");
  f.opt["gamma"] = sub->add_option("--gamma", f.gamma, "minimal radius gamma");
  f.opt["c_theta"] = sub->add_option("--c-theta", f.c_theta, "minimal radius constant");
}

// Defaults, then the config file, then flags.
RunConfig build_config(const std::string& command, const Flags& f) {
  RunConfig cfg;
  if (f.given("config")) {
    std::ifstream in(f.config);
    cfg = parse_config(in, f.config, cfg);
  }
  cfg.command = command;
  if (f.given("law")) cfg.spec.law = parse_law(f.law);
  if (f.given("dim")) cfg.spec.dim = f.dim;
  if (f.given("lambda")) cfg.spec.lambda = f.lambda;
  if (f.given("alpha")) cfg.spec.alpha = f.alpha;
  if (f.given("beta")) cfg.spec.beta = f.beta;
  if (f.given("prob")) cfg.spec.prob = f.prob;
  if (f.given("seed")) cfg.spec.seed = f.seed;
  if (f.given("L")) cfg.sizes = f.sizes;
  if (f.given("N")) cfg.samples = f.samples;
  if (f.given("moments")) cfg.moments = f.moments;
  if (f.given("tolerance")) cfg.tolerance = f.tolerance;
  if (f.given("max_iterations")) cfg.max_iterations = f.max_iterations;
  if (f.given("out")) cfg.out = f.out;
  if (f.given("workers")) cfg.workers = f.workers;
  if (f.given("checkpoint")) cfg.checkpoint = f.checkpoint;
  if (f.given("theta")) cfg.minrad.theta = f.theta;
  if (f.given("p")) cfg.minrad.p = f.p;
  if (f.given("gamma")) cfg.minrad.gamma = f.gamma;
  if (f.given("c_theta")) cfg.minrad.c_theta = f.c_theta;
  cfg.validate();
  return cfg;
}

int run_gen(const Flags& f, const std::string& domain, std::uint64_t sample) {
  RunConfig cfg = build_config("gen", f);
  if (cfg.sizes.size() != 1) throw ConfigError("gen takes a single --L");
  if (!f.given("out")) throw ConfigError("gen needs --out <file.hgf>");
  const int L = cfg.sizes.front();
  const DomainGrid grid = domain == "box" ? DomainGrid::box(L, cfg.spec.dim) : DomainGrid::torus(L, cfg.spec.dim);
  write_field_file(cfg.out, sample_field(cfg.spec, grid, sample));
  std::cout << "wrote " << cfg.out << " (" << domain << ", L = " << L << ", d = " << cfg.spec.dim << ")\n";
  return 0;
}

int run_command(const std::string& command, const Flags& f) {
  const RunConfig cfg = build_config(command, f);
  const ExperimentResult res = run_experiment(cfg);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);

  const fs::path csv = dir / (command + ".csv");
  write_csv_file(csv.string(), res.header, res.records);
  const fs::path summary = dir / (command + ".json");
  write_file(summary, res.summary.dump(2) + "\n");
  const std::string config_text = serialize(cfg);
  const fs::path config_path = dir / (command + ".config");
  write_file(config_path, config_text);

  json manifest;
  manifest["command"] = command;
  manifest["config"] = config_text;
  manifest["config_file"] = config_path.filename().string();
  manifest["input_hash"] = blob_hash(config_text);
  manifest["seeds"] = {{"base", cfg.spec.seed}, {"rule", "splitmix64(base, sample index, stream)"}};
  manifest["outputs"] = {{csv.filename().string(), blob_hash(read_file(csv))},
                         {summary.filename().string(), blob_hash(read_file(summary))}};
  if (command == "expand") {
    const SignChoice& s = expansion_sign();
    manifest["sign_convention"] = {{"sign", s.sign}, {"error_minus", s.error_minus}, {"error_plus", s.error_plus}};
  }
  write_file(dir / (command + ".manifest.json"), manifest.dump(2) + "\n");

  for (const Check& c : res.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << command << ' ' << c.name << " value=" << format_number(c.value)
              << " threshold=" << format_number(c.threshold) << '\n';
  std::cout << res.records.size() << " records, " << res.failed_samples << " failed samples -> " << csv.string() << '\n';
  return 0;
}

int run_report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("no such directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".json" && name.find(".manifest.") == std::string::npos) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no summaries in " + dir);
  std::size_t total = 0, failed = 0;
  for (const fs::path& p : files) {
    const json s = json::parse(read_file(p));
    if (!s.contains("checks")) continue;
    for (const json& c : s["checks"]) {
      const bool ok = c["passed"].get<bool>();
      std::cout << (ok ? "PASS " : "FAIL ") << s["experiment"].get<std::string>() << ' ' << c["name"].get<std::string>()
                << " value=" << format_number(c["value"].get<double>())
                << " threshold=" << format_number(c["threshold"].get<double>()) << '\n';
      ++total;
      failed += !ok;
    }
  }
  std::cout << total - failed << "/" << total << " checks passed\n";
  return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homlab: random conductance homogenization laboratory"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Flags>> flags;
  std::map<CLI::App*, std::pair<std::string, Flags*>> subs;

  auto* gen = app.add_subcommand("gen", "sample a coefficient field and write it to an .hgf file");
  flags.push_back(std::make_unique<Flags>());
  add_flags(gen, *flags.back(), false);
  std::string domain = "torus";
  std::uint64_t sample = 0;
  gen->add_option("--domain", domain, "torus or box")->check(CLI::IsMember({"torus", "box"}));
  gen->add_option("--sample", sample, "sample index");
  subs[gen] = {"gen", flags.back().get()};

  for (const std::string& name : experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    flags.push_back(std::make_unique<Flags>());
    add_flags(sub, *flags.back(), true);
    subs[sub] = {name, flags.back().get()};
  }

  auto* report = app.add_subcommand("report", "collect checks from JSON summaries; exit 3 on any failure");
  std::string report_dir = "out";
  report->add_option("--dir", report_dir, "directory with experiment outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (report->parsed()) return run_report(report_dir);
    for (const auto& [sub, entry] : subs) {
      if (!sub->parsed()) continue;
      if (entry.first == "gen") return run_gen(*entry.second, domain, sample);
      return run_command(entry.first, *entry.second);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
