// qcoral: dataset generation, experiment runs, result tables, self test.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "property_checks.hpp"
#include "qcoral/qcoral.hpp"

using namespace qcoral;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::data: return kExitData;
    case ErrorKind::numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

struct GenArgs {
  std::string kind;
  std::optional<unsigned long long> seed;
  std::optional<int> samples;
  std::string out;
};

struct RunArgs {
  std::vector<std::string> configs;
  std::vector<unsigned long long> seeds;
  int jobs = 1;
  std::string out;
};

struct TableArgs {
  std::string dir;
  std::string format = "markdown";
  std::string out;
  std::string projections;
};

int cmd_gen(const GenArgs& a) {
  const DatasetKind kind = parse_dataset_kind(a.kind);
  if (!is_synthetic(kind)) throw ConfigError("cli", "gen only produces synthetic kinds d1, d2, d3");
  DatasetSpec spec = default_spec(kind, a.seed.value_or(1));
  if (a.samples) spec.sample_count = *a.samples;
  spec.validate();
  const fs::path out = a.out.empty() ? fs::path(std::string(to_string(kind)) + ".csv") : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_csv(generate_synthetic_raw(spec), out);
  std::cout << out.string() << '\n';
  return 0;
}

std::string result_name(const ExperimentConfig& c) {
  std::string task = c.task_name();
  std::replace(task.begin(), task.end(), '>', '_');
  task.erase(std::remove(task.begin(), task.end(), '-'), task.end());
  return task + "_" + to_string(c.method) + "_s" + std::to_string(c.optimizer.seed) + ".json";
}

int cmd_run(const RunArgs& a) {
  std::vector<ExperimentConfig> jobs;
  for (const auto& path : a.configs) {
    const ExperimentConfig base = load_config(path);
    if (a.seeds.empty()) {
      jobs.push_back(base);
    } else {
      for (auto s : a.seeds) {
        ExperimentConfig c = base;
        apply_seed(c, s);
        jobs.push_back(c);
      }
    }
  }
  // A single job may write to an explicit .json path; batches go to a directory.
  const bool single_file = jobs.size() == 1 && fs::path(a.out).extension() == ".json";
  const fs::path out_dir = a.out.empty() ? fs::path("results") : fs::path(a.out);
  auto destination = [&](const ExperimentConfig& c) -> fs::path {
    if (single_file) return out_dir;
    if (!c.output_path.empty() && jobs.size() == 1 && a.out.empty()) return c.output_path;
    return out_dir / result_name(c);
  };

  std::atomic<std::size_t> next{0};
  std::mutex io;
  std::optional<Error> first_error;
  std::exception_ptr unexpected;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const RunResult r = run_experiment(jobs[i]);
        const fs::path dest = destination(jobs[i]);
        write_result(r, dest);
        std::lock_guard lock(io);
        std::cout << dest.string() << " accuracy " << r.accuracy << '\n';
      } catch (const Error& e) {
        std::lock_guard lock(io);
        std::cerr << "qcoral run: " << jobs[i].task_name() << " " << to_string(jobs[i].method) << ": " << e.what()
                  << '\n';
        if (!first_error) first_error = e;
      } catch (...) {
        std::lock_guard lock(io);
        if (!unexpected) unexpected = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(a.jobs, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (unexpected) std::rethrow_exception(unexpected);
  return first_error ? exit_code(first_error->kind()) : 0;
}

int cmd_table(const TableArgs& a) {
  TableFormat f;
  if (a.format == "csv") {
    f = TableFormat::csv;
  } else if (a.format == "markdown") {
    f = TableFormat::markdown;
  } else {
    throw ConfigError("cli", "--format must be csv or markdown");
  }
  const Table t = collect_results(a.dir);
  for (const auto& w : t.warnings) std::cerr << "qcoral table: warning: " << w << '\n';
  const std::string grid = render_table(t, f);
  if (a.out.empty()) {
    std::cout << grid;
  } else {
    std::ofstream out(a.out);
    if (!(out << grid)) throw DataError("cli", "cannot write '" + a.out + "'");
  }
  const fs::path proj_dir = a.projections.empty() ? fs::path(a.dir) / "projections" : fs::path(a.projections);
  fs::create_directories(proj_dir);
  for (const auto& s : t.results) {
    std::ofstream out(proj_dir / (s.file.stem().string() + ".csv"));
    if (!(out << render_projection(s))) throw DataError("cli", "cannot write projections to " + proj_dir.string());
  }
  return 0;
}

int cmd_selftest(int trials) {
  bool ok = true;
  for (const auto& r : checks::run_all(trials)) {
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << " " << r.trials - r.failures << "/" << r.trials;
    if (!r.passed()) std::cout << "  " << r.first_failure;
    std::cout << '\n';
    ok = ok && r.passed();
  }
  return ok ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum CORAL domain adaptation experiments"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "write a synthetic dataset as CSV");
  g->add_option("kind", gen.kind, "d1, d2 or d3")->required();
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--samples", gen.samples, "sample count");
  g->add_option("--out", gen.out, "output CSV path");

  RunArgs run;
  auto* r = app.add_subcommand("run", "run experiments and write result files");
  r->add_option("--config", run.configs, "config file (repeatable)")->required();
  r->add_option("--seed", run.seeds, "override seeds; one run per seed per config");
  r->add_option("--jobs", run.jobs, "concurrent runs")->check(CLI::PositiveNumber);
  r->add_option("--out", run.out, "result directory, or a .json path for a single run");

  TableArgs table;
  auto* t = app.add_subcommand("table", "method x task accuracy grid from result files");
  t->add_option("dir", table.dir, "directory of result files")->required();
  t->add_option("--format", table.format, "csv or markdown");
  t->add_option("--out", table.out, "write the grid here instead of stdout");
  t->add_option("--projections", table.projections, "directory for per-result projection CSVs");

  int trials = checks::kDefaultTrials;
  auto* s = app.add_subcommand("selftest", "randomized invariant and oracle checks");
  s->add_option("--trials", trials, "trials per suite")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*r) return cmd_run(run);
    if (*t) return cmd_table(table);
    if (*s) return cmd_selftest(trials);
  } catch (const Error& e) {
    std::cerr << "qcoral: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "qcoral: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "qcoral: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
