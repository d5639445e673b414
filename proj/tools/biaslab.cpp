// biaslab command-line front end.
//
// Exit codes: 0 success, 2 validation/usage, 3 analysis failure, 4 I/O.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "biaslab/catalog.hpp"

namespace fs = std::filesystem;
using namespace biaslab;

namespace {

constexpr int kOk = 0, kValidation = 2, kAnalysis = 3, kIo = 4;

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::Validation:
    case ErrorKind::Parameter:
    case ErrorKind::Lookup: return kValidation;
    default: return kAnalysis;
  }
}

std::optional<std::uint64_t> seed_from(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("BIASLAB_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::Validation, std::string("BIASLAB_SEED is not an unsigned integer: '") + env + "'");
  }
  return std::nullopt;
}

void write_file(const fs::path& path, const std::string& body) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << body;
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const std::string& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Validation, path + ": " + e.what());
  }
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out = "biaslab-out";
  std::string format = "csv";
  unsigned threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed (falls back to BIASLAB_SEED, then the config)");
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--format", c.format, "Default format for outputs without one")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads for Monte Carlo work")->check(CLI::Range(1u, 1024u))->capture_default_str();
}

int cmd_run(const std::string& config_path, const std::string& catalog_id, const Common& c) {
  json j = config_path.empty() ? catalog_json(catalog_id) : parse_json_file(config_path);
  ScenarioConfig cfg = config_from_json(j);
  if (const auto s = seed_from(c.seed)) cfg.seed = *s;
  RunOptions opt;
  opt.threads = c.threads;
  opt.default_format = c.format;
  const ScenarioRun run = run_scenario(cfg, opt);
  for (const auto& [path, body] : run.files) write_file(fs::path(c.out) / path, body);
  std::cout << run.text;
  for (const auto& [path, body] : run.files) std::cout << "wrote " << (fs::path(c.out) / path).string() << "\n";
  if (!run.analyses.empty() && run.n_failed() == run.analyses.size()) {
    std::cerr << "biaslab: all analyses failed\n";
    return kAnalysis;
  }
  return kOk;
}

int cmd_catalog(const std::string& show) {
  if (!show.empty()) {
    std::cout << catalog_json(show).dump(2) << "\n";
    return kOk;
  }
  for (const auto& e : catalog()) std::cout << e.id << "  " << e.title << "\n";
  return kOk;
}

int cmd_fit(const std::string& csv, const std::string& formula, const std::string& family_name, const std::string& format,
            const std::string& out) {
  Family family;
  try {
    family = family_from_string(family_name);
  } catch (const Error& e) {
    fail(ErrorKind::Validation, e.what());
  }
  Formula f;
  try {
    f = Formula::parse(formula);
  } catch (const Error& e) {
    fail(ErrorKind::Validation, e.what());
  }
  const Dataset d = read_csv_file(csv);
  const FitResult r = fit(d, f, family);
  if (format == "json") std::cout << fit_to_json(r).dump(2) << "\n";
  else std::cout << detail::fit_table(r);
  if (!out.empty()) write_file(out, fit_to_json(r).dump(2) + "\n");
  return kOk;
}

int cmd_mc(const std::string& template_path, const Common& c, std::optional<std::size_t> reps) {
  McTemplate t = template_from_json(parse_json_file(template_path), "template");
  if (const auto s = seed_from(c.seed)) t.seed = *s;
  if (reps) t.reps = *reps;
  const McResult r = run_mc(t, c.threads);
  write_file(fs::path(c.out) / "replicates.csv", mc_csv(r));
  json summaries = json::object();
  std::string text = detail::kSummaryHeader;
  for (const auto& s : r.series) {
    try {
      const McSummary m = summarize_series(r, s);
      summaries[s] = mc_summary_to_json(m);
      text += detail::mc_summary_line(s, m);
    } catch (const Error& e) {
      summaries[s] = json{{"error", e.what()}};
      text += detail::pad(s, 16) + "error: " + e.what() + "\n";
    }
  }
  const json report{{"seed", t.seed}, {"reps", t.reps}, {"failed", r.n_failed()}, {"hash", r.template_hash}, {"summaries", summaries}};
  write_file(fs::path(c.out) / "summary.json", report.dump(2) + "\n");
  std::cout << r.records.size() << " replicates, " << r.n_failed() << " with failures (seed " << t.seed << ")\n" << text;
  std::cout << "wrote " << (fs::path(c.out) / "replicates.csv").string() << "\nwrote " << (fs::path(c.out) / "summary.json").string() << "\n";
  return r.n_failed() == r.records.size() ? kAnalysis : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biaslab: simulate and analyze specification biases in regression models"};
  app.require_subcommand(1);

  Common run_opts, mc_opts;
  std::string config_path, catalog_id;
  auto* run = app.add_subcommand("run", "Run a scenario config or a catalog entry");
  auto* cfg_opt = run->add_option("--config", config_path, "Scenario config (JSON)");
  auto* cat_opt = run->add_option("--catalog", catalog_id, "Built-in catalog id");
  cfg_opt->excludes(cat_opt);
  add_common(run, run_opts);

  std::string show;
  auto* cat = app.add_subcommand("catalog", "List built-in scenarios");
  cat->add_option("--show", show, "Print the config of one entry");

  std::string csv, formula, family = "gaussian", fit_format = "text", fit_out;
  auto* fitc = app.add_subcommand("fit", "Fit a model to a CSV file");
  fitc->add_option("csv", csv, "Input CSV (header row, empty field = missing)")->required();
  fitc->add_option("formula", formula, "Model formula, e.g. 'Y ~ X + Z + X:Z + X^2'")->required();
  fitc->add_option("--family", family, "gaussian, binomial or ordered")->capture_default_str();
  fitc->add_option("--format", fit_format, "Printed format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  fitc->add_option("--out", fit_out, "Also write the fit as JSON to this file");

  std::string template_path;
  std::optional<std::size_t> reps;
  auto* mc = app.add_subcommand("mc", "Run a Monte Carlo template");
  mc->add_option("--config", template_path, "Monte Carlo template (JSON)")->required();
  mc->add_option("--reps", reps, "Override the replicate count");
  add_common(mc, mc_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) {
      if (config_path.empty() == catalog_id.empty()) {
        std::cerr << "biaslab run: give exactly one of --config or --catalog\n";
        return kValidation;
      }
      return cmd_run(config_path, catalog_id, run_opts);
    }
    if (*cat) return cmd_catalog(show);
    if (*fitc) return cmd_fit(csv, formula, family, fit_format, fit_out);
    if (*mc) return cmd_mc(template_path, mc_opts, reps);
  } catch (const Error& e) {
    std::cerr << "biaslab: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "biaslab: " << e.what() << "\n";
    return kAnalysis;
  }
  return kOk;
}
