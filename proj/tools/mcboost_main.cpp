// mcboost: configure and run multicalibration boosting experiments, verify
// recorded traces against the convergence guarantees, fit per-round decay
// rates, sweep seeds, and export plot-ready series.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "mcboost/data.hpp"
#include "mcboost/dynamics.hpp"
#include "mcboost/metrics.hpp"
#include "mcboost/trees.hpp"
#include "mcboost/verify.hpp"

namespace fs = std::filesystem;
using namespace mcboost;

namespace {

struct CliOptions {
  std::string dataset = "builtin:synth";
  std::string dataset_id = "col:y";
  std::string rule = "unit";
  std::string oracle = "trees";
  double eta = 1.0;
  std::size_t rounds = 20;
  std::uint64_t seed = 0;
  double train_frac = 0.8;
  bool no_split = false;
  std::string out_dir = "out";
  std::string class_config_path;
  double rank_tol = kDefaultRankTol;
  std::size_t n_trees = 100;
  double learn_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_leaf = 1;
  std::string init = "rf";
  std::size_t rf_trees = 100;
  std::size_t rf_depth = 5;
  double gamma_mix = 0.5;
  std::string strong_pred = "rf";
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--dataset", opt.dataset,
                  "CSV path, builtin:toy-mean, or builtin:synth[:n:d]");
  cmd->add_option("--dataset-id", opt.dataset_id,
                  "target construction: adult|german|communities|california|diabetes|col:<name>");
  cmd->add_option("--rule", opt.rule, "unit|relaxed|adaptive|hybrid")
      ->check(CLI::IsMember({"unit", "relaxed", "adaptive", "hybrid"}));
  cmd->add_option("--oracle", opt.oracle, "exact|trees")
      ->check(CLI::IsMember({"exact", "trees"}));
  cmd->add_option("--eta", opt.eta, "shrinkage in (0,1]");
  cmd->add_option("--rounds", opt.rounds, "number of boosting rounds T");
  cmd->add_option("--seed", opt.seed, "seed for split / forest / synthetic data");
  cmd->add_option("--train-frac", opt.train_frac, "train fraction in (0,1)");
  cmd->add_flag("--no-split", opt.no_split, "train on all rows, no test series");
  cmd->add_option("--out-dir", opt.out_dir, "output directory");
  cmd->add_option("--class-config", opt.class_config_path,
                  "hypothesis class description file (exact oracle)");
  cmd->add_option("--rank-tol", opt.rank_tol, "relative rank threshold");
  cmd->add_option("--n-trees", opt.n_trees, "trees per boosting round");
  cmd->add_option("--learn-rate", opt.learn_rate, "inner boosting learning rate");
  cmd->add_option("--max-depth", opt.max_depth, "tree depth for the boosting oracle");
  cmd->add_option("--min-leaf", opt.min_leaf, "minimum rows per leaf");
  cmd->add_option("--init", opt.init, "initial predictor: rf|zeros|file:<path>");
  cmd->add_option("--rf-trees", opt.rf_trees, "initial forest size");
  cmd->add_option("--rf-depth", opt.rf_depth, "initial forest depth");
  cmd->add_option("--gamma-mix", opt.gamma_mix, "hybrid mixing weight");
  cmd->add_option("--strong-pred", opt.strong_pred,
                  "hybrid strong predictor: perfect|rf|file:<path>");
  cmd->set_config("--config", "", "plain-text key-value config file with sections");
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractViolation("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Vector read_prediction_file(const std::string& path, std::size_t expected) {
  std::istringstream in(read_file(path));
  Vector out;
  double v;
  while (in >> v) out.push_back(v);
  if (out.size() != expected) {
    throw ContractViolation("prediction file " + path + " has " +
                            std::to_string(out.size()) + " values, expected " +
                            std::to_string(expected));
  }
  return out;
}

struct LoadedData {
  data::Dataset train;
  std::optional<data::Dataset> test;
  std::string dataset_id;
  std::string dataset_path;
  std::optional<Vector> builtin_f0;  // toy instances carry their own start
};

LoadedData load_dataset(const CliOptions& opt) {
  LoadedData out;
  out.dataset_id = opt.dataset_id;
  out.dataset_path = opt.dataset;
  data::Dataset full;
  bool force_no_split = false;
  if (opt.dataset == "builtin:toy-mean") {
    const data::ToyInstance toy = data::toy_mean_instance();
    full.x = toy.x;
    full.y = toy.y;
    full.feature_names = {"x0"};
    full.provenance = "builtin:toy-mean";
    out.dataset_id = "toy-mean";
    out.builtin_f0 = toy.f0;
    force_no_split = true;
  } else if (opt.dataset.rfind("builtin:synth", 0) == 0) {
    std::size_t n = 200, d = 4;
    const std::string rest = opt.dataset.substr(std::string("builtin:synth").size());
    if (!rest.empty()) {
      if (std::sscanf(rest.c_str(), ":%zu:%zu", &n, &d) != 2) {
        throw ContractViolation("expected builtin:synth[:n:d], got '" + opt.dataset + "'");
      }
    }
    full = data::make_synthetic(opt.seed, n, d);
    out.dataset_id = "synthetic";
  } else {
    const data::RawTable table = data::load_csv(opt.dataset);
    const data::TargetResult target = data::make_target(table, opt.dataset_id);
    data::PrepOptions prep;
    prep.train_frac = opt.train_frac;
    prep.seed = opt.seed;
    full = data::preprocess(target.features, target.target, prep);
  }
  if (opt.no_split || force_no_split) {
    out.train = std::move(full);
  } else {
    auto [train, test] = data::split(full, opt.train_frac, opt.seed);
    out.train = std::move(train);
    out.test = std::move(test);
  }
  return out;
}

hypothesis::FactorizedClass resolve_class(const CliOptions& opt, const LoadedData& data) {
  if (!opt.class_config_path.empty()) {
    return hypothesis::class_from_config(read_file(opt.class_config_path));
  }
  if (data.dataset_id == "toy-mean") {
    return hypothesis::FactorizedClass({hypothesis::FeatureMap::constant(1.0)},
                                       {hypothesis::LinkMap::constant(1.0)});
  }
  return hypothesis::intercept_slope_class(data.train.x.cols());
}

struct PreparedRun {
  dynamics::UpdateRule rule;
  dynamics::OracleMode mode;
  Vector f0;
  dynamics::RunOptions options;
};

PreparedRun prepare_run(const CliOptions& opt, const LoadedData& data) {
  PreparedRun prep;

  if (opt.oracle == "exact") {
    hypothesis::FactorizedClass cls = resolve_class(opt, data);
    if (cls.width() > data.train.y.size()) {
      std::cerr << "warning: class width p=" << cls.width() << " exceeds n="
                << data.train.y.size() << "; the projection may become identity-like\n";
    }
    prep.mode = dynamics::ExactProjection{std::move(cls), opt.rank_tol};
  } else {
    prep.mode =
        dynamics::BoostedTrees{opt.n_trees, opt.learn_rate, opt.max_depth, opt.min_leaf};
  }

  Vector f0_test;
  Vector strong_test;
  const bool with_test = data.test.has_value();
  if (data.builtin_f0 && opt.init == "rf") {
    prep.f0 = *data.builtin_f0;  // the instance defines its own start
  } else if (opt.init == "zeros") {
    prep.f0.assign(data.train.y.size(), 0.0);
    if (with_test) f0_test.assign(data.test->y.size(), 0.0);
  } else if (opt.init == "rf") {
    const trees::TreeEnsemble forest =
        trees::rf_fit(data.train.x, data.train.y, opt.rf_trees, opt.rf_depth, opt.seed);
    prep.f0 = trees::predict(forest, data.train.x);
    if (with_test) f0_test = trees::predict(forest, data.test->x);
  } else if (opt.init.rfind("file:", 0) == 0) {
    prep.f0 = read_prediction_file(opt.init.substr(5), data.train.y.size());
    if (with_test) {
      throw ContractViolation("--init file:<path> requires --no-split");
    }
  } else {
    throw ContractViolation("unknown --init '" + opt.init + "'");
  }

  if (opt.rule == "unit") {
    prep.rule = dynamics::UnitRule{};
  } else if (opt.rule == "relaxed") {
    prep.rule = dynamics::RelaxedRule{};
  } else if (opt.rule == "adaptive") {
    prep.rule = dynamics::AdaptiveRule{};
  } else {
    Vector strong;
    if (opt.strong_pred == "perfect") {
      strong = data.train.y;
      if (with_test) strong_test = data.test->y;
    } else if (opt.strong_pred == "rf") {
      const trees::TreeEnsemble forest = trees::rf_fit(
          data.train.x, data.train.y, opt.rf_trees, opt.rf_depth, mix_seed(opt.seed, 1));
      strong = trees::predict(forest, data.train.x);
      if (with_test) strong_test = trees::predict(forest, data.test->x);
    } else if (opt.strong_pred.rfind("file:", 0) == 0) {
      strong = read_prediction_file(opt.strong_pred.substr(5), data.train.y.size());
      if (with_test) throw ContractViolation("--strong-pred file:<path> requires --no-split");
    } else {
      throw ContractViolation("unknown --strong-pred '" + opt.strong_pred + "'");
    }
    const double upper = 2.0 * opt.gamma_mix / ((1.0 + opt.gamma_mix) * (1.0 + opt.gamma_mix));
    if (opt.eta >= upper) {
      std::cerr << "warning: eta=" << opt.eta << " is outside the hybrid guarantee range (0, "
                << upper << ")\n";
      prep.options.config.notes = "hybrid eta outside guarantee range";
    }
    prep.rule = dynamics::HybridRule{opt.gamma_mix, std::move(strong)};
  }

  if (with_test) {
    dynamics::RunOptions::TestSet ts;
    ts.x = data.test->x;
    ts.y = data.test->y;
    ts.f0 = std::move(f0_test);
    ts.strong_pred = std::move(strong_test);
    prep.options.test = std::move(ts);
  }
  prep.options.config.dataset_id = data.dataset_id;
  prep.options.config.dataset_path = data.dataset_path;
  prep.options.config.seed = opt.seed;
  prep.options.config.init = opt.init;
  return prep;
}

void print_round_table(const dynamics::Trace& trace) {
  std::printf("%4s %10s %12s %12s %12s %12s\n", "t", "w_t", "gap", "train_mse", "mce_l2",
              "bound");
  for (const auto& rec : trace.rounds) {
    std::printf("%4zu %10.6f %12.5e %12.5e %12.5e ", rec.t, rec.weight_used, rec.gap,
                rec.train_mse, rec.mce_l2);
    if (rec.mce_bound) {
      std::printf("%12.5e\n", *rec.mce_bound);
    } else {
      std::printf("%12s\n", "-");
    }
  }
}

dynamics::Trace execute_run(const CliOptions& opt) {
  if (opt.rounds == 0) throw ContractViolation("--rounds must be at least 1");
  const LoadedData data = load_dataset(opt);
  PreparedRun prep = prepare_run(opt, data);
  return dynamics::run(data.train.x, data.train.y, prep.f0, prep.rule, prep.mode, opt.eta,
                       opt.rounds, prep.options);
}

int cmd_run(const CliOptions& opt) {
  const dynamics::Trace trace = execute_run(opt);
  write_file_atomic(fs::path(opt.out_dir) / "trace.json", dynamics::trace_to_json(trace));
  write_file_atomic(fs::path(opt.out_dir) / "trace.csv", dynamics::trace_to_csv(trace));
  print_round_table(trace);
  std::cout << "trace written to " << (fs::path(opt.out_dir) / "trace.json").string() << "\n";
  return 0;
}

int cmd_verify(const std::string& trace_path, const std::string& out_dir) {
  dynamics::Trace trace;
  try {
    trace = dynamics::trace_from_json(read_file(trace_path));
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const verify::VerificationReport report = verify::check_trace(trace);
  if (!out_dir.empty()) {
    write_file_atomic(fs::path(out_dir) / "report.json", verify::report_to_json(report));
    write_file_atomic(fs::path(out_dir) / "report.txt", verify::report_to_text(report));
  }
  std::cout << verify::report_to_text(report);
  return report.overall_pass ? 0 : 1;
}

int cmd_rate_fit(const std::string& trace_path, long window_start, long window_end,
                 const std::string& out_dir) {
  const dynamics::Trace trace = dynamics::trace_from_json(read_file(trace_path));
  std::vector<double> gaps;
  for (std::size_t t = 0; t + 1 < trace.rounds.size(); ++t) {
    gaps.push_back(trace.rounds[t].gap);
  }
  std::size_t start, end;
  if ((window_start >= 0) != (window_end >= 0)) {
    throw ContractViolation("--window-start and --window-end must be given together");
  }
  if (window_start >= 0 && window_end >= 0) {
    start = static_cast<std::size_t>(window_start);
    end = static_cast<std::size_t>(window_end);
  } else {
    const auto [ok, window] = metrics::default_fit_window(gaps, norm2(trace.y));
    if (!ok) {
      throw ContractViolation("trace has fewer than 3 usable gaps; give --window-start/end");
    }
    start = window.first;
    end = window.second;
  }
  const metrics::RateFit fit = metrics::fit_log_linear(gaps, start, end);
  std::ostringstream json;
  json.precision(17);
  json << "{\n  \"slope\": " << fit.slope << ",\n  \"intercept\": " << fit.intercept
       << ",\n  \"r2\": " << fit.r2 << ",\n  \"kappa_hat\": " << fit.kappa_hat
       << ",\n  \"window\": [" << fit.window_start << ", " << fit.window_end << "]\n}\n";
  if (!out_dir.empty()) {
    write_file_atomic(fs::path(out_dir) / "ratefit.json", json.str());
  }
  std::printf("slope      %.8f\nkappa_hat  %.8f\nR^2        %.6f\nwindow     [%zu, %zu]\n",
              fit.slope, fit.kappa_hat, fit.r2, fit.window_start, fit.window_end);
  return 0;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      const std::uint64_t lo = std::stoull(part.substr(0, dash));
      const std::uint64_t hi = std::stoull(part.substr(dash + 1));
      require(lo <= hi, "bad seed range '" + part + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else if (!part.empty()) {
      seeds.push_back(std::stoull(part));
    }
  }
  require(!seeds.empty(), "--seeds yielded an empty list");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  require(uniq.size() == seeds.size(), "--seeds contains duplicates");
  return seeds;
}

int cmd_sweep(const CliOptions& base, const std::string& rules_text,
              const std::string& seeds_text, std::size_t jobs) {
  const std::vector<std::uint64_t> seeds = parse_seed_list(seeds_text);
  std::vector<std::string> rules;
  {
    std::stringstream ss(rules_text);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part.empty()) continue;
      require(part == "unit" || part == "relaxed" || part == "adaptive" || part == "hybrid",
              "unknown rule '" + part + "' in --rules");
      rules.push_back(part);
    }
  }
  require(!rules.empty(), "--rules yielded an empty list");

  struct Job {
    std::string rule;
    std::uint64_t seed;
    std::optional<dynamics::Trace> trace;
    std::string error;
  };
  std::vector<Job> tasks;
  for (const std::string& rule : rules) {
    for (std::uint64_t seed : seeds) tasks.push_back(Job{rule, seed, std::nullopt, ""});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      Job& job = tasks[i];
      CliOptions opt = base;
      opt.rule = job.rule;
      opt.seed = job.seed;
      try {
        job.trace = execute_run(opt);
      } catch (const std::exception& e) {
        job.error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::size_t failed = 0;
  for (const Job& job : tasks) {
    if (!job.trace) {
      ++failed;
      std::cerr << "seed " << job.seed << " rule " << job.rule << " failed: " << job.error
                << "\n";
      continue;
    }
    const fs::path dir =
        fs::path(base.out_dir) / job.rule / ("seed_" + std::to_string(job.seed));
    write_file_atomic(dir / "trace.json", dynamics::trace_to_json(*job.trace));
    write_file_atomic(dir / "trace.csv", dynamics::trace_to_csv(*job.trace));
  }
  if (failed == tasks.size()) {
    std::cerr << "error: every sweep run failed\n";
    return 1;
  }

  // aggregate: mean train/test MSE and MCE per round per rule, with the
  // optimal stopping round (argmin mean test MCE, falling back to train MCE
  // when no test series exists) marked per rule
  std::ostringstream agg;
  agg << "rule,round,mean_train_mse,mean_test_mse,mean_train_mce_l2,mean_test_mce_l2,"
         "optimal_round\n";
  agg.precision(17);
  for (const std::string& rule : rules) {
    std::size_t n_rounds = 0;
    for (const Job& job : tasks) {
      if (job.rule == rule && job.trace) n_rounds = job.trace->rounds.size();
    }
    if (n_rounds == 0) continue;
    std::vector<double> train_mse(n_rounds, 0.0), test_mse(n_rounds, 0.0);
    std::vector<double> train_mce(n_rounds, 0.0), test_mce(n_rounds, 0.0);
    std::size_t count = 0;
    bool has_test = true;
    for (const Job& job : tasks) {
      if (job.rule != rule || !job.trace) continue;
      ++count;
      has_test = has_test && job.trace->test.has_value();
      for (std::size_t t = 0; t < n_rounds; ++t) {
        train_mse[t] += job.trace->rounds[t].train_mse;
        train_mce[t] += job.trace->rounds[t].mce_l2;
        if (job.trace->test) {
          test_mse[t] += job.trace->test->mse[t];
          test_mce[t] += job.trace->test->mce_l2[t];
        }
      }
    }
    for (std::size_t t = 0; t < n_rounds; ++t) {
      train_mse[t] /= static_cast<double>(count);
      train_mce[t] /= static_cast<double>(count);
      if (has_test) {
        test_mse[t] /= static_cast<double>(count);
        test_mce[t] /= static_cast<double>(count);
      }
    }
    const std::vector<double>& stopping = has_test ? test_mce : train_mce;
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(stopping.begin(), stopping.end()) - stopping.begin());
    for (std::size_t t = 0; t < n_rounds; ++t) {
      agg << rule << "," << t << "," << train_mse[t] << ",";
      if (has_test) agg << test_mse[t];
      agg << "," << train_mce[t] << ",";
      if (has_test) agg << test_mce[t];
      agg << "," << (t == best ? 1 : 0) << "\n";
    }
  }
  write_file_atomic(fs::path(base.out_dir) / "aggregate.csv", agg.str());
  std::cout << "aggregate written to " << (fs::path(base.out_dir) / "aggregate.csv").string()
            << " (" << (tasks.size() - failed) << "/" << tasks.size() << " runs)\n";
  return 0;
}

int cmd_export_plot(const std::string& trace_path, const std::string& out_dir) {
  const dynamics::Trace trace = dynamics::trace_from_json(read_file(trace_path));
  std::ostringstream gap, mse, mce;
  gap.precision(17);
  mse.precision(17);
  mce.precision(17);
  gap << "round,gap,log10_gap\n";
  const bool has_test = trace.test.has_value();
  mse << (has_test ? "round,train_mse,test_mse\n" : "round,train_mse\n");
  mce << (has_test ? "round,train_mce_l2,train_mce_linf,test_mce_l2\n"
                   : "round,train_mce_l2,train_mce_linf\n");
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const auto& rec = trace.rounds[t];
    if (t + 1 < trace.rounds.size()) {
      gap << t << "," << rec.gap << ","
          << (rec.gap > 0 ? std::log10(rec.gap) : -std::numeric_limits<double>::infinity())
          << "\n";
    }
    mse << t << "," << rec.train_mse;
    if (has_test) mse << "," << trace.test->mse[t];
    mse << "\n";
    mce << t << "," << rec.mce_l2 << "," << rec.mce_linf;
    if (has_test) mce << "," << trace.test->mce_l2[t];
    mce << "\n";
  }
  write_file_atomic(fs::path(out_dir) / "plot_gap.csv", gap.str());
  write_file_atomic(fs::path(out_dir) / "plot_mse.csv", mse.str());
  write_file_atomic(fs::path(out_dir) / "plot_mce.csv", mce.str());
  std::cout << "plot series written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multicalibration gradient boosting: runs, verification, rate fits"};
  app.require_subcommand(1);

  CliOptions opt;

  CLI::App* run = app.add_subcommand("run", "run the dynamics and record a trace");
  add_common_options(run, opt);

  CLI::App* verify_cmd = app.add_subcommand("verify", "check a recorded trace");
  std::string trace_path;
  std::string verify_out;
  verify_cmd->add_option("trace", trace_path, "trace.json to verify")->required();
  verify_cmd->add_option("--out-dir", verify_out, "where to write report.json/report.txt");

  CLI::App* sweep = app.add_subcommand("sweep", "run several seeds and rules, aggregate");
  std::string rules_text = "unit,relaxed,adaptive";
  std::string seeds_text = "0-19";
  std::size_t jobs = 1;
  add_common_options(sweep, opt);
  sweep->add_option("--rules", rules_text, "comma-separated rules");
  sweep->add_option("--seeds", seeds_text, "comma list and/or lo-hi ranges");
  sweep->add_option("--jobs", jobs, "parallel runs");

  CLI::App* rate = app.add_subcommand("rate-fit", "log-linear decay fit of the gap series");
  std::string rate_trace;
  std::string rate_out;
  long window_start = -1, window_end = -1;
  rate->add_option("trace", rate_trace, "trace.json to fit")->required();
  rate->add_option("--window-start", window_start, "first round of the fit window");
  rate->add_option("--window-end", window_end, "last round of the fit window (inclusive)");
  rate->add_option("--out-dir", rate_out, "where to write ratefit.json");

  CLI::App* plot = app.add_subcommand("export-plot", "write plot-ready csv series");
  std::string plot_trace;
  std::string plot_out = "out";
  plot->add_option("trace", plot_trace, "trace.json to export")->required();
  plot->add_option("--out-dir", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (const char* env_seed = std::getenv("MCBOOST_SEED")) {
    opt.seed = std::strtoull(env_seed, nullptr, 10);
  }

  try {
    if (run->parsed()) return cmd_run(opt);
    if (verify_cmd->parsed()) return cmd_verify(trace_path, verify_out);
    if (sweep->parsed()) return cmd_sweep(opt, rules_text, seeds_text, jobs);
    if (rate->parsed()) return cmd_rate_fit(rate_trace, window_start, window_end, rate_out);
    if (plot->parsed()) return cmd_export_plot(plot_trace, plot_out);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
