#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdo/checkpoint.hpp"
#include "mdo/config.hpp"
#include "mdo/errors.hpp"
#include "mdo/harness.hpp"
#include "mdo/kernels.hpp"
#include "mdo/rewards.hpp"
#include "mdo/selftest.hpp"

namespace {

using mdo::TrainConfig;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Override a config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "Random seed (overrides config and MDO_SEED)");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory");
}

// Precedence: defaults < config file < MDO_SEED < --set < explicit flags.
TrainConfig resolve_config(const CommonOptions& o) {
  TrainConfig cfg;
  if (!o.config_path.empty()) cfg = mdo::load_config(o.config_path);
  mdo::apply_env_overrides(cfg);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw mdo::ConfigError("--set expects key=value, got '" + kv + "'");
    mdo::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  cfg.validate();
  return cfg;
}

void print_row(const mdo::MetricsRow& r) {
  std::printf("iter %4d  coh %.3f  con %.3f  flu %.3f  rel %.3f  min %.3f  len %5.2f  kl %.4f\n",
              r.iteration, r.means.coherence, r.means.consistency, r.means.fluency,
              r.means.relevance, r.min_dim, r.mean_length, r.mean_kl);
  std::fflush(stdout);
}

std::vector<mdo::Token> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mdo::ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    const auto j = nlohmann::json::parse(text);
    const auto& arr = j.is_object() ? j.at("tokens") : j;
    return arr.get<std::vector<mdo::Token>>();
  }
  std::vector<mdo::Token> out;
  std::istringstream words(text);
  long long t = 0;
  while (words >> t) out.push_back(static_cast<mdo::Token>(t));
  if (!words.eof()) throw mdo::ParseError(path + ": expected whitespace-separated integer tokens");
  return out;
}

int cmd_pretrain(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto docs = mdo::make_document_sets(cfg);
  const auto result = mdo::pretrain_reference(cfg, docs);
  std::printf("initial loss %.6f\n", result.initial_loss);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    std::printf("epoch %3zu loss %.6f\n", e + 1, result.epoch_losses[e]);
  }
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = (std::filesystem::path(cfg.output_dir) / "reference.json").string();
  mdo::save_checkpoint(path, {result.params, std::nullopt});
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_train(const CommonOptions& o, const std::string& strategy, std::optional<int> iterations) {
  auto cfg = resolve_config(o);
  if (!strategy.empty()) cfg.strategy = mdo::strategy_from_string(strategy);
  if (iterations) cfg.iterations = *iterations;
  cfg.validate();
  std::printf("strategy %s  seed %llu  kernels %s\n", std::string(mdo::strategy_name(cfg.strategy)).c_str(),
              static_cast<unsigned long long>(cfg.seed),
              std::string(mdo::kernels::isa_name(mdo::kernels::active().isa)).c_str());
  mdo::run_training(cfg, print_row);
  std::printf("wrote %s/metrics.csv\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::vector<double>& gammas, const std::string& strategy,
              std::optional<int> iterations) {
  auto cfg = resolve_config(o);
  if (!strategy.empty()) cfg.strategy = mdo::strategy_from_string(strategy);
  if (iterations) cfg.iterations = *iterations;
  cfg.validate();
  const auto rows = mdo::gamma_sweep(cfg, gammas, true, print_row);
  std::fputs(mdo::sweep_csv(rows).c_str(), stdout);
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& csv_out) {
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  const auto rows = mdo::build_report(paths);
  std::fputs(mdo::report_text(rows).c_str(), stdout);
  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    if (!out) throw mdo::ConfigError("cannot write " + csv_out);
    out << mdo::report_csv(rows);
  }
  return 0;
}

int cmd_score(const std::string& doc_path, const std::string& summary_path) {
  const mdo::Vocabulary vocab;
  const auto doc = mdo::Document::from_tokens(read_tokens(doc_path), vocab);
  const auto summary = read_tokens(summary_path);
  for (const auto t : summary) {
    if (!vocab.contains(t)) throw mdo::ConfigError("summary token out of vocabulary: " + std::to_string(t));
  }
  const auto s = mdo::score_dimensions(doc, summary);
  nlohmann::json j;
  for (std::size_t k = 0; k < mdo::kNumDims; ++k) j[std::string(mdo::kDimNames[k])] = s[static_cast<mdo::Dim>(k)];
  j["overall"] = s.mean();
  j["min_dim"] = std::string(mdo::dim_name(mdo::select_min_dimension(s).first));
  j["length"] = mdo::summary_length(summary);
  j["coverage"] = mdo::coverage(doc, summary);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_selftest(std::uint64_t seed) {
  int failed = 0;
  for (const auto& c : mdo::run_selftest(seed)) {
    std::printf("%s  %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.detail.empty() ? "" : "  ", c.detail.c_str());
    failed += c.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-dimensional PPO training on a toy summarization task"};
  app.require_subcommand(1);
  std::string simd;
  app.add_option("--simd", simd, "Kernel variant: scalar or avx2 (default: best available)");

  CommonOptions pre_opts, train_opts, sweep_opts;
  std::string train_strategy, sweep_strategy, csv_out, doc_path, summary_path;
  std::optional<int> train_iters, sweep_iters;
  std::vector<double> gammas{0.5, 0.7, 0.9, 0.99};
  std::vector<std::string> report_files;
  std::uint64_t selftest_seed = 0;

  auto* pre = app.add_subcommand("pretrain", "Pretrain the reference policy and save it");
  add_common(pre, pre_opts);

  auto* tr = app.add_subcommand("train", "Run RL training for one strategy");
  add_common(tr, train_opts);
  tr->add_option("-s,--strategy", train_strategy, "min, pro, sum-r or sum-l");
  tr->add_option("-n,--iterations", train_iters, "Number of RL iterations");

  auto* sw = app.add_subcommand("sweep", "Train once per discount factor");
  add_common(sw, sweep_opts);
  sw->add_option("-g,--gammas", gammas, "Discount factors")->delimiter(',');
  sw->add_option("-s,--strategy", sweep_strategy, "min, pro, sum-r or sum-l");
  sw->add_option("-n,--iterations", sweep_iters, "Number of RL iterations");

  auto* rep = app.add_subcommand("report", "Compare the final rows of metrics files");
  rep->add_option("files", report_files, "metrics.csv files")->required()->check(CLI::ExistingFile);
  rep->add_option("--csv", csv_out, "Also write the table as CSV");

  auto* sc = app.add_subcommand("score", "Score a summary against a document");
  sc->add_option("document", doc_path, "Document tokens (JSON array, {\"tokens\": [...]}, or whitespace list)")
      ->required()
      ->check(CLI::ExistingFile);
  sc->add_option("summary", summary_path, "Summary tokens, same formats")->required()->check(CLI::ExistingFile);

  auto* st = app.add_subcommand("selftest", "Run the built-in invariant checks");
  st->add_option("--seed", selftest_seed, "Seed for the randomized checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!simd.empty()) {
      const auto isa = mdo::kernels::parse_isa(simd);
      if (!isa) throw mdo::ConfigError("unknown --simd value '" + simd + "'");
      mdo::kernels::select(*isa);
    }
    if (*pre) return cmd_pretrain(pre_opts);
    if (*tr) return cmd_train(train_opts, train_strategy, train_iters);
    if (*sw) return cmd_sweep(sweep_opts, gammas, sweep_strategy, sweep_iters);
    if (*rep) return cmd_report(report_files, csv_out);
    if (*sc) return cmd_score(doc_path, summary_path);
    if (*st) return cmd_selftest(selftest_seed);
  } catch (const mdo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
