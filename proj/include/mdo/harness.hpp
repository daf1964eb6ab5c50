#pragma once

// Experiment runner: document pools, reference pretraining, the RL loop for
// one strategy, the discount-factor sweep, and metrics persistence.

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdo/config.hpp"
#include "mdo/optimizer.hpp"
#include "mdo/policy.hpp"
#include "mdo/ppo.hpp"
#include "mdo/rewards.hpp"

namespace mdo {

inline constexpr std::array<std::string_view, 14> kMetricsColumns = {
    "iteration",   "coherence", "consistency", "fluency",   "relevance",
    "overall",     "min_dim",   "mean_length", "coverage",  "mean_kl",
    "clip_loss",   "value_loss", "entropy",    "total_loss"};

struct MetricsRow {
  int iteration = 0;
  DimScores means;
  double overall = 0.0;      // mean of the four dimension means
  double min_dim = 0.0;      // mean over eval documents of the per-document lowest score
  double mean_length = 0.0;
  double coverage = 0.0;
  double mean_kl = 0.0;      // per-token KL(policy || reference) on greedy eval episodes
  LossBreakdown loss;        // from the most recent update; zero before the first
};

std::string metrics_csv_header();
std::string format_metrics_row(const MetricsRow& row);
/// Throws ParseError naming the file and line for malformed content.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);

using DocumentPool = std::vector<std::shared_ptr<const Document>>;

struct DocumentSets {
  DocumentPool train;
  DocumentPool eval;  // never equal to any training document
};

DocumentSets make_document_sets(const TrainConfig& cfg);

PolicyShape policy_shape(const TrainConfig& cfg);

/// Supervised pretraining of the reference on the training pool.
PretrainResult pretrain_reference(const TrainConfig& cfg, const DocumentSets& docs);

/// Greedy decoding over the eval set; parameters are only read.
MetricsRow evaluate_policy(const PolicyParams& policy, const PolicyParams& reference,
                           const DocumentPool& eval_docs, int max_summary_len, int iteration,
                           const LossBreakdown& loss = {});

struct TrainingResult {
  std::vector<MetricsRow> rows;
  PolicyParams reference;
  PolicyParams policy;
  OptimizerState optimizer;
};

/// Progress callback invoked after each evaluation row.
using ProgressFn = std::function<void(const MetricsRow&)>;

/// RL training in memory. When reference is null it is pretrained (or loaded
/// from cfg.init_checkpoint).
TrainingResult train(const TrainConfig& cfg, const PolicyParams* reference = nullptr,
                     const ProgressFn& progress = {});

/// train() plus files in cfg.output_dir: metrics.csv, checkpoint.json,
/// reference.json and the resolved config.json.
TrainingResult run_training(const TrainConfig& cfg, const ProgressFn& progress = {});

struct SweepRow {
  double gamma = 0.0;
  double mean_length = 0.0;
  DimScores means;
  MetricsRow initial;  // iteration-0 evaluation
};

/// One run per gamma from a shared reference; writes sweep.csv and a
/// gamma_<value>/ run directory per cell under cfg.output_dir when write_files.
std::vector<SweepRow> gamma_sweep(const TrainConfig& cfg, std::span<const double> gammas,
                                  bool write_files = true, const ProgressFn& progress = {});

std::string sweep_csv(std::span<const SweepRow> rows);

// -- comparison reports -------------------------------------------------------

struct ReportRow {
  std::string label;
  DimScores means;
  double overall = 0.0;
  double min_dim = 0.0;
  double spread = 0.0;  // max - min of the four dimension means
  double mean_length = 0.0;
  double coverage = 0.0;
};

/// Summary of the final row of a metrics stream.
ReportRow summarize_run(std::string label, std::span<const MetricsRow> rows);

/// One row per metrics file; the label is the file's parent directory name
/// (or the file stem for files named other than metrics.csv).
std::vector<ReportRow> build_report(std::span<const std::filesystem::path> files);

std::string report_text(std::span<const ReportRow> rows);
std::string report_csv(std::span<const ReportRow> rows);

}  // namespace mdo
