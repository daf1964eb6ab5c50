#include "mdo/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mdo/checkpoint.hpp"
#include "mdo/errors.hpp"
#include "mdo/mdo.hpp"
#include "mdo/rollout.hpp"

namespace mdo {
namespace fs = std::filesystem;

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::string metrics_csv_header() {
  std::string out;
  for (std::size_t i = 0; i < kMetricsColumns.size(); ++i) {
    if (i) out += ',';
    out += kMetricsColumns[i];
  }
  return out;
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string out = std::to_string(r.iteration);
  for (const double x : {r.means.coherence, r.means.consistency, r.means.fluency, r.means.relevance,
                         r.overall, r.min_dim, r.mean_length, r.coverage, r.mean_kl,
                         r.loss.clip_loss, r.loss.value_loss, r.loss.entropy, r.loss.total}) {
    out += ',';
    out += fmt_double(x);
  }
  return out;
}

void write_metrics_csv(const fs::path& path, std::span<const MetricsRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics file '" + path.string() + "'");
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) out << format_metrics_row(r) << '\n';
  if (!out) throw std::runtime_error("failed writing metrics file '" + path.string() + "'");
}

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open metrics file '" + path.string() + "'");
  auto fail = [&](std::size_t line_no, const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(line_no, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != metrics_csv_header()) fail(line_no, "unexpected header");

  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != kMetricsColumns.size()) {
      fail(line_no, "expected " + std::to_string(kMetricsColumns.size()) + " fields, got " +
                        std::to_string(cells.size()));
    }
    MetricsRow r;
    if (!parse_number(cells[0], r.iteration)) fail(line_no, "bad iteration '" + std::string(cells[0]) + "'");
    std::array<double, 13> v{};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!parse_number(cells[i + 1], v[i])) {
        fail(line_no, "bad value '" + std::string(cells[i + 1]) + "' in column " +
                          std::string(kMetricsColumns[i + 1]));
      }
    }
    r.means = {v[0], v[1], v[2], v[3]};
    r.overall = v[4];
    r.min_dim = v[5];
    r.mean_length = v[6];
    r.coverage = v[7];
    r.mean_kl = v[8];
    r.loss = {v[9], v[10], v[11], v[12]};
    rows.push_back(r);
  }
  if (rows.empty()) fail(line_no, "no data rows");
  return rows;
}

DocumentSets make_document_sets(const TrainConfig& cfg) {
  cfg.vocab.validate();
  DocumentSets sets;
  for (int i = 0; i < cfg.docs_pool_size; ++i) {
    const auto key = CounterRng::stream(cfg.seed, StreamTag::Document, static_cast<std::uint64_t>(i)).key();
    sets.train.push_back(std::make_shared<const Document>(generate_document(cfg.vocab, key)));
  }
  std::uint64_t candidate = 0;
  while (sets.eval.size() < static_cast<std::size_t>(cfg.eval_docs)) {
    const auto key = CounterRng::stream(cfg.seed, StreamTag::Document, (1ULL << 40) + candidate++).key();
    auto doc = generate_document(cfg.vocab, key);
    const bool seen = std::any_of(sets.train.begin(), sets.train.end(),
                                  [&](const auto& t) { return *t == doc; });
    if (!seen) sets.eval.push_back(std::make_shared<const Document>(std::move(doc)));
  }
  return sets;
}

PolicyShape policy_shape(const TrainConfig& cfg) {
  return {cfg.vocab.size, cfg.embed_dim, cfg.hidden, static_cast<int>(kNumDims)};
}

PretrainResult pretrain_reference(const TrainConfig& cfg, const DocumentSets& docs) {
  std::vector<Document> pool;
  pool.reserve(docs.train.size());
  for (const auto& d : docs.train) pool.push_back(*d);
  const PretrainOptions opts{cfg.pretrain_epochs, cfg.pretrain_lr, cfg.pretrain_minibatch,
                             cfg.max_summary_len, cfg.seed};
  return supervised_pretrain(pool, PolicyParams::random(policy_shape(cfg), cfg.seed), opts);
}

MetricsRow evaluate_policy(const PolicyParams& policy, const PolicyParams& reference,
                           const DocumentPool& eval_docs, int max_summary_len, int iteration,
                           const LossBreakdown& loss) {
  if (eval_docs.empty()) throw ConfigError("evaluation needs at least one document");
  MetricsRow row;
  row.iteration = iteration;
  row.loss = loss;
  std::array<double, kNumDims> sums{};
  for (const auto& doc : eval_docs) {
    const auto ep = greedy_decode(policy, reference, *doc, max_summary_len);
    const auto scores = score_dimensions(*doc, ep.tokens);
    const auto a = scores.as_array();
    for (std::size_t k = 0; k < kNumDims; ++k) sums[k] += a[k];
    row.min_dim += select_min_dimension(scores).second;
    row.mean_length += static_cast<double>(summary_length(ep.tokens));
    row.coverage += coverage(*doc, ep.tokens);
    row.mean_kl += ep.mean_kl;
  }
  const auto n = static_cast<double>(eval_docs.size());
  for (auto& s : sums) s /= n;
  row.means = DimScores::from_array(sums);
  row.overall = row.means.mean();
  row.min_dim /= n;
  row.mean_length /= n;
  row.coverage /= n;
  row.mean_kl /= n;
  return row;
}

namespace {

PolicyParams resolve_reference(const TrainConfig& cfg, const DocumentSets& docs,
                               const PolicyParams* reference) {
  if (reference != nullptr) return *reference;
  if (!cfg.init_checkpoint.empty()) return load_checkpoint(cfg.init_checkpoint).params;
  return pretrain_reference(cfg, docs).params;
}

}  // namespace

TrainingResult train(const TrainConfig& cfg, const PolicyParams* reference,
                     const ProgressFn& progress) {
  cfg.validate();
  const auto docs = make_document_sets(cfg);
  TrainingResult result{{}, resolve_reference(cfg, docs, reference), {}, {}};
  if (!(result.reference.shape == policy_shape(cfg))) {
    throw ConfigError("reference policy shape does not match the configuration");
  }
  result.policy = result.reference;
  result.optimizer = OptimizerState::make(cfg.hp.optimizer, result.policy.flat.size());

  auto emit = [&](MetricsRow row) {
    if (progress) progress(row);
    result.rows.push_back(std::move(row));
  };
  emit(evaluate_policy(result.policy, result.reference, docs.eval, cfg.max_summary_len, 0));

  const auto batch = static_cast<std::size_t>(cfg.hp.batch_size);
  std::vector<std::size_t> order(docs.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t epoch = 0;
  CounterRng::stream(cfg.seed, StreamTag::BatchOrder, epoch).shuffle(std::span<std::size_t>(order));
  std::size_t cursor = 0;
  const auto episode_cfg = cfg.episode();

  for (int it = 1; it <= cfg.iterations; ++it) {
    if (cursor + batch > order.size()) {
      ++epoch;
      auto rng = CounterRng::stream(cfg.seed, StreamTag::BatchOrder, epoch);
      rng.shuffle(std::span<std::size_t>(order));
      cursor = 0;
    }
    const auto ids = std::span<const std::size_t>(order).subspan(cursor, batch);
    cursor += batch;
    StepMetrics metrics;
    try {
      const auto rollouts =
          collect_rollouts(result.policy, result.reference, docs.train, ids, episode_cfg, cfg.hp,
                           cfg.seed, static_cast<std::uint64_t>(it - 1) * batch);
      auto rng = CounterRng::stream(cfg.seed, StreamTag::Projection, static_cast<std::uint64_t>(it));
      metrics = mdo_update(cfg.strategy, rollouts, result.policy, cfg.hp, result.optimizer, rng);
    } catch (const NumericalError& e) {
      throw TrainingError("iteration " + std::to_string(it) + ": " + e.what());
    }
    if (it % cfg.eval_interval == 0 || it == cfg.iterations) {
      emit(evaluate_policy(result.policy, result.reference, docs.eval, cfg.max_summary_len, it,
                           metrics.loss));
    }
  }
  return result;
}

namespace {

void write_run_files(const TrainConfig& cfg, const fs::path& dir, const TrainingResult& result) {
  fs::create_directories(dir);
  write_metrics_csv(dir / "metrics.csv", result.rows);
  save_checkpoint((dir / "checkpoint.json").string(), {result.policy, result.optimizer});
  save_checkpoint((dir / "reference.json").string(), {result.reference, std::nullopt});
  std::ofstream(dir / "config.json") << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace

TrainingResult run_training(const TrainConfig& cfg, const ProgressFn& progress) {
  auto result = train(cfg, nullptr, progress);
  write_run_files(cfg, cfg.output_dir, result);
  return result;
}

std::vector<SweepRow> gamma_sweep(const TrainConfig& cfg, std::span<const double> gammas,
                                  bool write_files, const ProgressFn& progress) {
  if (gammas.size() < 2) throw ConfigError("gamma sweep needs at least two values");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0 && gammas[i] <= 1.0)) throw ConfigError("sweep gammas must lie in (0, 1]");
    for (std::size_t j = 0; j < i; ++j) {
      if (gammas[i] == gammas[j]) throw ConfigError("sweep gammas must be distinct");
    }
  }
  cfg.validate();
  const auto docs = make_document_sets(cfg);
  const auto reference = resolve_reference(cfg, docs, nullptr);

  std::vector<SweepRow> rows;
  for (const double gamma : gammas) {
    TrainConfig cell = cfg;
    cell.hp.gamma = gamma;
    char name[32];
    std::snprintf(name, sizeof name, "gamma_%g", gamma);
    cell.output_dir = (fs::path(cfg.output_dir) / name).string();
    const auto result = train(cell, &reference, progress);
    if (write_files) write_run_files(cell, cell.output_dir, result);
    const auto& last = result.rows.back();
    rows.push_back({gamma, last.mean_length, last.means, result.rows.front()});
  }
  if (write_files) {
    fs::create_directories(cfg.output_dir);
    std::ofstream(fs::path(cfg.output_dir) / "sweep.csv", std::ios::binary) << sweep_csv(rows);
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "gamma,mean_length,coherence,consistency,fluency,relevance\n";
  for (const auto& r : rows) {
    out += fmt_double(r.gamma);
    for (const double x : {r.mean_length, r.means.coherence, r.means.consistency, r.means.fluency,
                           r.means.relevance}) {
      out += ',';
      out += fmt_double(x);
    }
    out += '\n';
  }
  return out;
}

}  // namespace mdo
