#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mdo/errors.hpp"
#include "mdo/harness.hpp"

using namespace mdo;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config(const std::string& dir) {
  TrainConfig cfg;
  cfg.docs_pool_size = 24;
  cfg.eval_docs = 8;
  cfg.pretrain_epochs = 3;
  cfg.iterations = 4;
  cfg.eval_interval = 2;
  cfg.output_dir = (fs::temp_directory_path() / "mdo_tests" / dir).string();
  fs::remove_all(cfg.output_dir);
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const PolicyParams& shared_reference() {
  static const PolicyParams ref = [] {
    const auto cfg = small_config("ref");
    return pretrain_reference(cfg, make_document_sets(cfg)).params;
  }();
  return ref;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("one iteration gives the initial and final rows") {
  auto cfg = small_config("one");
  cfg.iterations = 1;
  const auto r = train(cfg, &shared_reference());
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].iteration == 0);
  CHECK(r.rows[1].iteration == 1);
}

TEST_CASE("eval rows follow the interval") {
  auto cfg = small_config("interval");
  cfg.iterations = 5;
  const auto r = train(cfg, &shared_reference());
  std::vector<int> its;
  for (const auto& row : r.rows) its.push_back(row.iteration);
  CHECK(its == std::vector<int>{0, 2, 4, 5});
}

TEST_CASE("metric values are finite and in range") {
  for (const auto s : {Strategy::Min, Strategy::Pro, Strategy::SumR, Strategy::SumL}) {
    auto cfg = small_config("range");
    cfg.strategy = s;
    for (const auto& row : train(cfg, &shared_reference()).rows) {
      for (const double x : row.means.as_array()) CHECK((x >= 0.0 && x <= 1.0));
      CHECK(row.min_dim <= std::min({row.means.coherence, row.means.consistency, row.means.fluency,
                                     row.means.relevance}) + 1e-12);
      CHECK(row.overall == doctest::Approx(row.means.mean()).epsilon(1e-12));
      CHECK((row.coverage >= 0.0 && row.coverage <= 1.0));
      CHECK((row.mean_length >= 0.0 && row.mean_length <= cfg.max_summary_len));
      CHECK(row.mean_kl >= -1e-12);
      CHECK(std::isfinite(row.loss.total));
    }
  }
}

TEST_CASE("runs are reproducible to the byte") {
  auto cfg = small_config("repeat_a");
  cfg.strategy = Strategy::Pro;
  run_training(cfg);
  const auto first = slurp(fs::path(cfg.output_dir) / "metrics.csv");
  auto again = cfg;
  again.output_dir = small_config("repeat_b").output_dir;
  run_training(again);
  CHECK(first == slurp(fs::path(again.output_dir) / "metrics.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "checkpoint.json"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "reference.json"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "config.json"));
}

TEST_CASE("saved reference can seed a later run") {
  auto cfg = small_config("init_a");
  cfg.iterations = 2;
  const auto a = run_training(cfg);
  auto b_cfg = small_config("init_b");
  b_cfg.iterations = 2;
  b_cfg.pretrain_epochs = 0;
  b_cfg.init_checkpoint = (fs::path(cfg.output_dir) / "reference.json").string();
  const auto b = train(b_cfg);
  CHECK(b.reference.flat == a.reference.flat);
  CHECK(b.policy.flat == a.policy.flat);
}

TEST_CASE("evaluation documents are never training documents") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto cfg = small_config("docs");
    cfg.seed = seed;
    cfg.docs_pool_size = 200;
    cfg.eval_docs = 64;
    const auto sets = make_document_sets(cfg);
    CHECK(sets.train.size() == 200);
    CHECK(sets.eval.size() == 64);
    for (const auto& e : sets.eval) {
      for (const auto& t : sets.train) REQUIRE_FALSE(*e == *t);
    }
  }
}

TEST_CASE("evaluation leaves parameters untouched") {
  const auto cfg = small_config("eval");
  const auto sets = make_document_sets(cfg);
  auto policy = PolicyParams::random(shared_reference().shape, 4);
  const auto before = policy.flat;
  const auto ref_before = shared_reference().flat;
  evaluate_policy(policy, shared_reference(), sets.eval, cfg.max_summary_len, 0);
  CHECK(policy.flat == before);
  CHECK(shared_reference().flat == ref_before);
}

TEST_CASE("metrics csv round trip") {
  auto cfg = small_config("csv");
  const auto r = train(cfg, &shared_reference());
  const auto path = fs::path(cfg.output_dir) / "m.csv";
  fs::create_directories(cfg.output_dir);
  write_metrics_csv(path, r.rows);
  const auto back = read_metrics_csv(path);
  REQUIRE(back.size() == r.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].iteration == r.rows[i].iteration);
    CHECK(back[i].min_dim == r.rows[i].min_dim);
    CHECK(back[i].means.as_array() == r.rows[i].means.as_array());
    CHECK(back[i].loss.total == r.rows[i].loss.total);
  }
  std::istringstream header(slurp(path));
  std::string first;
  std::getline(header, first);
  CHECK(first == metrics_csv_header());
}

TEST_CASE("malformed metrics name the file and line") {
  const auto dir = fs::temp_directory_path() / "mdo_tests" / "bad";
  fs::create_directories(dir);
  const auto path = dir / "metrics.csv";
  {
    std::ofstream out(path);
    out << metrics_csv_header() << "\n";
    out << "0,1,1,1,1,1,1,3,1,0,0,0,0,0\n";
    out << "1,1,abc,1,1,1,1,3,1,0,0,0,0,0\n";
  }
  try {
    read_metrics_csv(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("metrics.csv:3") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "iteration,coherence\n0,1\n";
  }
  CHECK_THROWS_AS(read_metrics_csv(path), ParseError);
  {
    std::ofstream out(path);
    out << metrics_csv_header() << "\n0,1,1,1\n";
  }
  CHECK_THROWS_AS(read_metrics_csv(path), ParseError);
}

TEST_CASE("report rows") {
  auto cfg = small_config("report_min");
  run_training(cfg);
  auto cfg2 = small_config("report_sumr");
  cfg2.strategy = Strategy::SumR;
  run_training(cfg2);
  const std::vector<fs::path> files{fs::path(cfg.output_dir) / "metrics.csv",
                                    fs::path(cfg2.output_dir) / "metrics.csv"};
  const auto rows = build_report(files);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].label == "report_min");
  CHECK(rows[1].label == "report_sumr");
  for (const auto& r : rows) {
    const auto a = r.means.as_array();
    CHECK(std::abs(r.overall - (a[0] + a[1] + a[2] + a[3]) / 4.0) <= 1e-12);
    CHECK(r.spread == doctest::Approx(*std::max_element(a.begin(), a.end()) -
                                      *std::min_element(a.begin(), a.end())));
  }
  CHECK(build_report(std::span(files).first(1)).size() == 1);
  const auto text = report_text(rows);
  CHECK(text.find("report_sumr") != std::string::npos);
  const auto csv = report_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("gamma sweep") {
  auto cfg = small_config("sweep");
  cfg.iterations = 2;
  const std::vector<double> gammas{0.5, 0.99};
  const auto rows = gamma_sweep(cfg, gammas, true);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].gamma == 0.5);
  CHECK(rows[1].gamma == 0.99);
  CHECK(rows[0].initial.mean_length == rows[1].initial.mean_length);
  CHECK(rows[0].initial.means.as_array() == rows[1].initial.means.as_array());
  const auto csv = slurp(fs::path(cfg.output_dir) / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(fs::exists(fs::path(cfg.output_dir) / "gamma_0.5" / "metrics.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "gamma_0.99" / "metrics.csv"));
  CHECK_THROWS_AS(gamma_sweep(cfg, std::vector<double>{0.5}, false), ConfigError);
  CHECK_THROWS_AS(gamma_sweep(cfg, std::vector<double>{0.5, 0.5}, false), ConfigError);
  CHECK_THROWS_AS(gamma_sweep(cfg, std::vector<double>{0.0, 0.5}, false), ConfigError);
}

}
