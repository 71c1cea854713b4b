#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "consrec/errors.hpp"
#include "consrec/ingest.hpp"
#include "consrec/pipeline.hpp"

using namespace consrec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Synthesizes a corpus into dir and returns a config pointing at it.
RunConfig synth_corpus(const std::string& dir, std::uint64_t seed = 5) {
  RunConfig cfg;
  cfg.out_dir = dir;
  cfg.dim = 16;
  cfg.seed = seed;
  cfg.synth.n_users = 30;
  cfg.synth.n_clusters = 3;
  cfg.synth.items_per_cluster = 8;
  cfg.synth.history_len = 10;
  cfg.synth.noise_rate = 0.25;
  run_synth(cfg);
  cfg.catalog_path = dir + "/catalog.jsonl";
  cfg.log_path = dir + "/interactions.jsonl";
  cfg.vectors_path = dir + "/vectors.tsv";
  cfg.provider = "file";
  cfg.min_count = 1;
  cfg.tau = 0.5;
  return cfg;
}

}  // namespace

TEST_CASE("config round-trips: emit -> parse -> emit is identical") {
  RunConfig cfg;
  cfg.catalog_path = "cat.jsonl";
  cfg.tau = 0.45;
  cfg.ks = {5, 10, 20};
  cfg.provider = "file";
  cfg.vectors_path = "v.tsv";
  auto text = emit_config(cfg);
  {
    std::ofstream out("cfg_rt.txt");
    out << text;
  }
  auto parsed = parse_config_file("cfg_rt.txt");
  CHECK(emit_config(parsed) == text);
}

TEST_CASE("config parser handles comments and rejects unknown keys") {
  {
    std::ofstream out("cfg_c.txt");
    out << "# a comment\n";
    out << "tau=0.6  # trailing comment\n";
    out << "\n";
    out << "seed=9\n";
  }
  auto cfg = parse_config_file("cfg_c.txt");
  CHECK(cfg.tau == 0.6);
  CHECK(cfg.seed == 9);

  {
    std::ofstream out("cfg_bad.txt");
    out << "no_such_key=1\n";
  }
  CHECK_THROWS_AS(parse_config_file("cfg_bad.txt"), ConfigError);
}

TEST_CASE("validate_config bounds") {
  RunConfig cfg;
  cfg.tau = 1.5;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.tau = 0.7;
  cfg.ks = {};
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.ks = {10};
  cfg.provider = "magic";
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("synth output is ingestible and splits are well-formed") {
  auto cfg = synth_corpus("pl_synth");
  auto splits_path = run_ingest(cfg);
  auto splits = read_splits(splits_path);
  CHECK(!splits.empty());
  std::size_t tests = 0;
  for (const auto& ex : splits) {
    if (ex.split == SplitTag::kTest) ++tests;
  }
  CHECK(tests == 30);
}

TEST_CASE("full pipeline runs and reruns byte-identically") {
  for (std::string dir : {"pl_run1", "pl_run2"}) {
    auto cfg = synth_corpus(dir, 13);
    cfg.epochs = 2;
    cfg.lr = 0.01;
    cfg.batch_size = 16;
    run_ingest(cfg);
    run_filter(cfg);
    run_train(cfg);
    run_eval(cfg);
  }
  for (std::string name :
       {"ingest_manifest.json", "filter_manifest.json", "train_manifest.json",
        "eval_manifest.json", "report.json", "similarity.csv"}) {
    CHECK(slurp("pl_run1/" + name) == slurp("pl_run2/" + name));
  }
}

TEST_CASE("filter output lists retained, removed, component sizes") {
  auto cfg = synth_corpus("pl_filter", 29);
  auto path = run_filter(cfg);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    CHECK(line.find("\"user_id\"") != std::string::npos);
    CHECK(line.find("\"retained\"") != std::string::npos);
    CHECK(line.find("\"removed\"") != std::string::npos);
    CHECK(line.find("\"component_sizes\"") != std::string::npos);
  }
  CHECK(lines == 30);
}

TEST_CASE("tau=-1 filter removes nothing") {
  auto cfg = synth_corpus("pl_floor", 31);
  cfg.tau = -1.0;
  auto path = run_filter(cfg);
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    CHECK(line.find("\"removed\":[]") != std::string::npos);
  }
}

TEST_CASE("zero-shot eval works without a trained model") {
  auto cfg = synth_corpus("pl_zeroshot", 37);
  cfg.provider = "tfidf";
  cfg.dim = 256;
  run_ingest(cfg);
  auto report_path = run_eval(cfg);
  auto text = slurp(report_path);
  CHECK(text.find("recall@10") != std::string::npos);
  CHECK(text.find("ndcg@20") != std::string::npos);
}

TEST_CASE("sweep writes one CSV row per grid value plus a header") {
  auto cfg = synth_corpus("pl_sweep", 41);
  cfg.epochs = 1;
  cfg.lr = 0.01;
  cfg.sweep_grid = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  run_ingest(cfg);
  auto path = run_sweep(cfg);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 8);
  CHECK(lines[0] == "tau,recall@10,ndcg@10,recall@20,ndcg@20");
  CHECK(lines[1].substr(0, 5) == "0.20,");
  CHECK(lines[7].substr(0, 5) == "0.80,");
}

TEST_CASE("missing paths raise config errors naming the problem") {
  RunConfig cfg;
  CHECK_THROWS_AS(run_ingest(cfg), ConfigError);
  cfg.catalog_path = "definitely_missing.jsonl";
  cfg.log_path = "also_missing.jsonl";
  CHECK_THROWS_AS(run_ingest(cfg), DataError);
}
