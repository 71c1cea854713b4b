#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "consrec/embed.hpp"
#include "consrec/eval.hpp"
#include "consrec/recommender.hpp"
#include "consrec/synth.hpp"
#include "consrec/types.hpp"

namespace consrec {

struct RunConfig {
  std::string catalog_path;
  std::string log_path;
  std::string vectors_path;
  std::string out_dir = ".";

  double tau = 0.7;
  std::string provider = "tfidf";  // file | tfidf | trained
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  std::size_t min_count = 5;
  bool filter_enabled = true;

  double lr = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  double temperature = 1.0;

  std::vector<std::size_t> ks = {10, 20};
  bool exclude_last = true;
  bool mask_history = false;

  std::vector<double> sweep_grid = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

  // Synth command.
  NoisyCorpusConfig synth;
};

// Flat key=value file with '#' comments. Unknown keys are rejected.
RunConfig parse_config_file(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key,
                       const std::string& value);
std::string emit_config(const RunConfig& cfg);
void validate_config(const RunConfig& cfg);

std::uint64_t hash_file(const std::string& path);
// JSON manifest of {file name -> content hash} for the named outputs.
void write_manifest(const std::string& path,
                    const std::vector<std::string>& files);

// Pipeline commands; each writes its artifacts plus a manifest under
// cfg.out_dir and returns the primary output path.
std::string run_ingest(const RunConfig& cfg);
std::string run_filter(const RunConfig& cfg);
std::string run_train(const RunConfig& cfg);
std::string run_rank(const RunConfig& cfg);
std::string run_eval(const RunConfig& cfg);
std::string run_synth(const RunConfig& cfg);
std::string run_sweep(const RunConfig& cfg);

// Shared helpers, exposed for tests.
EmbeddingMatrix provider_matrix(const RunConfig& cfg, const Catalog& catalog);

struct SweepRow {
  double tau = 0.0;
  bool filtered = true;
  std::map<std::string, double> metrics;
};

// Filter + train + eval per grid entry over in-memory splits. A grid value
// of exactly -1 retains every item (complete graph), which is the
// no-filtering regression guard.
std::vector<SweepRow> sweep_over(const std::vector<SplitExample>& splits,
                                 const std::vector<std::string>& item_ids,
                                 const EmbeddingMatrix& filter_mat,
                                 const std::vector<double>& grid,
                                 const TrainConfig& train_cfg,
                                 const std::vector<std::size_t>& ks);

// Metrics for one train+eval run at a fixed filter setting.
std::map<std::string, double> train_and_eval(
    const std::vector<SplitExample>& splits,
    const std::vector<std::string>& item_ids,
    const EmbeddingMatrix* filter_mat, bool filter_enabled, double tau,
    const TrainConfig& train_cfg, const std::vector<std::size_t>& ks);

}  // namespace consrec
