#include "consrec/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "consrec/catalog.hpp"
#include "consrec/errors.hpp"
#include "consrec/graph.hpp"
#include "consrec/ingest.hpp"
#include "consrec/rng.hpp"

namespace consrec {

namespace fs = std::filesystem;

namespace {

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    auto x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": " + v);
  }
}

double parse_f64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad float for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad bool for " + key + ": " + v);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, const std::string& key, F f) {
  std::vector<T> out;
  std::istringstream ss(v);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty()) out.push_back(f(field, key));
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key,
                       const std::string& value) {
  if (key == "catalog") cfg.catalog_path = value;
  else if (key == "log") cfg.log_path = value;
  else if (key == "vectors") cfg.vectors_path = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "tau") cfg.tau = parse_f64(value, key);
  else if (key == "provider") cfg.provider = value;
  else if (key == "dim") cfg.dim = parse_u64(value, key);
  else if (key == "seed") cfg.seed = parse_u64(value, key);
  else if (key == "min_count") cfg.min_count = parse_u64(value, key);
  else if (key == "filter") cfg.filter_enabled = parse_bool(value, key);
  else if (key == "lr") cfg.lr = parse_f64(value, key);
  else if (key == "batch_size") cfg.batch_size = parse_u64(value, key);
  else if (key == "epochs") cfg.epochs = parse_u64(value, key);
  else if (key == "temperature") cfg.temperature = parse_f64(value, key);
  else if (key == "ks")
    cfg.ks = parse_list<std::size_t>(value, key, parse_u64);
  else if (key == "exclude_last") cfg.exclude_last = parse_bool(value, key);
  else if (key == "mask_history") cfg.mask_history = parse_bool(value, key);
  else if (key == "sweep_grid")
    cfg.sweep_grid = parse_list<double>(value, key, parse_f64);
  else if (key == "synth_users") cfg.synth.n_users = parse_u64(value, key);
  else if (key == "synth_clusters") cfg.synth.n_clusters = parse_u64(value, key);
  else if (key == "synth_items_per_cluster")
    cfg.synth.items_per_cluster = parse_u64(value, key);
  else if (key == "synth_history_len")
    cfg.synth.history_len = parse_u64(value, key);
  else if (key == "synth_noise_rate")
    cfg.synth.noise_rate = parse_f64(value, key);
  else throw ConfigError("unknown config key: " + key);
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // Trim.
    auto b = line.find_first_not_of(" \t");
    auto e = line.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    line = line.substr(b, e - b + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    apply_config_line(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

std::string emit_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "catalog=" << cfg.catalog_path << '\n';
  out << "log=" << cfg.log_path << '\n';
  out << "vectors=" << cfg.vectors_path << '\n';
  out << "out_dir=" << cfg.out_dir << '\n';
  out << "tau=" << fmt(cfg.tau) << '\n';
  out << "provider=" << cfg.provider << '\n';
  out << "dim=" << cfg.dim << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "min_count=" << cfg.min_count << '\n';
  out << "filter=" << (cfg.filter_enabled ? "true" : "false") << '\n';
  out << "lr=" << fmt(cfg.lr) << '\n';
  out << "batch_size=" << cfg.batch_size << '\n';
  out << "epochs=" << cfg.epochs << '\n';
  out << "temperature=" << fmt(cfg.temperature) << '\n';
  out << "ks=";
  for (std::size_t i = 0; i < cfg.ks.size(); ++i) {
    if (i) out << ',';
    out << cfg.ks[i];
  }
  out << '\n';
  out << "exclude_last=" << (cfg.exclude_last ? "true" : "false") << '\n';
  out << "mask_history=" << (cfg.mask_history ? "true" : "false") << '\n';
  out << "sweep_grid=";
  for (std::size_t i = 0; i < cfg.sweep_grid.size(); ++i) {
    if (i) out << ',';
    out << fmt(cfg.sweep_grid[i]);
  }
  out << '\n';
  out << "synth_users=" << cfg.synth.n_users << '\n';
  out << "synth_clusters=" << cfg.synth.n_clusters << '\n';
  out << "synth_items_per_cluster=" << cfg.synth.items_per_cluster << '\n';
  out << "synth_history_len=" << cfg.synth.history_len << '\n';
  out << "synth_noise_rate=" << fmt(cfg.synth.noise_rate) << '\n';
  return out.str();
}

void validate_config(const RunConfig& cfg) {
  if (cfg.tau < -1.0 || cfg.tau > 1.0) {
    throw ConfigError("tau must be in [-1, 1], got " + fmt(cfg.tau));
  }
  if (cfg.ks.empty()) throw ConfigError("ks must be nonempty");
  if (cfg.provider != "file" && cfg.provider != "tfidf" &&
      cfg.provider != "trained") {
    throw ConfigError("provider must be file|tfidf|trained, got " +
                      cfg.provider);
  }
  for (double t : cfg.sweep_grid) {
    if (t < -1.0 || t > 1.0) {
      throw ConfigError("sweep_grid value out of [-1, 1]: " + fmt(t));
    }
  }
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void write_manifest(const std::string& path,
                    const std::vector<std::string>& files) {
  nlohmann::json j;
  for (const auto& f : files) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash_file(f)));
    j[fs::path(f).filename().string()] = buf;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

EmbeddingMatrix provider_matrix(const RunConfig& cfg, const Catalog& catalog) {
  if (cfg.provider == "file") {
    if (cfg.vectors_path.empty()) throw ConfigError("provider=file needs vectors=");
    return embed_from_file(cfg.vectors_path);
  }
  if (cfg.provider == "tfidf") {
    return embed_tfidf(catalog, cfg.dim, cfg.seed).matrix;
  }
  // trained
  return load_model((fs::path(cfg.out_dir) / "model.bin").string(),
                    (fs::path(cfg.out_dir) / "model.json").string())
      .table;
}

namespace {

std::vector<std::string> catalog_ids(const Catalog& catalog) {
  std::vector<std::string> ids;
  ids.reserve(catalog.size());
  for (const auto& [id, _] : catalog) ids.push_back(id);
  return ids;
}

std::vector<TrainExample> split_examples(const std::vector<SplitExample>& splits,
                                         SplitTag tag) {
  std::vector<TrainExample> out;
  for (const auto& ex : splits) {
    if (ex.split == tag) out.push_back({ex.context, ex.target});
  }
  return out;
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.catalog_path.empty() || cfg.log_path.empty()) {
    throw ConfigError("catalog= and log= paths are required");
  }
  return load_interactions(cfg.log_path, cfg.catalog_path);
}

// Evaluation over the test split at a fixed filter setting. Matrix scores;
// filter_mat (may equal matrix) drives denoising when enabled.
std::vector<RankingResult> rank_split(const std::vector<SplitExample>& splits,
                                      SplitTag tag,
                                      const EmbeddingMatrix& matrix,
                                      const EmbeddingMatrix* filter_mat,
                                      bool filter_enabled, double tau,
                                      bool mask_history) {
  std::vector<const SplitExample*> examples;
  for (const auto& ex : splits) {
    if (ex.split == tag) examples.push_back(&ex);
  }
  std::vector<RankingResult> out(examples.size());
  std::exception_ptr first_error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(examples.size());
       ++i) {
    try {
      const auto& ex = *examples[i];
      auto r = rank_target(ex.context, ex.target, matrix,
                           filter_enabled ? RankMode::kFiltered : RankMode::kRaw,
                           tau, 100, filter_mat, mask_history ? &ex.context : nullptr);
      r.user_id = ex.user_id;
      out[i] = std::move(r);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace

std::string run_ingest(const RunConfig& cfg) {
  auto ds = load_dataset(cfg);
  if (cfg.min_count > 1) ds = core_filter(ds, cfg.min_count);
  auto splits = leave_one_out(ds);
  fs::create_directories(cfg.out_dir);
  std::string splits_path = (fs::path(cfg.out_dir) / "splits.jsonl").string();
  write_splits(splits, splits_path);
  write_manifest((fs::path(cfg.out_dir) / "ingest_manifest.json").string(),
                 {splits_path});
  return splits_path;
}

std::string run_filter(const RunConfig& cfg) {
  auto ds = load_dataset(cfg);
  auto matrix = provider_matrix(cfg, ds.catalog);
  std::vector<const InteractionHistory*> histories;
  for (const auto& [_, hist] : ds.histories) histories.push_back(&hist);
  auto results = denoise_all(histories, matrix, cfg.tau, cfg.exclude_last);

  fs::create_directories(cfg.out_dir);
  std::string out_path = (fs::path(cfg.out_dir) / "filter.jsonl").string();
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write filter output: " + out_path);
  for (std::size_t i = 0; i < histories.size(); ++i) {
    nlohmann::json j;
    j["user_id"] = histories[i]->user_id;
    j["retained"] = std::vector<std::string>(
        results[i].filtered.retained_items.begin(),
        results[i].filtered.retained_items.end());
    j["removed"] = results[i].removed_items;
    j["component_sizes"] = results[i].component_sizes;
    out << j.dump() << '\n';
  }
  out.close();
  write_manifest((fs::path(cfg.out_dir) / "filter_manifest.json").string(),
                 {out_path});
  return out_path;
}

std::string run_train(const RunConfig& cfg) {
  auto ds = load_dataset(cfg);
  auto splits = read_splits((fs::path(cfg.out_dir) / "splits.jsonl").string());
  auto train_examples = split_examples(splits, SplitTag::kTrain);

  TrainConfig tc{cfg.dim, cfg.lr, cfg.batch_size, cfg.epochs, cfg.temperature,
                 cfg.seed};
  FilterConfig fc{cfg.filter_enabled, cfg.tau};
  EmbeddingMatrix filter_mat;
  if (cfg.filter_enabled) filter_mat = provider_matrix(cfg, ds.catalog);

  auto ids = catalog_ids(ds.catalog);
  auto result = train_recommender(train_examples, ids, fc, tc,
                                  cfg.filter_enabled ? &filter_mat : nullptr);

  fs::create_directories(cfg.out_dir);
  std::string model_path = (fs::path(cfg.out_dir) / "model.bin").string();
  std::string config_path = (fs::path(cfg.out_dir) / "model.json").string();
  save_model(result.model, model_path, config_path);
  std::string trace_path = (fs::path(cfg.out_dir) / "loss_trace.json").string();
  {
    std::ofstream out(trace_path);
    nlohmann::json j = result.epoch_losses;
    out << j.dump() << '\n';
  }
  write_manifest((fs::path(cfg.out_dir) / "train_manifest.json").string(),
                 {model_path, config_path, trace_path});
  return model_path;
}

namespace {

// Scoring matrix for rank/eval: the trained model when present, else the
// configured provider (zero-shot evaluation).
EmbeddingMatrix scoring_matrix(const RunConfig& cfg, const Catalog& catalog) {
  std::string model_path = (fs::path(cfg.out_dir) / "model.bin").string();
  if (cfg.provider == "trained" || fs::exists(model_path)) {
    return load_model(model_path,
                      (fs::path(cfg.out_dir) / "model.json").string())
        .table;
  }
  return provider_matrix(cfg, catalog);
}

EmbeddingMatrix filter_space(const RunConfig& cfg, const Catalog& catalog) {
  if (cfg.provider == "trained") return scoring_matrix(cfg, catalog);
  return provider_matrix(cfg, catalog);
}

}  // namespace

std::string run_rank(const RunConfig& cfg) {
  auto ds = load_dataset(cfg);
  auto splits = read_splits((fs::path(cfg.out_dir) / "splits.jsonl").string());
  auto matrix = scoring_matrix(cfg, ds.catalog);
  auto fmat = filter_space(cfg, ds.catalog);
  auto results = rank_split(splits, SplitTag::kTest, matrix, &fmat,
                            cfg.filter_enabled, cfg.tau, cfg.mask_history);

  std::string out_path = (fs::path(cfg.out_dir) / "rank.jsonl").string();
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write rank output: " + out_path);
  for (const auto& r : results) {
    nlohmann::json j;
    j["user_id"] = r.user_id;
    j["target_id"] = r.target_id;
    j["rank"] = r.rank;
    auto& top = j["top_k"] = nlohmann::json::array();
    for (const auto& s : r.top_k) top.push_back({s.item_id, s.score});
    out << j.dump() << '\n';
  }
  out.close();
  write_manifest((fs::path(cfg.out_dir) / "rank_manifest.json").string(),
                 {out_path});
  return out_path;
}

std::string run_eval(const RunConfig& cfg) {
  auto ds = load_dataset(cfg);
  auto splits = read_splits((fs::path(cfg.out_dir) / "splits.jsonl").string());
  auto matrix = scoring_matrix(cfg, ds.catalog);
  auto fmat = filter_space(cfg, ds.catalog);
  auto results = rank_split(splits, SplitTag::kTest, matrix, &fmat,
                            cfg.filter_enabled, cfg.tau, cfg.mask_history);
  auto report = aggregate(results, cfg.ks);

  // Similarity analysis over test contexts, in the filter space.
  std::vector<std::pair<std::string, std::vector<std::string>>> retained;
  std::map<std::string, std::string> targets;
  for (const auto& ex : splits) {
    if (ex.split != SplitTag::kTest) continue;
    std::vector<std::string> kept = ex.context;
    if (cfg.filter_enabled) {
      InteractionHistory hist;
      for (std::size_t p = 0; p < ex.context.size(); ++p) {
        hist.events.push_back({ex.context[p], static_cast<std::int64_t>(p)});
      }
      auto d = denoise(hist, fmat, cfg.tau, false);
      kept.clear();
      for (const auto& ev : d.filtered.events) kept.push_back(ev.item_id);
    }
    retained.emplace_back(ex.user_id, std::move(kept));
    targets[ex.user_id] = ex.target;
  }
  auto sim = similarity_report(retained, targets, fmat);

  fs::create_directories(cfg.out_dir);
  std::string report_path = (fs::path(cfg.out_dir) / "report.json").string();
  {
    nlohmann::json j;
    j["n_users"] = report.n_users;
    j["metrics"] = report.metrics;
    auto& per_user = j["per_user"] = nlohmann::json::array();
    for (const auto& [user, rank] : report.per_user) {
      per_user.push_back({user, rank});
    }
    std::ofstream out(report_path);
    if (!out) throw DataError("cannot write report: " + report_path);
    out << j.dump(2) << '\n';
  }
  std::string sim_path = (fs::path(cfg.out_dir) / "similarity.csv").string();
  {
    std::ofstream out(sim_path);
    if (!out) throw DataError("cannot write similarity report: " + sim_path);
    out << "user_id,intra_sim,target_sim\n";
    char buf[128];
    for (const auto& row : sim.rows) {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", row.user_id.c_str(),
                    row.intra_sim, row.target_sim);
      out << buf;
    }
  }
  write_manifest((fs::path(cfg.out_dir) / "eval_manifest.json").string(),
                 {report_path, sim_path});
  return report_path;
}

std::string run_synth(const RunConfig& cfg) {
  NoisyCorpusConfig scfg = cfg.synth;
  scfg.dim = cfg.dim;
  scfg.seed = cfg.seed;
  auto corpus = gen_noisy_corpus(scfg);

  fs::create_directories(cfg.out_dir);
  std::string catalog_path = (fs::path(cfg.out_dir) / "catalog.jsonl").string();
  {
    std::ofstream out(catalog_path);
    for (const auto& [id, rec] : corpus.dataset.catalog) {
      nlohmann::json j;
      j["item_id"] = id;
      auto& attrs = j["attributes"] = nlohmann::json::array();
      for (const auto& [n, v] : rec.attributes) attrs.push_back({n, v});
      out << j.dump() << '\n';
    }
  }
  std::string log_path = (fs::path(cfg.out_dir) / "interactions.jsonl").string();
  {
    std::ofstream out(log_path);
    for (const auto& [user, hist] : corpus.dataset.histories) {
      for (const auto& ev : hist.events) {
        nlohmann::json j;
        j["user_id"] = user;
        j["item_id"] = ev.item_id;
        j["timestamp"] = ev.timestamp;
        out << j.dump() << '\n';
      }
    }
  }
  std::string vec_path = (fs::path(cfg.out_dir) / "vectors.tsv").string();
  {
    std::ofstream out(vec_path);
    char buf[64];
    for (std::size_t i = 0; i < corpus.embeddings.size(); ++i) {
      out << corpus.embeddings.id(i);
      for (double x : corpus.embeddings.row(i)) {
        std::snprintf(buf, sizeof(buf), "\t%.17g", x);
        out << buf;
      }
      out << '\n';
    }
  }
  std::string truth_path = (fs::path(cfg.out_dir) / "ground_truth.json").string();
  {
    nlohmann::json j;
    for (const auto& [user, items] : corpus.ground_truth) {
      j[user] = std::vector<std::string>(items.begin(), items.end());
    }
    std::ofstream out(truth_path);
    out << j.dump(2) << '\n';
  }
  write_manifest((fs::path(cfg.out_dir) / "synth_manifest.json").string(),
                 {catalog_path, log_path, vec_path, truth_path});
  return catalog_path;
}

std::map<std::string, double> train_and_eval(
    const std::vector<SplitExample>& splits,
    const std::vector<std::string>& item_ids,
    const EmbeddingMatrix* filter_mat, bool filter_enabled, double tau,
    const TrainConfig& train_cfg, const std::vector<std::size_t>& ks) {
  auto train_examples = split_examples(splits, SplitTag::kTrain);
  FilterConfig fc{filter_enabled, tau};
  auto result =
      train_recommender(train_examples, item_ids, fc, train_cfg, filter_mat);
  auto ranked = rank_split(splits, SplitTag::kTest, result.model.table,
                           filter_mat, filter_enabled, tau, false);
  return aggregate(ranked, ks).metrics;
}

std::vector<SweepRow> sweep_over(const std::vector<SplitExample>& splits,
                                 const std::vector<std::string>& item_ids,
                                 const EmbeddingMatrix& filter_mat,
                                 const std::vector<double>& grid,
                                 const TrainConfig& train_cfg,
                                 const std::vector<std::size_t>& ks) {
  std::vector<SweepRow> rows;
  for (double tau : grid) {
    SweepRow row;
    row.tau = tau;
    row.metrics = train_and_eval(splits, item_ids, &filter_mat, true, tau,
                                 train_cfg, ks);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string run_sweep(const RunConfig& cfg) {
  auto ds = load_dataset(cfg);
  auto splits = read_splits((fs::path(cfg.out_dir) / "splits.jsonl").string());
  auto fmat = provider_matrix(cfg, ds.catalog);
  auto ids = catalog_ids(ds.catalog);
  TrainConfig tc{cfg.dim, cfg.lr, cfg.batch_size, cfg.epochs, cfg.temperature,
                 cfg.seed};
  auto rows = sweep_over(splits, ids, fmat, cfg.sweep_grid, tc, cfg.ks);

  fs::create_directories(cfg.out_dir);
  std::string out_path = (fs::path(cfg.out_dir) / "sweep.csv").string();
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write sweep output: " + out_path);
  out << "tau";
  std::vector<std::string> metric_names;
  for (std::size_t k : cfg.ks) {
    metric_names.push_back("recall@" + std::to_string(k));
    metric_names.push_back("ndcg@" + std::to_string(k));
  }
  for (const auto& name : metric_names) out << ',' << name;
  out << '\n';
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.2f", row.tau);
    out << buf;
    for (const auto& name : metric_names) {
      std::snprintf(buf, sizeof(buf), ",%.6f", row.metrics.at(name));
      out << buf;
    }
    out << '\n';
  }
  out.close();
  write_manifest((fs::path(cfg.out_dir) / "sweep_manifest.json").string(),
                 {out_path});
  return out_path;
}

}  // namespace consrec
