#include "consrec/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>

#include "consrec/catalog.hpp"
#include "consrec/errors.hpp"
#include "consrec/rng.hpp"

namespace consrec {

void EmbeddingMatrix::add(const std::string& item_id,
                          std::span<const double> vec) {
  if (vec.size() != dim_) {
    throw DataError("dimension mismatch for item " + item_id + ": got " +
                    std::to_string(vec.size()) + ", want " +
                    std::to_string(dim_));
  }
  if (index_.contains(item_id)) throw DataError("duplicate item: " + item_id);
  index_.emplace(item_id, ids_.size());
  ids_.push_back(item_id);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::optional<std::size_t> EmbeddingMatrix::find(
    const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingMatrix::at(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) throw UnknownItem(item_id);
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::normalized() const {
  EmbeddingMatrix out = *this;
  for (std::size_t i = 0; i < out.size(); ++i) normalize_in_place(out.row_mut(i));
  return out;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void normalize_in_place(std::span<double> v) {
  double n = l2_norm(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

EmbeddingMatrix embed_from_file(const std::string& vector_path) {
  std::ifstream in(vector_path);
  if (!in) throw DataError("cannot open vector file: " + vector_path);
  EmbeddingMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string item_id;
    if (!std::getline(ss, item_id, '\t') || item_id.empty()) {
      throw ParseError(vector_path, line_no, "missing item id");
    }
    std::vector<double> vec;
    std::string field;
    while (std::getline(ss, field, '\t')) {
      try {
        std::size_t pos = 0;
        vec.push_back(std::stod(field, &pos));
        if (pos != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError(vector_path, line_no, "bad float: " + field);
      }
    }
    if (vec.empty()) throw ParseError(vector_path, line_no, "no values");
    if (m.size() == 0) m = EmbeddingMatrix(vec.size());
    if (vec.size() != m.dim()) {
      throw ParseError(vector_path, line_no,
                       "dimension mismatch: got " + std::to_string(vec.size()) +
                           ", want " + std::to_string(m.dim()));
    }
    m.add(item_id, vec);
  }
  return m;
}

void write_vectors_binary(const EmbeddingMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vectors: " + path);
  out.write("CGV1", 4);
  std::uint32_t dim = static_cast<std::uint32_t>(m.dim());
  std::uint32_t count = static_cast<std::uint32_t>(m.size());
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::string& id = m.id(i);
    std::uint16_t len = static_cast<std::uint16_t>(id.size());
    out.write(reinterpret_cast<const char*>(&len), 2);
    out.write(id.data(), len);
    for (double x : m.row(i)) {
      float f = static_cast<float>(x);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
}

EmbeddingMatrix read_vectors_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vectors: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CGV1", 4) != 0) {
    throw DataError("bad magic in " + path);
  }
  std::uint32_t dim = 0, count = 0;
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in) throw DataError("truncated header in " + path);
  EmbeddingMatrix m(dim);
  std::vector<double> vec(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint16_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 2);
    std::string id(len, '\0');
    in.read(id.data(), len);
    for (std::uint32_t d = 0; d < dim; ++d) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), 4);
      vec[d] = f;
    }
    if (!in) throw DataError("truncated record in " + path);
    m.add(id, vec);
  }
  return m;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

// token -> tf-idf weight, over id-free verbalizations.
std::map<std::string, double> tfidf_weights(
    const ItemRecord& item, const std::map<std::string, std::size_t>& df,
    std::size_t n_docs) {
  std::map<std::string, double> w;
  for (const auto& tok : tokenize(verbalize_item(item, false))) ++w[tok];
  for (auto& [tok, tf] : w) {
    double idf =
        std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df.at(tok)))) + 1.0;
    tf = tf * idf;
  }
  return w;
}

std::map<std::string, std::size_t> document_frequencies(const Catalog& catalog) {
  std::map<std::string, std::size_t> df;
  for (const auto& [_, item] : catalog) {
    auto tokens = tokenize(verbalize_item(item, false));
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (const auto& tok : tokens) ++df[tok];
  }
  return df;
}

}  // namespace

TfidfResult embed_tfidf(const Catalog& catalog, std::size_t dim,
                        std::uint64_t seed) {
  if (catalog.empty()) throw DataError("embed_tfidf: empty catalog");
  auto df = document_frequencies(catalog);
  TfidfResult result;
  result.matrix = EmbeddingMatrix(dim);
  std::vector<double> vec(dim);
  for (const auto& [item_id, item] : catalog) {
    std::fill(vec.begin(), vec.end(), 0.0);
    auto weights = tfidf_weights(item, df, catalog.size());
    for (const auto& [tok, w] : weights) {
      std::uint64_t h = fnv1a64(tok) ^ (seed * 0x9e3779b97f4a7c15ULL);
      h ^= h >> 33;
      h *= 0xff51afd7ed558ccdULL;
      h ^= h >> 33;
      double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
      vec[h % dim] += sign * w;
    }
    if (weights.empty()) result.empty_text_items.push_back(item_id);
    normalize_in_place(vec);
    result.matrix.add(item_id, vec);
  }
  return result;
}

double tfidf_cosine_exact(const Catalog& catalog, const std::string& a,
                          const std::string& b) {
  auto df = document_frequencies(catalog);
  auto wa = tfidf_weights(catalog.at(a), df, catalog.size());
  auto wb = tfidf_weights(catalog.at(b), df, catalog.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [tok, w] : wa) {
    na += w * w;
    auto it = wb.find(tok);
    if (it != wb.end()) dot += w * it->second;
  }
  for (const auto& [_, w] : wb) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> encode_user(std::span<const std::string> history_item_ids,
                                const EmbeddingMatrix& matrix) {
  if (history_item_ids.empty()) throw DataError("encode_user: empty history");
  std::vector<double> mean(matrix.dim(), 0.0);
  std::vector<double> tmp(matrix.dim());
  for (const auto& id : history_item_ids) {
    auto row = matrix.vec(id);
    std::copy(row.begin(), row.end(), tmp.begin());
    normalize_in_place(tmp);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += tmp[d];
  }
  for (double& x : mean) x /= static_cast<double>(history_item_ids.size());
  normalize_in_place(mean);
  return mean;
}

namespace {

double batch_loss(std::span<const TrainExample> batch,
                  const TrainableModel& model, std::vector<double>* grad) {
  if (batch.size() < 2) throw DataError("nip_loss: batch size must be >= 2");
  const std::size_t B = batch.size();
  const std::size_t dim = model.table.dim();
  const double T = model.temperature;

  std::vector<std::vector<double>> users(B);
  std::vector<std::size_t> targets(B);
  for (std::size_t b = 0; b < B; ++b) {
    users[b] = encode_user(batch[b].context, model.table);
    targets[b] = model.table.at(batch[b].target);
  }

  double loss = 0.0;
  // probs[b][j]: softmax over the batch's target items for example b.
  std::vector<std::vector<double>> probs(B, std::vector<double>(B));
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> logits(B);
    double max_logit = -1e300;
    for (std::size_t j = 0; j < B; ++j) {
      auto v = model.table.row(targets[j]);
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += users[b][d] * v[d];
      logits[j] = dot / T;
      max_logit = std::max(max_logit, logits[j]);
    }
    double lse = 0.0;
    for (std::size_t j = 0; j < B; ++j) lse += std::exp(logits[j] - max_logit);
    lse = max_logit + std::log(lse);
    loss += lse - logits[b];
    for (std::size_t j = 0; j < B; ++j) probs[b][j] = std::exp(logits[j] - lse);
  }
  loss /= static_cast<double>(B);

  if (grad == nullptr) return loss;

  std::vector<double> g_u(dim);
  std::vector<double> w_norm(dim);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(g_u.begin(), g_u.end(), 0.0);
    for (std::size_t j = 0; j < B; ++j) {
      double coef = (probs[b][j] - (j == b ? 1.0 : 0.0)) / (T * B);
      // Target-side gradient.
      auto v = model.table.row(targets[j]);
      double* gt = grad->data() + targets[j] * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        gt[d] += coef * users[b][d];
        g_u[d] += coef * v[d];
      }
    }
    // Backprop through u = m / ||m||, m = mean of normalized context rows.
    const auto& ctx = batch[b].context;
    const std::size_t k = ctx.size();
    // m's norm: recompute the pre-normalization mean.
    std::vector<double> m(dim, 0.0);
    for (const auto& id : ctx) {
      auto row = model.table.row(model.table.at(id));
      std::copy(row.begin(), row.end(), w_norm.begin());
      normalize_in_place(w_norm);
      for (std::size_t d = 0; d < dim; ++d) m[d] += w_norm[d];
    }
    for (double& x : m) x /= static_cast<double>(k);
    double m_norm = l2_norm(m);
    const auto& u = users[b];
    double gu_dot_u = 0.0;
    for (std::size_t d = 0; d < dim; ++d) gu_dot_u += g_u[d] * u[d];
    std::vector<double> g_m(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      g_m[d] = (g_u[d] - gu_dot_u * u[d]) / m_norm;
    }
    for (const auto& id : ctx) {
      std::size_t idx = model.table.at(id);
      auto row = model.table.row(idx);
      double w_len = l2_norm(row);
      std::copy(row.begin(), row.end(), w_norm.begin());
      normalize_in_place(w_norm);
      double gm_dot_w = 0.0;
      for (std::size_t d = 0; d < dim; ++d) gm_dot_w += g_m[d] * w_norm[d];
      double* gw = grad->data() + idx * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        gw[d] += (g_m[d] - gm_dot_w * w_norm[d]) / (w_len * k);
      }
    }
  }
  return loss;
}

}  // namespace

double nip_loss(std::span<const TrainExample> batch,
                const TrainableModel& model) {
  return batch_loss(batch, model, nullptr);
}

double nip_loss_with_grad(std::span<const TrainExample> batch,
                          const TrainableModel& model,
                          std::vector<double>& grad) {
  return batch_loss(batch, model, &grad);
}

TrainResult train_nip(std::span<const TrainExample> examples,
                      std::span<const std::string> item_ids,
                      const TrainConfig& config) {
  if (examples.empty()) throw DataError("train_nip: empty train split");
  TrainResult result;
  result.model.temperature = config.temperature;
  result.model.seed = config.seed;
  result.model.table = EmbeddingMatrix(config.dim);

  auto init_rng = stream_rng(config.seed, "nip-init");
  std::uniform_real_distribution<double> init(-1.0 / std::sqrt(config.dim),
                                              1.0 / std::sqrt(config.dim));
  std::vector<double> vec(config.dim);
  for (const auto& id : item_ids) {
    for (double& x : vec) x = init(init_rng);
    result.model.table.add(id, vec);
  }

  auto& params = result.model.table.data();
  std::vector<double> grad(params.size());
  std::vector<double> adam_m(params.size(), 0.0);
  std::vector<double> adam_v(params.size(), 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t step = 0;

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto shuffle_rng = stream_rng(config.seed, "nip-shuffle");

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start + 1 < order.size();
         start += config.batch_size) {
      std::size_t end = std::min(start + config.batch_size, order.size());
      if (end - start < 2) break;  // in-batch negatives need >= 2 examples
      std::vector<TrainExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);

      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = nip_loss_with_grad(batch, result.model, grad);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at step " + std::to_string(step));
      }
      epoch_loss += loss;
      ++n_batches;
      ++step;
      double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        adam_m[p] = beta1 * adam_m[p] + (1.0 - beta1) * grad[p];
        adam_v[p] = beta2 * adam_v[p] + (1.0 - beta2) * grad[p] * grad[p];
        params[p] -= config.lr * (adam_m[p] / bc1) /
                     (std::sqrt(adam_v[p] / bc2) + eps);
        if (!std::isfinite(params[p])) {
          throw NumericError("non-finite parameter at step " +
                             std::to_string(step));
        }
      }
    }
    result.epoch_losses.push_back(n_batches ? epoch_loss / n_batches : 0.0);
  }
  return result;
}

void save_model(const TrainableModel& model, const std::string& vector_path,
                const std::string& config_path) {
  write_vectors_binary(model.table, vector_path);
  nlohmann::json j;
  j["temperature"] = model.temperature;
  j["seed"] = model.seed;
  j["dim"] = model.table.dim();
  std::ofstream out(config_path);
  if (!out) throw DataError("cannot write model config: " + config_path);
  out << j.dump(2) << '\n';
}

TrainableModel load_model(const std::string& vector_path,
                          const std::string& config_path) {
  TrainableModel model;
  model.table = read_vectors_binary(vector_path);
  std::ifstream in(config_path);
  if (!in) throw DataError("cannot open model config: " + config_path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, true, true);
  model.temperature = j.at("temperature").get<double>();
  model.seed = j.at("seed").get<std::uint64_t>();
  return model;
}

}  // namespace consrec
