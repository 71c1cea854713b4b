#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "consrec/types.hpp"

namespace consrec {

// Dense row-major item-id keyed matrix. Insertion order is preserved so
// runs are reproducible.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }

  // Throws DataError on dim mismatch or duplicate id.
  void add(const std::string& item_id, std::span<const double> vec);

  std::optional<std::size_t> find(const std::string& item_id) const;
  std::size_t at(const std::string& item_id) const;  // throws UnknownItem
  const std::string& id(std::size_t i) const { return ids_[i]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<double> row_mut(std::size_t i) {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const double> vec(const std::string& item_id) const {
    return row(at(item_id));
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // Every row scaled to unit L2 norm; zero rows left as-is.
  EmbeddingMatrix normalized() const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

double l2_norm(std::span<const double> v);
void normalize_in_place(std::span<double> v);

// TSV "item_id\tf1...\tfd". No normalization applied.
EmbeddingMatrix embed_from_file(const std::string& vector_path);

// Binary format: magic "CGV1", u32 dim, u32 count, then per item
// (u16 id length, id bytes, dim little-endian float32).
void write_vectors_binary(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix read_vectors_binary(const std::string& path);

struct TfidfResult {
  EmbeddingMatrix matrix;
  std::vector<std::string> empty_text_items;  // flagged zero vectors
};

// TF-IDF over id-free item verbalizations, projected by signed feature
// hashing into dim dimensions, rows L2-normalized.
// idf = ln((1+N)/(1+df)) + 1.
TfidfResult embed_tfidf(const Catalog& catalog, std::size_t dim,
                        std::uint64_t seed);

// Exact sparse TF-IDF cosine between two items, used as the hashing oracle.
double tfidf_cosine_exact(const Catalog& catalog, const std::string& a,
                          const std::string& b);

// Mean of the L2-normalized item vectors, re-normalized to unit L2.
std::vector<double> encode_user(std::span<const std::string> history_item_ids,
                                const EmbeddingMatrix& matrix);

struct TrainExample {
  std::vector<std::string> context;
  std::string target;
};

struct TrainableModel {
  EmbeddingMatrix table;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

// Mean negative log softmax of the true target against in-batch negatives;
// logits are (u . v_j) / temperature.
double nip_loss(std::span<const TrainExample> batch, const TrainableModel& model);

// Same loss; accumulates d(loss)/d(table) into grad (table-shaped, zeroed
// by the caller).
double nip_loss_with_grad(std::span<const TrainExample> batch,
                          const TrainableModel& model,
                          std::vector<double>& grad);

struct TrainConfig {
  std::size_t dim = 64;
  double lr = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  TrainableModel model;
  std::vector<double> epoch_losses;
};

// Adam (beta1=0.9, beta2=0.999, eps=1e-8) on nip_loss over the given
// examples; item table initialized uniform in [-1/sqrt(dim), +1/sqrt(dim)].
// Deterministic per seed. item_ids fixes the table's row universe.
TrainResult train_nip(std::span<const TrainExample> examples,
                      std::span<const std::string> item_ids,
                      const TrainConfig& config);

void save_model(const TrainableModel& model, const std::string& vector_path,
                const std::string& config_path);
TrainableModel load_model(const std::string& vector_path,
                          const std::string& config_path);

}  // namespace consrec
