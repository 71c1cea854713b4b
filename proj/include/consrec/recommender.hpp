#pragma once

#include <string>
#include <vector>

#include "consrec/embed.hpp"
#include "consrec/graph.hpp"
#include "consrec/types.hpp"

namespace consrec {

struct ScoredItem {
  std::string item_id;
  double score = 0.0;
};

struct RankingResult {
  std::string user_id;
  std::string target_id;
  std::size_t rank = 0;  // 1-based over the whole catalog
  std::vector<ScoredItem> top_k;
};

// Raw dot products u . v over every item in the matrix, insertion order.
std::vector<ScoredItem> score_candidates(std::span<const double> user_vec,
                                         const EmbeddingMatrix& matrix);

// Softmax of the scores; sums to 1.
std::vector<double> softmax_scores(const std::vector<ScoredItem>& scored);

enum class RankMode { kRaw, kFiltered };

// Full ranking of the target over the entire matrix; ties broken score
// descending then item_id ascending. In filtered mode the context is
// denoised first using filter_matrix (defaults to the scoring matrix when
// null); the held-out target never enters the graph so exclude_last is off.
// When mask is given, its items (except the target) are dropped from the
// candidate set; off by default, full ranking never masks seen items.
RankingResult rank_target(std::span<const std::string> context_ids,
                          const std::string& target_id,
                          const EmbeddingMatrix& matrix, RankMode mode,
                          double tau, std::size_t top_k = 100,
                          const EmbeddingMatrix* filter_matrix = nullptr,
                          const std::vector<std::string>* mask = nullptr);

struct FilterConfig {
  bool enabled = false;
  double tau = 0.7;
};

// Trains the NIP model on raw or denoised contexts. filter_matrix provides
// the similarity space used for denoising.
TrainResult train_recommender(std::span<const TrainExample> examples,
                              std::span<const std::string> item_ids,
                              const FilterConfig& filter_config,
                              const TrainConfig& model_config,
                              const EmbeddingMatrix* filter_matrix = nullptr);

// Applies denoise to each example's context; contexts already exclude the
// target, so graph construction never drops a last event.
std::vector<TrainExample> denoise_examples(
    std::span<const TrainExample> examples, const EmbeddingMatrix& matrix,
    double tau);

}  // namespace consrec
