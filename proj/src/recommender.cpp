#include "consrec/recommender.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "consrec/errors.hpp"

namespace consrec {

std::vector<ScoredItem> score_candidates(std::span<const double> user_vec,
                                         const EmbeddingMatrix& matrix) {
  if (user_vec.size() != matrix.dim()) {
    throw DataError("score_candidates: dimension mismatch");
  }
  std::vector<ScoredItem> out;
  out.reserve(matrix.size());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto row = matrix.row(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < user_vec.size(); ++d) dot += user_vec[d] * row[d];
    out.push_back({matrix.id(i), dot});
  }
  return out;
}

std::vector<double> softmax_scores(const std::vector<ScoredItem>& scored) {
  double max_score = -1e300;
  for (const auto& s : scored) max_score = std::max(max_score, s.score);
  std::vector<double> probs(scored.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    probs[i] = std::exp(scored[i].score - max_score);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

RankingResult rank_target(std::span<const std::string> context_ids,
                          const std::string& target_id,
                          const EmbeddingMatrix& matrix, RankMode mode,
                          double tau, std::size_t top_k,
                          const EmbeddingMatrix* filter_matrix,
                          const std::vector<std::string>* mask) {
  if (context_ids.empty()) throw DataError("rank_target: empty context");
  std::vector<std::string> context(context_ids.begin(), context_ids.end());
  if (mode == RankMode::kFiltered) {
    const EmbeddingMatrix& fm = filter_matrix ? *filter_matrix : matrix;
    InteractionHistory hist;
    for (std::size_t i = 0; i < context.size(); ++i) {
      hist.events.push_back({context[i], static_cast<std::int64_t>(i)});
    }
    auto result = denoise(hist, fm, tau, /*exclude_last=*/false);
    context.clear();
    for (const auto& ev : result.filtered.events) context.push_back(ev.item_id);
  }

  auto user = encode_user(context, matrix);
  auto scored = score_candidates(user, matrix);

  if (mask != nullptr) {
    std::erase_if(scored, [&](const ScoredItem& s) {
      return s.item_id != target_id &&
             std::find(mask->begin(), mask->end(), s.item_id) != mask->end();
    });
  }

  double target_score = 0.0;
  bool found = false;
  for (const auto& s : scored) {
    if (s.item_id == target_id) {
      target_score = s.score;
      found = true;
      break;
    }
  }
  if (!found) throw UnknownItem(target_id);

  // Ties broken item_id ascending: an item outranks the target when its
  // score is higher, or equal with a smaller id.
  std::size_t rank = 1;
  for (const auto& s : scored) {
    if (s.item_id == target_id) continue;
    if (s.score > target_score ||
        (s.score == target_score && s.item_id < target_id)) {
      ++rank;
    }
  }

  std::sort(scored.begin(), scored.end(),
            [](const ScoredItem& a, const ScoredItem& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.item_id < b.item_id;
            });
  if (scored.size() > top_k) scored.resize(top_k);

  RankingResult result;
  result.target_id = target_id;
  result.rank = rank;
  result.top_k = std::move(scored);
  return result;
}

std::vector<TrainExample> denoise_examples(
    std::span<const TrainExample> examples, const EmbeddingMatrix& matrix,
    double tau) {
  std::vector<TrainExample> out(examples.size());
  std::exception_ptr first_error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(examples.size());
       ++i) {
    try {
      InteractionHistory hist;
      for (std::size_t p = 0; p < examples[i].context.size(); ++p) {
        hist.events.push_back(
            {examples[i].context[p], static_cast<std::int64_t>(p)});
      }
      auto result = denoise(hist, matrix, tau, /*exclude_last=*/false);
      out[i].target = examples[i].target;
      for (const auto& ev : result.filtered.events) {
        out[i].context.push_back(ev.item_id);
      }
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

TrainResult train_recommender(std::span<const TrainExample> examples,
                              std::span<const std::string> item_ids,
                              const FilterConfig& filter_config,
                              const TrainConfig& model_config,
                              const EmbeddingMatrix* filter_matrix) {
  if (!filter_config.enabled) {
    return train_nip(examples, item_ids, model_config);
  }
  if (filter_matrix == nullptr) {
    throw ConfigError("train_recommender: filtering needs a filter matrix");
  }
  auto denoised = denoise_examples(examples, *filter_matrix, filter_config.tau);
  return train_nip(denoised, item_ids, model_config);
}

}  // namespace consrec
