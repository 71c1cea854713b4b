#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "consrec/embed.hpp"
#include "consrec/recommender.hpp"

namespace consrec {

double recall_at_k(std::size_t rank, std::size_t k);
// 1/log2(rank+1) within the cutoff; IDCG is 1 (single relevant item).
double ndcg_at_k(std::size_t rank, std::size_t k);

struct EvalReport {
  std::vector<std::pair<std::string, std::size_t>> per_user;  // (user, rank)
  std::map<std::string, double> metrics;  // "recall@10", "ndcg@20", ...
  std::size_t n_users = 0;
  std::optional<std::pair<std::string, double>> significance;
};

EvalReport aggregate(const std::vector<RankingResult>& results,
                     const std::vector<std::size_t>& ks);

// Paired sign-flip permutation test on per-user differences; two-sided
// p = (1 + #{|perm mean| >= |observed mean|}) / (1 + resamples).
double permutation_test(std::span<const double> per_user_a,
                        std::span<const double> per_user_b,
                        std::size_t resamples, std::uint64_t seed);

struct SimilarityRow {
  std::string user_id;
  double intra_sim = 0.0;   // mean pairwise cosine among retained items
  double target_sim = 0.0;  // mean cosine of retained items to the target
  bool single_item = false;  // intra_sim is 1.0 by convention
};

struct SimilarityReport {
  std::vector<SimilarityRow> rows;
  double mean_intra = 0.0;
  double mean_target = 0.0;
};

SimilarityReport similarity_report(
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        retained_per_user,
    const std::map<std::string, std::string>& targets,
    const EmbeddingMatrix& matrix);

}  // namespace consrec
