#include "consrec/eval.hpp"

#include <cmath>
#include <random>

#include "consrec/errors.hpp"
#include "consrec/graph.hpp"
#include "consrec/rng.hpp"

namespace consrec {

double recall_at_k(std::size_t rank, std::size_t k) {
  return rank <= k ? 1.0 : 0.0;
}

double ndcg_at_k(std::size_t rank, std::size_t k) {
  if (rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

EvalReport aggregate(const std::vector<RankingResult>& results,
                     const std::vector<std::size_t>& ks) {
  if (results.empty()) throw DataError("aggregate: empty results");
  EvalReport report;
  report.n_users = results.size();
  for (const auto& r : results) report.per_user.emplace_back(r.user_id, r.rank);
  for (std::size_t k : ks) {
    double recall = 0.0, ndcg = 0.0;
    for (const auto& r : results) {
      recall += recall_at_k(r.rank, k);
      ndcg += ndcg_at_k(r.rank, k);
    }
    double n = static_cast<double>(results.size());
    report.metrics["recall@" + std::to_string(k)] = recall / n;
    report.metrics["ndcg@" + std::to_string(k)] = ndcg / n;
  }
  return report;
}

double permutation_test(std::span<const double> per_user_a,
                        std::span<const double> per_user_b,
                        std::size_t resamples, std::uint64_t seed) {
  if (per_user_a.size() != per_user_b.size()) {
    throw DataError("permutation_test: length mismatch");
  }
  if (per_user_a.size() < 2) {
    throw DataError("permutation_test: need at least 2 pairs");
  }
  std::size_t n = per_user_a.size();
  std::vector<double> diffs(n);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diffs[i] = per_user_a[i] - per_user_b[i];
    observed += diffs[i];
  }
  observed = std::abs(observed / static_cast<double>(n));

  auto rng = stream_rng(seed, "perm-test");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bool flip = (rng() & 1) != 0;
      sum += flip ? -diffs[i] : diffs[i];
    }
    if (std::abs(sum / static_cast<double>(n)) >= observed) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(1 + resamples);
}

SimilarityReport similarity_report(
    const std::vector<std::pair<std::string, std::vector<std::string>>>&
        retained_per_user,
    const std::map<std::string, std::string>& targets,
    const EmbeddingMatrix& matrix) {
  SimilarityReport report;
  double sum_intra = 0.0, sum_target = 0.0;
  for (const auto& [user_id, retained] : retained_per_user) {
    if (retained.empty()) throw DataError("similarity_report: empty retained");
    SimilarityRow row;
    row.user_id = user_id;
    // Distinct items for the pairwise mean.
    std::vector<std::string> items;
    for (const auto& id : retained) {
      if (std::find(items.begin(), items.end(), id) == items.end()) {
        items.push_back(id);
      }
    }
    if (items.size() < 2) {
      row.intra_sim = 1.0;
      row.single_item = true;
    } else {
      double s = 0.0;
      std::size_t pairs = 0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t j = i + 1; j < items.size(); ++j) {
          s += cosine(matrix.vec(items[i]), matrix.vec(items[j]));
          ++pairs;
        }
      }
      row.intra_sim = s / static_cast<double>(pairs);
    }
    auto target_it = targets.find(user_id);
    if (target_it == targets.end()) {
      throw DataError("similarity_report: no target for user " + user_id);
    }
    auto target_vec = matrix.vec(target_it->second);
    double t = 0.0;
    for (const auto& id : items) t += cosine(matrix.vec(id), target_vec);
    row.target_sim = t / static_cast<double>(items.size());

    sum_intra += row.intra_sim;
    sum_target += row.target_sim;
    report.rows.push_back(std::move(row));
  }
  if (!report.rows.empty()) {
    report.mean_intra = sum_intra / static_cast<double>(report.rows.size());
    report.mean_target = sum_target / static_cast<double>(report.rows.size());
  }
  return report;
}

}  // namespace consrec
