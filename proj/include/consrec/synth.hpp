#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "consrec/embed.hpp"
#include "consrec/types.hpp"

namespace consrec {

// Synthetic instance with a planted preference set P and noise set N:
// (i) every pair in P has cosine >= tau, (ii) every P x N pair has
// cosine < tau, (iii) every noise-only component has size < |P|.
struct PlantedInstance {
  std::set<std::string> preferred;
  std::set<std::string> noise;
  EmbeddingMatrix embeddings;
  double tau = 0.7;
  InteractionHistory history;
};

struct AssumptionReport {
  bool holds = false;
  std::vector<std::string> violations;
};

// Preferred vectors are sampled in a spherical cap of half-angle
// arccos(tau)/2 around a random center, which makes every pairwise cosine
// >= tau constructively; noise vectors are rejection-sampled until (ii)
// and (iii) hold. Throws NumericError after max_attempts rejections.
PlantedInstance gen_planted(std::size_t m, std::size_t n_noise, double tau,
                            std::size_t dim, std::uint64_t seed,
                            std::size_t max_attempts = 10000);

// Exhaustive O(n^2) check of assumptions (i)-(iii).
AssumptionReport verify_assumptions(const PlantedInstance& inst);

struct NoisyCorpusConfig {
  std::size_t n_users = 100;
  std::size_t n_clusters = 4;
  std::size_t items_per_cluster = 25;
  std::size_t history_len = 12;
  double noise_rate = 0.3;  // in [0, 1)
  std::size_t dim = 64;
  std::uint64_t seed = 0;
};

struct NoisyCorpus {
  Dataset dataset;
  EmbeddingMatrix embeddings;
  // Per user: the home-cluster items appearing in their history.
  std::map<std::string, std::set<std::string>> ground_truth;
};

// Each user draws home-cluster items with probability 1 - noise_rate and
// uniform off-cluster items otherwise. Cluster centers are orthonormal;
// item vectors are perturbed centers, re-normalized. Item attributes name
// the cluster so text providers also separate clusters.
NoisyCorpus gen_noisy_corpus(const NoisyCorpusConfig& cfg);

}  // namespace consrec
