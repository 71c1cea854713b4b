#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "consrec/embed.hpp"
#include "consrec/types.hpp"

namespace consrec {

// Cosine similarity clamped to [-1, 1]. Throws DataError on zero vectors.
double cosine(std::span<const double> a, std::span<const double> b);

// Per-user item graph: nodes are distinct history items, edges connect
// pairs with similarity >= tau. Dense adjacency; histories are short.
struct SimilarityGraph {
  std::vector<std::string> nodes;
  double tau = 0.7;
  std::vector<double> sim;     // n*n, symmetric
  std::vector<std::uint8_t> edge;  // n*n, self-loops excluded

  std::size_t size() const { return nodes.size(); }
  double sim_at(std::size_t i, std::size_t j) const {
    return sim[i * size() + j];
  }
  bool edge_at(std::size_t i, std::size_t j) const {
    return edge[i * size() + j] != 0;
  }
};

SimilarityGraph build_graph(const InteractionHistory& history,
                            const EmbeddingMatrix& matrix, double tau,
                            bool exclude_last);

// Graph from a precomputed symmetric similarity matrix (row-major n*n).
SimilarityGraph graph_from_similarities(std::vector<std::string> nodes,
                                        std::vector<double> sim, double tau);

struct ComponentSet {
  std::vector<std::vector<std::size_t>> components;  // discovery order
  std::size_t max_index = 0;
};

// BFS from unvisited nodes in node order.
ComponentSet connected_components(const SimilarityGraph& g);

// Largest component; ties broken by the component holding the most
// recently interacted member, then by smallest lexicographic item id.
std::vector<std::size_t> select_max_component(const ComponentSet& cs,
                                              const InteractionHistory& history,
                                              const SimilarityGraph& g);

struct FilteredHistory {
  std::vector<Event> events;
  std::set<std::string> retained_items;
};

FilteredHistory filter_history(const InteractionHistory& history,
                               const std::vector<std::size_t>& retained,
                               const SimilarityGraph& g);

struct DenoiseResult {
  FilteredHistory filtered;
  std::vector<std::string> removed_items;     // distinct, node order
  std::vector<std::size_t> component_sizes;   // discovery order
};

DenoiseResult denoise(const InteractionHistory& history,
                      const EmbeddingMatrix& matrix, double tau,
                      bool exclude_last);

// Per-user denoising across a whole dataset. The parallel kernel and the
// serial reference produce identical results; the serial path is kept for
// testing and benchmarking.
std::vector<DenoiseResult> denoise_all(
    const std::vector<const InteractionHistory*>& histories,
    const EmbeddingMatrix& matrix, double tau, bool exclude_last);
std::vector<DenoiseResult> denoise_all_serial(
    const std::vector<const InteractionHistory*>& histories,
    const EmbeddingMatrix& matrix, double tau, bool exclude_last);

}  // namespace consrec
