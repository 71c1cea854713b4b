#include "consrec/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "consrec/errors.hpp"

namespace consrec {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

void fill_edges(SimilarityGraph& g) {
  std::size_t n = g.size();
  g.edge.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && g.sim[i * n + j] >= g.tau) g.edge[i * n + j] = 1;
    }
  }
}

}  // namespace

SimilarityGraph build_graph(const InteractionHistory& history,
                            const EmbeddingMatrix& matrix, double tau,
                            bool exclude_last) {
  if (tau < -1.0 || tau > 1.0) throw ConfigError("tau must be in [-1, 1]");
  SimilarityGraph g;
  g.tau = tau;
  // Distinct items in first-occurrence order.
  std::vector<std::string> nodes;
  for (const auto& ev : history.events) {
    if (std::find(nodes.begin(), nodes.end(), ev.item_id) == nodes.end()) {
      nodes.push_back(ev.item_id);
    }
  }
  if (exclude_last && !history.events.empty()) {
    const std::string& last = history.events.back().item_id;
    bool seen_earlier = false;
    for (std::size_t i = 0; i + 1 < history.events.size(); ++i) {
      if (history.events[i].item_id == last) {
        seen_earlier = true;
        break;
      }
    }
    if (!seen_earlier) std::erase(nodes, last);
  }
  if (nodes.empty()) throw DataError("build_graph: no nodes after exclusion");
  g.nodes = std::move(nodes);

  std::size_t n = g.size();
  std::vector<std::span<const double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = matrix.vec(g.nodes[i]);
  g.sim.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    g.sim[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = cosine(rows[i], rows[j]);
      g.sim[i * n + j] = s;
      g.sim[j * n + i] = s;
    }
  }
  fill_edges(g);
  return g;
}

SimilarityGraph graph_from_similarities(std::vector<std::string> nodes,
                                        std::vector<double> sim, double tau) {
  if (tau < -1.0 || tau > 1.0) throw ConfigError("tau must be in [-1, 1]");
  std::size_t n = nodes.size();
  if (sim.size() != n * n) throw DataError("similarity matrix size mismatch");
  SimilarityGraph g;
  g.nodes = std::move(nodes);
  g.tau = tau;
  g.sim = std::move(sim);
  fill_edges(g);
  return g;
}

ComponentSet connected_components(const SimilarityGraph& g) {
  ComponentSet cs;
  std::size_t n = g.size();
  std::vector<bool> visited(n, false);
  for (std::size_t start = 0; start < n; ++start) {
    if (visited[start]) continue;
    std::vector<std::size_t> comp;
    std::deque<std::size_t> queue{start};
    visited[start] = true;
    while (!queue.empty()) {
      std::size_t u = queue.front();
      queue.pop_front();
      comp.push_back(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (!visited[v] && g.edge_at(u, v)) {
          visited[v] = true;
          queue.push_back(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    cs.components.push_back(std::move(comp));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < cs.components.size(); ++i) {
    if (cs.components[i].size() > cs.components[best].size()) best = i;
  }
  cs.max_index = best;
  return cs;
}

std::vector<std::size_t> select_max_component(const ComponentSet& cs,
                                              const InteractionHistory& history,
                                              const SimilarityGraph& g) {
  if (cs.components.empty()) throw DataError("no components");
  // Last interaction position per item, for recency tie-breaking.
  std::map<std::string, std::size_t> last_pos;
  for (std::size_t i = 0; i < history.events.size(); ++i) {
    last_pos[history.events[i].item_id] = i + 1;
  }
  auto recency = [&](const std::vector<std::size_t>& comp) {
    std::size_t r = 0;
    for (std::size_t idx : comp) {
      auto it = last_pos.find(g.nodes[idx]);
      if (it != last_pos.end()) r = std::max(r, it->second);
    }
    return r;
  };
  auto min_id = [&](const std::vector<std::size_t>& comp) {
    const std::string* best = &g.nodes[comp.front()];
    for (std::size_t idx : comp) {
      if (g.nodes[idx] < *best) best = &g.nodes[idx];
    }
    return *best;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < cs.components.size(); ++i) {
    const auto& a = cs.components[i];
    const auto& b = cs.components[best];
    if (a.size() != b.size()) {
      if (a.size() > b.size()) best = i;
      continue;
    }
    std::size_t ra = recency(a), rb = recency(b);
    if (ra != rb) {
      if (ra > rb) best = i;
      continue;
    }
    if (min_id(a) < min_id(b)) best = i;
  }
  return cs.components[best];
}

FilteredHistory filter_history(const InteractionHistory& history,
                               const std::vector<std::size_t>& retained,
                               const SimilarityGraph& g) {
  if (retained.empty()) throw DataError("filter_history: empty retained set");
  FilteredHistory out;
  for (std::size_t idx : retained) out.retained_items.insert(g.nodes[idx]);
  for (const auto& ev : history.events) {
    if (out.retained_items.contains(ev.item_id)) out.events.push_back(ev);
  }
  return out;
}

DenoiseResult denoise(const InteractionHistory& history,
                      const EmbeddingMatrix& matrix, double tau,
                      bool exclude_last) {
  SimilarityGraph g = build_graph(history, matrix, tau, exclude_last);
  ComponentSet cs = connected_components(g);
  auto retained = select_max_component(cs, history, g);
  DenoiseResult result;
  result.filtered = filter_history(history, retained, g);
  for (const auto& comp : cs.components) {
    result.component_sizes.push_back(comp.size());
  }
  for (const auto& node : g.nodes) {
    if (!result.filtered.retained_items.contains(node)) {
      result.removed_items.push_back(node);
    }
  }
  return result;
}

std::vector<DenoiseResult> denoise_all_serial(
    const std::vector<const InteractionHistory*>& histories,
    const EmbeddingMatrix& matrix, double tau, bool exclude_last) {
  std::vector<DenoiseResult> out(histories.size());
  for (std::size_t i = 0; i < histories.size(); ++i) {
    out[i] = denoise(*histories[i], matrix, tau, exclude_last);
  }
  return out;
}

std::vector<DenoiseResult> denoise_all(
    const std::vector<const InteractionHistory*>& histories,
    const EmbeddingMatrix& matrix, double tau, bool exclude_last) {
  std::vector<DenoiseResult> out(histories.size());
  std::exception_ptr first_error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(histories.size());
       ++i) {
    try {
      out[i] = denoise(*histories[i], matrix, tau, exclude_last);
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

}  // namespace consrec
