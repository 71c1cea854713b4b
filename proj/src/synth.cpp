#include "consrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "consrec/errors.hpp"
#include "consrec/graph.hpp"
#include "consrec/rng.hpp"

namespace consrec {

namespace {

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = gauss(rng);
  normalize_in_place(v);
  return v;
}

// Random unit vector orthogonal to c.
std::vector<double> random_orthogonal(std::span<const double> c,
                                      std::mt19937_64& rng) {
  for (;;) {
    auto r = random_unit(c.size(), rng);
    double dot = 0.0;
    for (std::size_t d = 0; d < c.size(); ++d) dot += r[d] * c[d];
    for (std::size_t d = 0; d < c.size(); ++d) r[d] -= dot * c[d];
    double n = l2_norm(r);
    if (n > 1e-9) {
      for (double& x : r) x /= n;
      return r;
    }
  }
}

// Components of the noise-noise subgraph at threshold tau.
std::vector<std::vector<std::size_t>> noise_components(
    const std::vector<std::vector<double>>& vecs, double tau) {
  std::size_t n = vecs.size();
  std::vector<bool> visited(n, false);
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (visited[s]) continue;
    std::vector<std::size_t> comp;
    std::deque<std::size_t> q{s};
    visited[s] = true;
    while (!q.empty()) {
      std::size_t u = q.front();
      q.pop_front();
      comp.push_back(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (!visited[v] && cosine(vecs[u], vecs[v]) >= tau) {
          visited[v] = true;
          q.push_back(v);
        }
      }
    }
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace

PlantedInstance gen_planted(std::size_t m, std::size_t n_noise, double tau,
                            std::size_t dim, std::uint64_t seed,
                            std::size_t max_attempts) {
  if (m < 2) throw ConfigError("gen_planted: m must be >= 2");
  if (dim < 3) throw ConfigError("gen_planted: dim must be >= 3");
  if (tau < -1.0 || tau > 1.0) throw ConfigError("gen_planted: bad tau");

  auto rng = stream_rng(seed, "planted");
  auto center = random_unit(dim, rng);
  double half_angle = std::acos(std::clamp(tau, -1.0, 1.0)) / 2.0;
  std::uniform_real_distribution<double> angle_dist(0.0, half_angle);

  PlantedInstance inst;
  inst.tau = tau;
  inst.embeddings = EmbeddingMatrix(dim);

  std::vector<std::vector<double>> preferred_vecs;
  for (std::size_t i = 0; i < m; ++i) {
    double phi = angle_dist(rng);
    auto r = random_orthogonal(center, rng);
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      x[d] = std::cos(phi) * center[d] + std::sin(phi) * r[d];
    }
    preferred_vecs.push_back(std::move(x));
  }

  std::vector<std::vector<double>> noise_vecs;
  std::size_t attempts = 0;
  for (;;) {
    noise_vecs.clear();
    bool ok = true;
    for (std::size_t i = 0; i < n_noise; ++i) {
      // Per-vector rejection against the preferred set.
      for (;;) {
        if (++attempts > max_attempts) {
          throw NumericError("gen_planted: generation failed after " +
                             std::to_string(max_attempts) + " attempts");
        }
        auto x = random_unit(dim, rng);
        bool cross_ok = true;
        for (const auto& p : preferred_vecs) {
          if (cosine(x, p) >= tau) {
            cross_ok = false;
            break;
          }
        }
        if (cross_ok) {
          noise_vecs.push_back(std::move(x));
          break;
        }
      }
    }
    // Assumption (iii) constrains the whole noise set jointly.
    auto comps = noise_components(noise_vecs, tau);
    for (const auto& c : comps) {
      if (c.size() >= m) {
        ok = false;
        break;
      }
    }
    if (ok) break;
    if (++attempts > max_attempts) {
      throw NumericError("gen_planted: generation failed after " +
                         std::to_string(max_attempts) + " attempts");
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    std::string id = "p" + std::to_string(i);
    inst.preferred.insert(id);
    inst.embeddings.add(id, preferred_vecs[i]);
  }
  for (std::size_t i = 0; i < n_noise; ++i) {
    std::string id = "z" + std::to_string(i);
    inst.noise.insert(id);
    inst.embeddings.add(id, noise_vecs[i]);
  }

  // History interleaves preferred and noise items in shuffled order.
  std::vector<std::string> ids(inst.preferred.begin(), inst.preferred.end());
  ids.insert(ids.end(), inst.noise.begin(), inst.noise.end());
  std::shuffle(ids.begin(), ids.end(), rng);
  inst.history.user_id = "synthetic";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    inst.history.events.push_back({ids[i], static_cast<std::int64_t>(i + 1)});
  }

  auto report = verify_assumptions(inst);
  if (!report.holds) {
    throw NumericError("gen_planted: generated instance fails verification: " +
                       report.violations.front());
  }
  return inst;
}

AssumptionReport verify_assumptions(const PlantedInstance& inst) {
  AssumptionReport report;
  std::vector<std::string> pref(inst.preferred.begin(), inst.preferred.end());
  std::vector<std::string> noise(inst.noise.begin(), inst.noise.end());

  // (i) P forms a complete graph at threshold tau.
  for (std::size_t i = 0; i < pref.size(); ++i) {
    for (std::size_t j = i + 1; j < pref.size(); ++j) {
      if (cosine(inst.embeddings.vec(pref[i]), inst.embeddings.vec(pref[j])) <
          inst.tau) {
        report.violations.push_back("assumption (i): pair (" + pref[i] + "," +
                                    pref[j] + ") below tau");
      }
    }
  }
  // (ii) no P-N edge.
  for (const auto& p : pref) {
    for (const auto& z : noise) {
      if (cosine(inst.embeddings.vec(p), inst.embeddings.vec(z)) >= inst.tau) {
        report.violations.push_back("assumption (ii): cross pair (" + p + "," +
                                    z + ") at or above tau");
      }
    }
  }
  // (iii) max noise-only component size < |P|.
  std::vector<std::vector<double>> noise_vecs;
  for (const auto& z : noise) {
    auto row = inst.embeddings.vec(z);
    noise_vecs.emplace_back(row.begin(), row.end());
  }
  for (const auto& comp : noise_components(noise_vecs, inst.tau)) {
    if (comp.size() >= pref.size()) {
      report.violations.push_back(
          "assumption (iii): noise component of size " +
          std::to_string(comp.size()) + " >= m=" +
          std::to_string(pref.size()));
    }
  }
  report.holds = report.violations.empty();
  return report;
}

NoisyCorpus gen_noisy_corpus(const NoisyCorpusConfig& cfg) {
  if (cfg.noise_rate < 0.0 || cfg.noise_rate >= 1.0) {
    throw ConfigError("gen_noisy_corpus: noise_rate must be in [0, 1)");
  }
  if (cfg.n_users == 0 || cfg.n_clusters == 0 || cfg.items_per_cluster == 0 ||
      cfg.history_len == 0 || cfg.dim == 0) {
    throw ConfigError("gen_noisy_corpus: all counts must be positive");
  }
  if (cfg.dim < cfg.n_clusters) {
    throw ConfigError("gen_noisy_corpus: dim must be >= n_clusters");
  }
  if (cfg.n_clusters < 2 && cfg.noise_rate > 0.0) {
    throw ConfigError("gen_noisy_corpus: noise needs at least 2 clusters");
  }

  NoisyCorpus corpus;
  auto rng = stream_rng(cfg.seed, "noisy-corpus");
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Orthonormal cluster centers via Gram-Schmidt.
  std::vector<std::vector<double>> centers;
  while (centers.size() < cfg.n_clusters) {
    auto v = random_unit(cfg.dim, rng);
    for (const auto& c : centers) {
      double dot = 0.0;
      for (std::size_t d = 0; d < cfg.dim; ++d) dot += v[d] * c[d];
      for (std::size_t d = 0; d < cfg.dim; ++d) v[d] -= dot * c[d];
    }
    double n = l2_norm(v);
    if (n < 1e-9) continue;
    for (double& x : v) x /= n;
    centers.push_back(std::move(v));
  }

  corpus.embeddings = EmbeddingMatrix(cfg.dim);
  std::vector<std::vector<std::string>> cluster_items(cfg.n_clusters);
  // Total perturbation norm stays ~0.35 regardless of dimension, keeping
  // intra-cluster cosines high and inter-cluster cosines near zero.
  const double perturbation = 0.35 / std::sqrt(static_cast<double>(cfg.dim));
  std::vector<double> vec(cfg.dim);
  for (std::size_t k = 0; k < cfg.n_clusters; ++k) {
    for (std::size_t j = 0; j < cfg.items_per_cluster; ++j) {
      std::string id = "c" + std::to_string(k) + "_i" + std::to_string(j);
      for (std::size_t d = 0; d < cfg.dim; ++d) {
        vec[d] = centers[k][d] + perturbation * gauss(rng);
      }
      normalize_in_place(vec);
      corpus.embeddings.add(id, vec);
      cluster_items[k].push_back(id);

      ItemRecord rec;
      rec.item_id = id;
      rec.attributes = {{"category", "cluster_" + std::to_string(k)},
                        {"name", "item_" + std::to_string(k) + "_" +
                                     std::to_string(j)}};
      corpus.dataset.catalog.emplace(id, std::move(rec));
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%04zu", u);
    std::string user_id = buf;
    std::size_t home = u % cfg.n_clusters;
    InteractionHistory hist;
    hist.user_id = user_id;
    for (std::size_t t = 0; t < cfg.history_len; ++t) {
      std::string item_id;
      if (unit(rng) < cfg.noise_rate) {
        std::uniform_int_distribution<std::size_t> other(0, cfg.n_clusters - 2);
        std::size_t k = other(rng);
        if (k >= home) ++k;
        std::uniform_int_distribution<std::size_t> pick(
            0, cfg.items_per_cluster - 1);
        item_id = cluster_items[k][pick(rng)];
      } else {
        std::uniform_int_distribution<std::size_t> pick(
            0, cfg.items_per_cluster - 1);
        item_id = cluster_items[home][pick(rng)];
      }
      hist.events.push_back({item_id, static_cast<std::int64_t>(t + 1)});
    }
    auto& truth = corpus.ground_truth[user_id];
    std::string home_prefix = "c" + std::to_string(home) + "_";
    for (const auto& ev : hist.events) {
      if (ev.item_id.starts_with(home_prefix)) truth.insert(ev.item_id);
    }
    corpus.dataset.histories.emplace(user_id, std::move(hist));
  }
  return corpus;
}

}  // namespace consrec
