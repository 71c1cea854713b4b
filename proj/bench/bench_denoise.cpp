// Compares the OpenMP denoising kernel against the serial reference on a
// synthetic corpus and checks that both produce identical retained sets.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "consrec/graph.hpp"
#include "consrec/synth.hpp"

using namespace consrec;

int main(int argc, char** argv) {
  NoisyCorpusConfig cfg;
  cfg.n_users = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;
  cfg.n_clusters = 8;
  cfg.items_per_cluster = 40;
  cfg.history_len = 60;
  cfg.noise_rate = 0.3;
  cfg.dim = 128;
  cfg.seed = 7;

  auto corpus = gen_noisy_corpus(cfg);
  std::vector<const InteractionHistory*> histories;
  for (const auto& [_, hist] : corpus.dataset.histories) {
    histories.push_back(&hist);
  }

  auto time = [&](auto&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    auto out = fn();
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return std::pair{std::move(out), ms};
  };

  auto [serial, serial_ms] = time([&] {
    return denoise_all_serial(histories, corpus.embeddings, 0.5, false);
  });
  auto [parallel, parallel_ms] = time([&] {
    return denoise_all(histories, corpus.embeddings, 0.5, false);
  });

  for (std::size_t i = 0; i < serial.size(); ++i) {
    if (serial[i].filtered.retained_items != parallel[i].filtered.retained_items) {
      std::fprintf(stderr, "mismatch at user %zu\n", i);
      return 1;
    }
  }

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("users=%zu threads=%d\n", histories.size(), threads);
  std::printf("serial:   %.1f ms\n", serial_ms);
  std::printf("parallel: %.1f ms  (%.2fx)\n", parallel_ms,
              serial_ms / parallel_ms);
  return 0;
}
