#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "consrec/errors.hpp"
#include "consrec/pipeline.hpp"

namespace {

using consrec::RunConfig;

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value, win over the file
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "key=value config file");
  cmd->add_option("-s,--set", args.overrides,
                  "config override (key=value), repeatable; wins over --config");
}

RunConfig resolve(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_file.empty()) cfg = consrec::parse_config_file(args.config_file);
  for (const auto& kv : args.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw consrec::ConfigError("override must be key=value: " + kv);
    }
    consrec::apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  consrec::validate_config(cfg);
  return cfg;
}

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("CONSGRAPH_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ConsRec-style denoising pipeline for sequential recommendation"};
  app.require_subcommand(1);

  CommonArgs ingest_args, filter_args, train_args, rank_args, eval_args,
      synth_args, sweep_args;
  bool emit = false;

  auto* ingest = app.add_subcommand("ingest", "parse logs, core-filter, split");
  add_common(ingest, ingest_args);
  auto* filter = app.add_subcommand("filter", "denoise user histories");
  add_common(filter, filter_args);
  auto* train = app.add_subcommand("train", "train the NIP recommender");
  add_common(train, train_args);
  auto* rank = app.add_subcommand("rank", "full-ranking over the test split");
  add_common(rank, rank_args);
  auto* eval = app.add_subcommand("eval", "metrics + similarity report");
  add_common(eval, eval_args);
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth, synth_args);
  auto* sweep = app.add_subcommand("sweep", "filter+train+eval over a tau grid");
  add_common(sweep, sweep_args);
  auto* config_cmd = app.add_subcommand("config", "emit the resolved config");
  CommonArgs config_args;
  add_common(config_cmd, config_args);
  config_cmd->add_flag("--emit", emit, "print resolved config to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  apply_thread_cap();
  try {
    if (*ingest) {
      std::cout << consrec::run_ingest(resolve(ingest_args)) << '\n';
    } else if (*filter) {
      std::cout << consrec::run_filter(resolve(filter_args)) << '\n';
    } else if (*train) {
      std::cout << consrec::run_train(resolve(train_args)) << '\n';
    } else if (*rank) {
      std::cout << consrec::run_rank(resolve(rank_args)) << '\n';
    } else if (*eval) {
      std::cout << consrec::run_eval(resolve(eval_args)) << '\n';
    } else if (*synth) {
      std::cout << consrec::run_synth(resolve(synth_args)) << '\n';
    } else if (*sweep) {
      std::cout << consrec::run_sweep(resolve(sweep_args)) << '\n';
    } else if (*config_cmd) {
      std::cout << consrec::emit_config(resolve(config_args));
    }
  } catch (const consrec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
