// Command-line front end of the experiment pipeline.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "fmeac/common/errors.hpp"
#include "fmeac/common/text_io.hpp"
#include "fmeac/harness/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fmeac;
using namespace fmeac::harness;

namespace {

enum ExitCode { ok = 0, config_error = 2, numeric_error = 3, stage_error = 4 };

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  bool dry_run = false;
  std::size_t parallel_seeds = 1;
};

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return ok;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return numeric_error;
  } catch (const DomainError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return numeric_error;
  } catch (const std::exception& e) {
    std::cerr << "stage failure: " << e.what() << '\n';
    return stage_error;
  }
}

fs::path default_out(const Options& o, std::uint64_t seed) {
  return fs::path("runs") / (fs::path(o.config).stem().string() + "_seed" + std::to_string(seed));
}

// One pipeline per seed. With --parallel-seeds N the seeds seed..seed+N-1 run concurrently,
// each in <out>/seed_<k>.
int run_stage(const Options& o, Stage last) {
  ExperimentConfig base;
  if (const int rc = guarded([&] { base = load_config(o.config); }); rc != ok) return rc;
  if (o.seed_given) base.seed = o.seed;
  if (o.parallel_seeds == 0) {
    std::cerr << "config error: --parallel-seeds must be positive\n";
    return config_error;
  }

  std::mutex io;
  std::vector<int> codes(o.parallel_seeds, ok);
  const auto one = [&](std::size_t k) {
    ExperimentConfig cfg = base;
    cfg.seed = base.seed + k;
    fs::path dir = o.out.empty() ? default_out(o, cfg.seed) : fs::path(o.out);
    if (o.parallel_seeds > 1) dir = (o.out.empty() ? fs::path("runs") / fs::path(o.config).stem() : fs::path(o.out)) /
                                    ("seed_" + std::to_string(cfg.seed));
    codes[k] = guarded([&] {
      Pipeline pipeline(cfg, dir);
      if (o.dry_run) {
        std::lock_guard lock(io);
        std::cout << pipeline.plan(last);
        return;
      }
      pipeline.run_until(last);
      std::lock_guard lock(io);
      std::cout << to_string(last) << " finished in " << dir.string() << '\n';
      if (last == Stage::summarize) std::cout << read_text_file(dir / "summary.json");
    });
  };

  if (o.parallel_seeds == 1 || o.dry_run) {
    for (std::size_t k = 0; k < o.parallel_seeds; ++k) one(k);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t k = 0; k < o.parallel_seeds; ++k) workers.emplace_back(one, k);
    for (auto& w : workers) w.join();
  }
  for (int c : codes) {
    if (c != ok) return c;
  }
  return ok;
}

int bench(const Options& o) {
  return guarded([&] {
    ExperimentConfig cfg = load_config(o.config);
    if (o.seed_given) cfg.seed = o.seed;
    if (o.dry_run) {
      std::cout << "bench-inference: " << cfg.bench_repeats << " forwards per size; sizes:";
      for (auto n : cfg.bench_nodes) std::cout << ' ' << n;
      std::cout << '\n';
      return;
    }
    const std::string csv = bench_csv(bench_inference(cfg, cfg.bench_nodes, cfg.bench_repeats));
    std::cout << csv;
    if (!o.out.empty()) {
      fs::create_directories(o.out);
      write_text_file(fs::path(o.out) / "bench.csv", csv);
    }
  });
}

int plot(const Options& o) {
  return guarded([&] {
    ExperimentConfig cfg = load_config(o.config);
    if (o.seed_given) cfg.seed = o.seed;
    const fs::path dir = o.out.empty() ? default_out(o, cfg.seed) : fs::path(o.out);
    if (o.dry_run) {
      std::cout << "plot-data: window " << cfg.smoothing_window << " over " << (dir / "metrics.csv").string() << '\n';
      return;
    }
    for (const auto& f : plot_data(dir, cfg.smoothing_window)) std::cout << f.string() << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-model-based enhanced actor-critic experiments"};
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "config file or preset name")->required();
    sub->add_option("--seed", o.seed, "experiment seed (overrides the config)")->each([&](const std::string&) {
      o.seed_given = true;
    });
    sub->add_option("--out", o.out, "artifact directory");
    sub->add_flag("--dry-run", o.dry_run, "print the config and the stage plan, compute nothing");
    sub->add_option("--parallel-seeds", o.parallel_seeds, "run N consecutive seeds concurrently")
        ->check(CLI::PositiveNumber);
  };

  struct Command {
    const char* name;
    const char* help;
    std::function<int()> run;
  };
  const std::vector<Command> commands{
      {"gen-maps", "generate the training and evaluation maps", [&] { return run_stage(o, Stage::gen_maps); }},
      {"pretrain-pan", "pretrain the point-array network", [&] { return run_stage(o, Stage::pretrain_pan); }},
      {"pretrain-bpn", "pretrain the battery prediction network", [&] { return run_stage(o, Stage::pretrain_bpn); }},
      {"train", "train the agent on the training maps", [&] { return run_stage(o, Stage::train); }},
      {"eval", "evaluate on the held-out map and write summary.json", [&] { return run_stage(o, Stage::summarize); }},
      {"bench-inference", "time GNN and PAN forwards against scene size", [&] { return bench(o); }},
      {"plot-data", "emit smoothed reward curves", [&] { return plot(o); }},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }
  CLI::App* keys = app.add_subcommand("list-keys", "print every config key with its meaning");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }

  if (keys->parsed()) {
    for (const auto& k : config_keys()) std::cout << k.name << "  # " << k.doc << '\n';
    return ok;
  }
  for (const auto& [sub, cmd] : subs) {
    if (sub->parsed()) return cmd->run();
  }
  return config_error;
}
