#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fmeac/harness/config.hpp"

namespace fmeac::harness {

enum class Stage { gen_maps, pretrain_pan, pretrain_bpn, train, eval, summarize };

std::string to_string(Stage stage);
const std::vector<Stage>& all_stages();

// Aggregates over the greedy evaluation episodes. `qos_or_aoi` is mean QoS for urban and
// mean AoI for agri. Timing fields are wall-clock and therefore not reproducible.
struct MetricsSummary {
  std::string application;
  std::string feature_model;
  std::uint64_t seed = 0;
  std::uint64_t eval_map = 0;
  std::size_t episodes = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;  // population standard deviation
  double qos_or_aoi = 0.0;
  double completion_time_s = 0.0;
  double online_ms_per_action = 0.0;
  double offline_ms = 0.0;  // PAN plus BPN pretraining

  std::string to_json() const;
  static MetricsSummary from_json(const std::string& text);
};

// Recomputes the summary from the raw rows alone: eval.csv and the timing_*.csv files.
MetricsSummary summarize_artifacts(const std::filesystem::path& dir);

// One experiment in one artifact directory. Every stage writes its outputs last-to-done, so
// a stage whose outputs exist is skipped and an interrupted run resumes where it stopped.
// Running a stage first runs the unfinished stages before it.
class Pipeline {
 public:
  Pipeline(ExperimentConfig cfg, std::filesystem::path dir);

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& dir() const { return dir_; }

  std::uint64_t eval_map_seed() const;
  bool stage_needed(Stage s) const;
  bool stage_done(Stage s) const;

  // Config echo followed by the stage list with done / pending / skipped markers.
  std::string plan(Stage last = Stage::summarize) const;

  void run_until(Stage last);
  MetricsSummary run();

 private:
  void check_config_stamp();
  void gen_maps();
  void pretrain_pan();
  void pretrain_bpn();
  void train();
  void eval();
  void summarize();

  ExperimentConfig cfg_;
  std::filesystem::path dir_;
};

struct BenchRow {
  std::size_t nodes = 0;
  double gnn_ms = 0.0;  // median forward time
  double pan_ms = 0.0;
};

// Median of `repeats` warm forward passes of randomly initialized GNN and PAN models on
// random scenes of each size. Timing depends on the architecture, not on trained weights.
std::vector<BenchRow> bench_inference(const ExperimentConfig& cfg, const std::vector<std::size_t>& nodes,
                                      std::size_t repeats);
std::string bench_csv(const std::vector<BenchRow>& rows);

// Trailing moving average; the first window-1 entries average what is available.
std::vector<double> smooth(const std::vector<double>& values, std::size_t window);

// Writes plot/reward_curve.csv (episode, reward, smoothed) from metrics.csv and
// plot/eval_reward_curve.csv from eval.csv when present; returns the files written.
// Throws StageError when metrics.csv is missing.
std::vector<std::filesystem::path> plot_data(const std::filesystem::path& dir, std::size_t window);

}  // namespace fmeac::harness
