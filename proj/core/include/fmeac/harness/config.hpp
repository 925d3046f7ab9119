#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fmeac/agri/config.hpp"
#include "fmeac/eac/config.hpp"
#include "fmeac/eac/feature_model.hpp"
#include "fmeac/features/bpn.hpp"
#include "fmeac/features/gnn.hpp"
#include "fmeac/features/pan.hpp"
#include "fmeac/urban/config.hpp"

namespace fmeac::harness {

enum class Application { urban, agri };

// Everything one experiment needs. Defaults are the full-scale values of the chosen
// application; see ExperimentConfig::paper().
struct ExperimentConfig {
  Application application = Application::agri;
  eac::FeatureKind feature_model = eac::FeatureKind::pan;
  std::uint64_t seed = 0;

  // protocol: train on the listed map seeds, evaluate on one seed drawn from the pool
  std::vector<std::uint64_t> train_maps{0, 1, 2};
  std::uint64_t eval_map_min = 3;
  std::uint64_t eval_map_max = 9;
  std::size_t eval_episodes = 10;

  // training loop
  std::size_t episodes = 10000;
  std::size_t warmup_steps = 1000;
  std::size_t updates_per_step = 1;
  std::size_t max_steps = 100000;
  bool record_timing = false;

  // actor and critics; obs/action/feature widths are filled in from the environment
  eac::EacConfig eac;

  features::GnnConfig gnn;
  double gnn_lr = 1e-3;

  features::PanConfig pan;
  features::PanTrainConfig pan_train;
  std::size_t pan_snapshots_per_map = 30;

  bool use_bpn = true;  // agri: the battery prediction network drives the COL -> RTH switch
  features::BpnConfig bpn;
  features::BpnTrainConfig bpn_train;
  std::size_t bpn_samples_per_map = 500;

  // analysis
  std::vector<std::size_t> bench_nodes{1, 10, 50, 100, 200, 400};
  std::size_t bench_repeats = 1000;
  std::size_t smoothing_window = 20;

  urban::UrbanConfig urban;
  agri::AgriConfig agri;

  // Table values for the application.
  static ExperimentConfig paper(Application app);

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

std::string to_string(Application app);

// Built-in presets: toy-agri, toy-urban, paper-scale (agri), paper-scale-urban.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

// Line-oriented `key = value` text with `#` comments. `application` (and `preset`, which
// selects the base values) are applied before every other key regardless of their position.
// Unknown keys, repeated keys and unparsable values throw ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text);
// Every key, one per line, in documentation order.
std::string serialize_config(const ExperimentConfig& cfg);
// A file path, or the name of a built-in preset.
ExperimentConfig load_config(const std::string& path_or_preset);

struct ConfigKey {
  std::string name;
  std::string doc;
};
std::vector<ConfigKey> config_keys();

}  // namespace fmeac::harness
