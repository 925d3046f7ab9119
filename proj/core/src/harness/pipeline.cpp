#include "fmeac/harness/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "fmeac/common/errors.hpp"
#include "fmeac/common/text_io.hpp"
#include "fmeac/eac/trainer.hpp"
#include "fmeac/harness/adapters.hpp"

namespace fmeac::harness {

namespace fs = std::filesystem;

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::gen_maps:
      return "gen-maps";
    case Stage::pretrain_pan:
      return "pretrain-pan";
    case Stage::pretrain_bpn:
      return "pretrain-bpn";
    case Stage::train:
      return "train";
    case Stage::eval:
      return "eval";
    case Stage::summarize:
      return "summarize";
  }
  return "?";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::gen_maps, Stage::pretrain_pan, Stage::pretrain_bpn,
                                         Stage::train,    Stage::eval,         Stage::summarize};
  return stages;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Seeds of the independent random streams of one experiment.
enum Stream : std::uint64_t { eval_map_stream = 1, gnn_stream, train_stream, eval_stream, pan_stream, bpn_stream };

fs::path map_path(const fs::path& dir, std::uint64_t seed) {
  return dir / "maps" / ("map_" + std::to_string(seed) + ".txt");
}

std::string require_text(const fs::path& path) {
  if (!fs::exists(path)) throw StageError("missing artifact " + path.string() + "; run the earlier stages first");
  return read_text_file(path);
}

nn::Checkpoint require_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw StageError("missing artifact " + path.string() + "; run the earlier stages first");
  return nn::Checkpoint::load(path);
}

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::ostringstream os;
  os << "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) os << i << ',' << format_double(curve[i]) << '\n';
  return os.str();
}

// Owns the environment together with the models it borrows.
struct Scene {
  std::unique_ptr<eac::EnvAdapter> env;
  std::optional<features::BpnModel> bpn;
};

Scene make_scene(const ExperimentConfig& cfg, const fs::path& dir, const std::vector<std::uint64_t>& seeds,
                 bool with_bpn) {
  Scene scene;
  if (cfg.application == Application::urban) {
    std::vector<urban::UrbanMap> maps;
    for (auto s : seeds) {
      require_text(map_path(dir, s));
      maps.push_back(urban::load_map(map_path(dir, s)));
    }
    scene.env = std::make_unique<UrbanAdapter>(cfg.urban, std::move(maps));
    return scene;
  }
  std::vector<agri::AgriMap> maps;
  for (auto s : seeds) {
    require_text(map_path(dir, s));
    maps.push_back(agri::load_map(map_path(dir, s)));
  }
  auto env = std::make_unique<AgriAdapter>(cfg.agri, std::move(maps));
  if (with_bpn && cfg.use_bpn) {
    scene.bpn = features::BpnModel::from_checkpoint(require_checkpoint(dir / "bpn.ckpt"));
    env->set_return_model(&*scene.bpn);
  }
  scene.env = std::move(env);
  return scene;
}

features::GnnConfig gnn_config_for(const ExperimentConfig& cfg, const eac::EnvAdapter& env) {
  features::GnnConfig g = cfg.gnn;
  g.node_dim = env.graph_node_dim();
  return g;
}

double read_single_number(const fs::path& path, std::size_t column) {
  std::istringstream is(require_text(path));
  std::string header, line;
  std::getline(is, header);
  std::getline(is, line);
  std::vector<std::string> cells;
  std::istringstream ls(line);
  std::string cell;
  while (std::getline(ls, cell, ',')) cells.push_back(cell);
  if (column >= cells.size()) throw StageError("malformed timing file " + path.string());
  return parse_double(cells[column]);
}

}  // namespace

// ---------------------------------------------------------------- summary

std::string MetricsSummary::to_json() const {
  nlohmann::ordered_json j;
  j["application"] = application;
  j["feature_model"] = feature_model;
  j["seed"] = seed;
  j["eval_map"] = eval_map;
  j["episodes"] = episodes;
  j["reward_mean"] = reward_mean;
  j["reward_std"] = reward_std;
  j[application == "urban" ? "qos" : "aoi"] = qos_or_aoi;
  j["completion_time_s"] = completion_time_s;
  j["online_ms_per_action"] = online_ms_per_action;
  j["offline_ms"] = offline_ms;
  return j.dump(2) + "\n";
}

MetricsSummary MetricsSummary::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsSummary s;
    s.application = j.at("application").get<std::string>();
    s.feature_model = j.at("feature_model").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.eval_map = j.at("eval_map").get<std::uint64_t>();
    s.episodes = j.at("episodes").get<std::size_t>();
    s.reward_mean = j.at("reward_mean").get<double>();
    s.reward_std = j.at("reward_std").get<double>();
    s.qos_or_aoi = j.at(s.application == "urban" ? "qos" : "aoi").get<double>();
    s.completion_time_s = j.at("completion_time_s").get<double>();
    s.online_ms_per_action = j.at("online_ms_per_action").get<double>();
    s.offline_ms = j.at("offline_ms").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw StageError(std::string("summary.json: ") + e.what());
  }
}

MetricsSummary summarize_artifacts(const fs::path& dir) {
  const ExperimentConfig cfg = parse_config(require_text(dir / "config.txt"));
  const auto rows = eac::parse_metrics_csv(require_text(dir / "eval.csv"));
  if (rows.empty()) throw StageError("eval.csv has no rows");

  MetricsSummary s;
  s.application = to_string(cfg.application);
  s.feature_model = eac::to_string(cfg.feature_model);
  s.seed = cfg.seed;
  s.eval_map = Pipeline(cfg, dir).eval_map_seed();
  s.episodes = rows.size();
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    s.reward_mean += r.reward_pri / n;
    s.qos_or_aoi += r.qos_or_aoi / n;
    s.completion_time_s += r.completion_time_s / n;
  }
  double var = 0.0;
  for (const auto& r : rows) var += (r.reward_pri - s.reward_mean) * (r.reward_pri - s.reward_mean) / n;
  s.reward_std = std::sqrt(var);

  const double eval_ms = read_single_number(dir / "timing_eval.csv", 0);
  const double actions = read_single_number(dir / "timing_eval.csv", 1);
  s.online_ms_per_action = actions > 0 ? eval_ms / actions : 0.0;
  for (const char* f : {"timing_pan.csv", "timing_bpn.csv"}) {
    if (fs::exists(dir / f)) s.offline_ms += read_single_number(dir / f, 0);
  }
  return s;
}

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(ExperimentConfig cfg, fs::path dir) : cfg_(std::move(cfg)), dir_(std::move(dir)) {
  if (cfg_.eval_map_min > cfg_.eval_map_max) throw ConfigError("eval_map_min exceeds eval_map_max");
  if (cfg_.train_maps.empty()) throw ConfigError("train_maps is empty");
}

std::uint64_t Pipeline::eval_map_seed() const {
  const std::uint64_t span = cfg_.eval_map_max - cfg_.eval_map_min + 1;
  return cfg_.eval_map_min + derive_seed(cfg_.seed, eval_map_stream) % span;
}

bool Pipeline::stage_needed(Stage s) const {
  switch (s) {
    case Stage::pretrain_pan:
      return cfg_.feature_model == eac::FeatureKind::pan;
    case Stage::pretrain_bpn:
      return cfg_.application == Application::agri && cfg_.use_bpn;
    default:
      return true;
  }
}

bool Pipeline::stage_done(Stage s) const {
  switch (s) {
    case Stage::gen_maps: {
      if (!fs::exists(map_path(dir_, eval_map_seed()))) return false;
      return std::all_of(cfg_.train_maps.begin(), cfg_.train_maps.end(),
                         [&](std::uint64_t m) { return fs::exists(map_path(dir_, m)); });
    }
    case Stage::pretrain_pan:
      return fs::exists(dir_ / "pan.ckpt");
    case Stage::pretrain_bpn:
      return fs::exists(dir_ / "bpn.ckpt");
    case Stage::train:
      return fs::exists(dir_ / "metrics.csv");
    case Stage::eval:
      return fs::exists(dir_ / "eval.csv");
    case Stage::summarize:
      return fs::exists(dir_ / "summary.json");
  }
  return false;
}

std::string Pipeline::plan(Stage last) const {
  std::ostringstream os;
  os << "# config\n" << serialize_config(cfg_) << "# artifact directory: " << dir_.string() << '\n';
  os << "# train maps:";
  for (auto m : cfg_.train_maps) os << ' ' << m;
  os << "; eval map: " << eval_map_seed() << '\n';
  os << "# stages\n";
  for (Stage s : all_stages()) {
    const char* mark = !stage_needed(s) ? "skipped" : stage_done(s) ? "done" : "pending";
    os << to_string(s) << ": " << mark << '\n';
    if (s == last) break;
  }
  return os.str();
}

void Pipeline::check_config_stamp() {
  fs::create_directories(dir_);
  const fs::path stamp = dir_ / "config.txt";
  const std::string text = serialize_config(cfg_);
  if (fs::exists(stamp)) {
    if (read_text_file(stamp) != text) {
      throw StageError("artifact directory " + dir_.string() + " holds a run with a different config");
    }
    return;
  }
  write_text_file(stamp, text);
}

void Pipeline::run_until(Stage last) {
  check_config_stamp();
  for (Stage s : all_stages()) {
    if (stage_needed(s) && !stage_done(s)) {
      switch (s) {
        case Stage::gen_maps:
          gen_maps();
          break;
        case Stage::pretrain_pan:
          pretrain_pan();
          break;
        case Stage::pretrain_bpn:
          pretrain_bpn();
          break;
        case Stage::train:
          train();
          break;
        case Stage::eval:
          eval();
          break;
        case Stage::summarize:
          summarize();
          break;
      }
    }
    if (s == last) break;
  }
}

MetricsSummary Pipeline::run() {
  run_until(Stage::summarize);
  return MetricsSummary::from_json(read_text_file(dir_ / "summary.json"));
}

void Pipeline::gen_maps() {
  fs::create_directories(dir_ / "maps");
  std::vector<std::uint64_t> seeds = cfg_.train_maps;
  seeds.push_back(eval_map_seed());
  for (auto s : seeds) {
    const fs::path p = map_path(dir_, s);
    if (fs::exists(p)) continue;
    if (cfg_.application == Application::urban) {
      urban::save_map(urban::generate_map(s, cfg_.urban), p);
    } else {
      agri::save_map(agri::generate_map(s, cfg_.agri), p);
    }
  }
}

void Pipeline::pretrain_pan() {
  Rng rng = make_rng(derive_seed(cfg_.seed, pan_stream));
  std::vector<nn::Tensor> dataset;
  features::PanConfig pcfg = cfg_.pan;
  // Point arrays come from random-action rollouts so they cover the states the agent visits.
  for (auto m : cfg_.train_maps) {
    Scene scene = make_scene(cfg_, dir_, {m}, false);
    eac::EnvAdapter& env = *scene.env;
    pcfg.point_dim = env.point_dim();
    pcfg.payload_dim = env.point_payload_dim();
    std::size_t taken = 0, episode = 0;
    env.reset(episode);
    for (std::size_t step = 0; taken < cfg_.pan_snapshots_per_map; ++step) {
      if (step % 3 == 0) {
        dataset.push_back(env.points());
        ++taken;
      }
      std::vector<std::vector<double>> actions;
      for (std::size_t i = 0; i < env.agent_count(); ++i) actions.push_back(env.random_action(rng));
      env.step(actions, rng);
      if (env.episode_done()) env.reset(++episode);
    }
  }
  const auto t0 = Clock::now();
  const features::PanPretrainResult res = features::pan_pretrain(dataset, pcfg, cfg_.pan_train, rng);
  const double ms = ms_since(t0);
  write_text_file(dir_ / "pan_loss.csv", loss_curve_csv(res.loss_curve));
  write_text_file(dir_ / "timing_pan.csv", "ms\n" + format_double(ms) + "\n");
  res.model.to_checkpoint().save(dir_ / "pan.ckpt");
}

void Pipeline::pretrain_bpn() {
  Rng rng = make_rng(derive_seed(cfg_.seed, bpn_stream));
  const agri::AgriConfig& a = cfg_.agri;
  std::vector<features::BpnSample> samples;
  // Labels are what the homing controller spends from random task-space states.
  for (auto m : cfg_.train_maps) {
    const agri::AgriMap map = agri::load_map(map_path(dir_, m));
    for (std::size_t k = 0; k < cfg_.bpn_samples_per_map; ++k) {
      const Vec3 p{uniform(rng, 0.0, a.extent_x), uniform(rng, 0.0, a.extent_y), uniform(rng, a.z_min, a.z_max)};
      const auto i = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, a.n_uav - 1)(rng));
      samples.push_back({agri::return_state(map, a, p, i), agri::scripted_return_energy(map, a, p, i)});
    }
  }
  const auto t0 = Clock::now();
  const features::BpnPretrainResult res = features::bpn_pretrain(std::move(samples), cfg_.bpn, cfg_.bpn_train, rng);
  const double ms = ms_since(t0);
  write_text_file(dir_ / "bpn_loss.csv", loss_curve_csv(res.loss_curve));
  write_text_file(dir_ / "timing_bpn.csv", "ms,validation_rmse_j,mean_label_j\n" + format_double(ms) + "," +
                                                format_double(res.validation_rmse_j) + "," +
                                                format_double(res.mean_label_j) + "\n");
  res.model.to_checkpoint().save(dir_ / "bpn.ckpt");
}

namespace {

eac::FeatureModel load_features(const ExperimentConfig& cfg, const fs::path& dir, const eac::EnvAdapter& env,
                                bool fresh_gnn) {
  switch (cfg.feature_model) {
    case eac::FeatureKind::none:
      return {};
    case eac::FeatureKind::pan:
      return eac::FeatureModel::pan(features::PanModel::from_checkpoint(require_checkpoint(dir / "pan.ckpt")));
    case eac::FeatureKind::gnn:
      if (fresh_gnn) {
        Rng rng = make_rng(derive_seed(cfg.seed, gnn_stream));
        return eac::FeatureModel::gnn(features::GnnModel(gnn_config_for(cfg, env), rng), cfg.gnn_lr);
      }
      return eac::FeatureModel::gnn(features::GnnModel::from_checkpoint(require_checkpoint(dir / "gnn.ckpt")),
                                    cfg.gnn_lr);
  }
  return {};
}

}  // namespace

void Pipeline::train() {
  Scene scene = make_scene(cfg_, dir_, cfg_.train_maps, true);
  eac::FeatureModel fm = load_features(cfg_, dir_, *scene.env, true);
  const eac::EacConfig ac = eac::agent_config_for(*scene.env, fm, cfg_.eac);
  Rng rng = make_rng(derive_seed(cfg_.seed, train_stream));
  eac::Agent agent(ac, rng);
  eac::ReplayBuffer buffer(ac.buffer_capacity);
  eac::TrainConfig tc;
  tc.episodes = cfg_.episodes;
  tc.max_steps = cfg_.max_steps;
  tc.warmup_steps = cfg_.warmup_steps;
  tc.updates_per_step = cfg_.updates_per_step;
  tc.record_timing = cfg_.record_timing;
  tc.abort_checkpoint = dir_ / "agent_abort.ckpt";
  const eac::TrainResult res = eac::train(agent, *scene.env, fm, buffer, tc, rng);
  agent.to_checkpoint().save(dir_ / "agent.ckpt");
  if (fm.adaptive()) fm.gnn_model().to_checkpoint().save(dir_ / "gnn.ckpt");
  write_text_file(dir_ / "metrics.csv", eac::metrics_csv(res.log));
}

void Pipeline::eval() {
  Scene scene = make_scene(cfg_, dir_, {eval_map_seed()}, true);
  const eac::FeatureModel fm = load_features(cfg_, dir_, *scene.env, false);
  const eac::EacConfig ac = eac::agent_config_for(*scene.env, fm, cfg_.eac);
  Rng rng = make_rng(derive_seed(cfg_.seed, eval_stream));
  eac::Agent agent(ac, rng);
  agent.load_checkpoint(require_checkpoint(dir_ / "agent.ckpt"));
  const eac::EvalResult res = eac::evaluate(agent, *scene.env, fm, 0, cfg_.eval_episodes, rng);
  fs::create_directories(dir_ / "trajectories");
  for (const auto& t : res.trajectories) {
    write_text_file(dir_ / "trajectories" / ("episode_" + std::to_string(t.episode) + ".csv"),
                    eac::trajectory_csv(t));
  }
  write_text_file(dir_ / "timing_eval.csv",
                  "ms,actions\n" + format_double(res.online_ms_per_action * static_cast<double>(res.actions)) + "," +
                      std::to_string(res.actions) + "\n");
  write_text_file(dir_ / "eval.csv", eac::metrics_csv(res.log));
}

void Pipeline::summarize() { write_text_file(dir_ / "summary.json", summarize_artifacts(dir_).to_json()); }

// ---------------------------------------------------------------- analysis

std::vector<BenchRow> bench_inference(const ExperimentConfig& cfg, const std::vector<std::size_t>& nodes,
                                      std::size_t repeats) {
  if (repeats == 0) throw ConfigError("bench_inference: repeats must be positive");
  Rng rng = make_rng(derive_seed(cfg.seed, 99));
  const bool urban = cfg.application == Application::urban;
  features::GnnConfig gcfg = cfg.gnn;
  gcfg.node_dim = urban ? urban::kGraphNodeDim : agri::kGraphNodeDim;
  features::PanConfig pcfg = cfg.pan;
  pcfg.point_dim = urban ? urban::kPointDim : agri::kPointDim;
  pcfg.payload_dim = urban ? urban::kPointPayloadDim : agri::kPointPayloadDim;
  for (std::size_t n : nodes) pcfg.max_points = std::max(pcfg.max_points, n);
  const features::GnnModel gnn(gcfg, rng);
  features::PanModel pan(pcfg, rng);
  pan.freeze();

  const auto median_ms = [repeats](auto&& fn) {
    for (int w = 0; w < 10; ++w) fn();
    std::vector<double> t(repeats);
    for (double& x : t) {
      const auto t0 = Clock::now();
      fn();
      x = ms_since(t0);
    }
    std::nth_element(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2), t.end());
    return t[t.size() / 2];
  };

  std::vector<BenchRow> rows;
  for (std::size_t n : nodes) {
    features::GraphSnapshot snap;
    snap.node_features = nn::Tensor::matrix(n, gcfg.node_dim);
    snap.radius = 0.3;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < gcfg.node_dim; ++k) snap.node_features(i, k) = uniform(rng, 0.0, 1.0);
      snap.positions.push_back({uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)});
    }
    nn::Tensor points = nn::Tensor::matrix(n, pcfg.point_dim);
    for (double& x : points.data()) x = uniform(rng, 0.0, 1.0);

    volatile double sink = 0.0;
    BenchRow row;
    row.nodes = n;
    // The GNN pays for building its normalized adjacency on every call, as it does online.
    row.gnn_ms = median_ms([&] { sink = sink + gnn.forward(snap.expand())[0]; });
    row.pan_ms = median_ms([&] { sink = sink + pan.feature(points)[0]; });
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "nodes,gnn_ms,pan_ms\n";
  for (const auto& r : rows) os << r.nodes << ',' << format_double(r.gnn_ms) << ',' << format_double(r.pan_ms) << '\n';
  return os.str();
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw ConfigError("smoothing window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    const std::size_t count = std::min(i + 1, window);
    out[i] = window == 1 ? values[i] : sum / static_cast<double>(count);
  }
  return out;
}

namespace {

fs::path write_curve(const fs::path& file, const std::vector<eac::EpisodeLog>& log, std::size_t window) {
  std::vector<double> reward;
  for (const auto& r : log) reward.push_back(r.reward_pri);
  const std::vector<double> s = smooth(reward, window);
  std::ostringstream os;
  os << "episode,reward,smoothed\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    os << log[i].episode << ',' << format_double(reward[i]) << ',' << format_double(s[i]) << '\n';
  }
  write_text_file(file, os.str());
  return file;
}

}  // namespace

std::vector<fs::path> plot_data(const fs::path& dir, std::size_t window) {
  const auto log = eac::parse_metrics_csv(require_text(dir / "metrics.csv"));
  fs::create_directories(dir / "plot");
  std::vector<fs::path> written{write_curve(dir / "plot" / "reward_curve.csv", log, window)};
  if (fs::exists(dir / "eval.csv")) {
    written.push_back(
        write_curve(dir / "plot" / "eval_reward_curve.csv", eac::parse_metrics_csv(read_text_file(dir / "eval.csv")), 1));
  }
  return written;
}

}  // namespace fmeac::harness
