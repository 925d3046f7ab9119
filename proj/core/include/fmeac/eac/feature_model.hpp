#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fmeac/eac/env_adapter.hpp"
#include "fmeac/features/gnn.hpp"
#include "fmeac/features/pan.hpp"

namespace fmeac::eac {

enum class FeatureKind { none, gnn, pan };

FeatureKind parse_feature_kind(const std::string& name);
std::string to_string(FeatureKind kind);

// The environment feature F_env fed to the critics: nothing, an adaptively trained GNN over
// the scene graph, or a frozen PAN over the device point array.
class FeatureModel {
 public:
  FeatureModel() = default;
  static FeatureModel gnn(features::GnnModel model, double learning_rate);
  static FeatureModel pan(features::PanModel model);

  FeatureKind kind() const { return kind_; }
  std::size_t dim() const;
  bool adaptive() const { return kind_ == FeatureKind::gnn; }

  std::vector<double> compute(const EnvAdapter& env) const;

  const features::GnnModel& gnn_model() const { return *gnn_; }
  features::GnnModel& mutable_gnn_model() { return *gnn_; }
  nn::AdamState& gnn_adam() { return gnn_adam_; }
  const features::PanModel& pan_model() const { return *pan_; }

 private:
  FeatureKind kind_ = FeatureKind::none;
  std::optional<features::GnnModel> gnn_;
  nn::AdamState gnn_adam_;
  std::optional<features::PanModel> pan_;
};

}  // namespace fmeac::eac
