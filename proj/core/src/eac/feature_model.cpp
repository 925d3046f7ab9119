#include "fmeac/eac/feature_model.hpp"

#include "fmeac/common/errors.hpp"

namespace fmeac::eac {

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "none") return FeatureKind::none;
  if (name == "gnn") return FeatureKind::gnn;
  if (name == "pan") return FeatureKind::pan;
  throw ConfigError("unknown feature model '" + name + "' (expected none, gnn or pan)");
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::none:
      return "none";
    case FeatureKind::gnn:
      return "gnn";
    case FeatureKind::pan:
      return "pan";
  }
  return "none";
}

FeatureModel FeatureModel::gnn(features::GnnModel model, double learning_rate) {
  FeatureModel f;
  f.kind_ = FeatureKind::gnn;
  f.gnn_adam_ = nn::AdamState(model.parameters().size(), learning_rate);
  f.gnn_ = std::move(model);
  return f;
}

FeatureModel FeatureModel::pan(features::PanModel model) {
  if (!model.frozen()) throw ContractError("FeatureModel: the PAN must be pretrained and frozen first");
  FeatureModel f;
  f.kind_ = FeatureKind::pan;
  f.pan_ = std::move(model);
  return f;
}

std::size_t FeatureModel::dim() const {
  switch (kind_) {
    case FeatureKind::gnn:
      return gnn_->feature_dim();
    case FeatureKind::pan:
      return pan_->feature_dim();
    case FeatureKind::none:
      break;
  }
  return 0;
}

std::vector<double> FeatureModel::compute(const EnvAdapter& env) const {
  nn::Tensor f;
  switch (kind_) {
    case FeatureKind::none:
      return {};
    case FeatureKind::gnn:
      f = gnn_->forward(env.graph().expand());
      break;
    case FeatureKind::pan:
      f = pan_->feature(env.points());
      break;
  }
  return {f.data().begin(), f.data().end()};
}

}  // namespace fmeac::eac
