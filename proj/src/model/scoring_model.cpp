#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "loanfair/error.hpp"
#include "loanfair/model.hpp"

namespace loanfair {

double FeatureScaling::encode(double raw) const noexcept {
  if (!(max > min)) return 0.0;
  return std::clamp((raw - min) / (max - min), 0.0, 1.0);
}

ScoringModel::ScoringModel(std::vector<AttributeSpec> attributes, std::vector<double> weights, double intercept,
                           std::vector<FeatureScaling> scaling, TrainingInfo info)
    : attributes_(std::move(attributes)),
      weights_(std::move(weights)),
      intercept_(intercept),
      scaling_(std::move(scaling)),
      info_(std::move(info)) {
  if (weights_.size() != attributes_.size() || scaling_.size() != attributes_.size())
    throw ContractError("model weights, scaling and attributes must have equal length");
  for (const auto& a : attributes_) validate(a);
}

std::vector<std::string> ScoringModel::attribute_order() const {
  std::vector<std::string> names;
  names.reserve(attributes_.size());
  for (const auto& a : attributes_) names.push_back(a.name);
  return names;
}

std::size_t ScoringModel::index_of(std::string_view attribute) const {
  for (std::size_t k = 0; k < attributes_.size(); ++k)
    if (attributes_[k].name == attribute) return k;
  throw NotFoundError("model has no attribute '" + std::string(attribute) + "'");
}

bool ScoringModel::has_attribute(std::string_view attribute) const {
  return std::any_of(attributes_.begin(), attributes_.end(), [&](const auto& a) { return a.name == attribute; });
}

double ScoringModel::weight(std::string_view attribute) const { return weights_[index_of(attribute)]; }

double ScoringModel::max_abs_weight() const {
  double m = 0.0;
  for (double w : weights_) m = std::max(m, std::abs(w));
  return m;
}

std::string ScoringModel::schema_hash() const { return Schema{"id", "decision", attributes_}.hash(); }

std::vector<double> ScoringModel::encode(const Application& app) const {
  std::vector<double> x(attributes_.size());
  for (std::size_t k = 0; k < attributes_.size(); ++k) x[k] = scaling_[k].encode(app.value(attributes_[k].name));
  return x;
}

double sigmoid(double utility) noexcept {
  double p;
  if (utility >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-utility));
  } else {
    const double e = std::exp(utility);
    p = e / (1.0 + e);
  }
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

Decision decide(double confidence) noexcept { return confidence > 0.5 ? Decision::accepted : Decision::rejected; }

double linear_utility(std::span<const double> weights, double intercept, std::span<const double> features) {
  if (weights.size() != features.size()) throw ContractError("weight and feature vectors differ in length");
  double u = intercept;
  for (std::size_t k = 0; k < weights.size(); ++k) u += weights[k] * features[k];
  return u;
}

Prediction predict_with_weights(const ScoringModel& model, std::span<const double> weights, const Application& app) {
  const auto x = model.encode(app);
  Prediction p;
  p.application_id = app.id;
  p.utility = linear_utility(weights, model.intercept(), x);
  p.confidence = sigmoid(p.utility);
  p.decision = decide(p.confidence);
  return p;
}

Prediction predict(const ScoringModel& model, const Application& app) {
  return predict_with_weights(model, model.weights(), app);
}

std::vector<Prediction> predict_all(const ScoringModel& model, std::span<const Application> apps) {
  std::vector<Prediction> out;
  out.reserve(apps.size());
  for (const auto& app : apps) out.push_back(predict(model, app));
  return out;
}

double regularized_log_loss(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double l2_strength,
                            const Eigen::VectorXd& params, Eigen::VectorXd* gradient) {
  const Eigen::Index d = features.cols();
  const auto w = params.head(d);
  const double b = params(d);
  const Eigen::VectorXd u = (features * w).array() + b;

  double loss = 0.0;
  Eigen::VectorXd residual(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double ui = u(i);
    const double softplus = ui > 0.0 ? ui + std::log1p(std::exp(-ui)) : std::log1p(std::exp(ui));
    loss += softplus - labels(i) * ui;
    residual(i) = sigmoid(ui) - labels(i);
  }
  loss += 0.5 * l2_strength * w.squaredNorm();
  if (gradient) {
    gradient->resize(d + 1);
    gradient->head(d) = features.transpose() * residual + l2_strength * w;
    (*gradient)(d) = residual.sum();
  }
  return loss;
}

DesignMatrix build_design_matrix(const Dataset& train_set) {
  const auto& attrs = train_set.attributes();
  DesignMatrix dm;
  dm.scaling.resize(attrs.size());
  for (std::size_t k = 0; k < attrs.size(); ++k) {
    if (attrs[k].is_categorical()) {
      dm.scaling[k] = {0.0, static_cast<double>(attrs[k].categories.size() - 1)};
      continue;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& app : train_set.applications()) {
      const double v = app.value(attrs[k].name);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    dm.scaling[k] = {lo, hi};
  }
  const auto n = static_cast<Eigen::Index>(train_set.size());
  dm.features.resize(n, static_cast<Eigen::Index>(attrs.size()));
  dm.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& app = train_set.applications()[static_cast<std::size_t>(i)];
    if (!app.label) throw ContractError("application '" + app.id + "' has no label");
    for (std::size_t k = 0; k < attrs.size(); ++k)
      dm.features(i, static_cast<Eigen::Index>(k)) = dm.scaling[k].encode(app.value(attrs[k].name));
    dm.labels(i) = *app.label == Decision::accepted ? 1.0 : 0.0;
  }
  return dm;
}

ScoringModel train(const Dataset& train_set, const TrainOptions& options) {
  if (!(options.l2_strength > 0.0)) throw ContractError("l2_strength must be positive");
  if (train_set.empty()) throw DegenerateDataError("training set is empty");
  const DesignMatrix dm = build_design_matrix(train_set);
  const double positives = dm.labels.sum();
  if (positives == 0.0 || positives == static_cast<double>(dm.labels.size()))
    throw DegenerateDataError("training set contains a single label class");

  // Optimised per row so the gradient tolerance does not depend on n.
  const double scale = 1.0 / static_cast<double>(dm.labels.size());
  const Objective objective = [&](const Eigen::VectorXd& params, Eigen::VectorXd& grad) {
    const double value = regularized_log_loss(dm.features, dm.labels, options.l2_strength, params, &grad);
    grad *= scale;
    return value * scale;
  };
  const auto d = dm.features.cols();
  LbfgsResult fit = minimize_lbfgs(objective, Eigen::VectorXd::Zero(d + 1), options.optimizer);
  if (!fit.converged) throw ConvergenceError(fit.gradient_norm, fit.iterations);

  TrainingInfo info;
  info.l2_strength = options.l2_strength;
  info.seed = options.seed;
  info.n_train = train_set.size();
  info.iterations = fit.iterations;
  info.final_loss = fit.value;
  info.gradient_norm = fit.gradient_norm;
  info.loss_trace = std::move(fit.trace);

  std::vector<double> weights(fit.x.data(), fit.x.data() + d);
  return ScoringModel(train_set.attributes(), std::move(weights), fit.x(d), dm.scaling, std::move(info));
}

nlohmann::json to_json(const ScoringModel& model) {
  nlohmann::json doc;
  doc["format"] = "loanfair-model";
  doc["version"] = 1;
  doc["schema_hash"] = model.schema_hash();
  doc["intercept"] = model.intercept();
  auto& attrs = doc["attributes"] = nlohmann::json::array();
  for (std::size_t k = 0; k < model.size(); ++k) {
    const auto& a = model.attributes()[k];
    attrs.push_back({{"name", a.name},
                     {"kind", to_string(a.kind)},
                     {"categories", a.categories},
                     {"provenance", a.provenance},
                     {"sensitive", a.sensitive},
                     {"weight", model.weights()[k]},
                     {"scale_min", model.scaling()[k].min},
                     {"scale_max", model.scaling()[k].max}});
  }
  const auto& info = model.info();
  doc["training"] = {{"l2_strength", info.l2_strength}, {"seed", info.seed},
                     {"n_train", info.n_train},         {"iterations", info.iterations},
                     {"final_loss", info.final_loss},   {"gradient_norm", info.gradient_norm},
                     {"loss_trace", info.loss_trace}};
  return doc;
}

ScoringModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string{}) != "loanfair-model")
      throw SchemaError("not a loanfair model document");
    if (doc.at("version").get<int>() != 1) throw SchemaError("unsupported model version");
    std::vector<AttributeSpec> attrs;
    std::vector<double> weights;
    std::vector<FeatureScaling> scaling;
    for (const auto& a : doc.at("attributes")) {
      attrs.push_back({a.at("name").get<std::string>(), parse_attribute_kind(a.at("kind").get<std::string>()),
                       a.value("categories", std::vector<std::string>{}), a.value("provenance", std::string{}),
                       a.value("sensitive", false)});
      weights.push_back(a.at("weight").get<double>());
      scaling.push_back({a.at("scale_min").get<double>(), a.at("scale_max").get<double>()});
    }
    TrainingInfo info;
    if (doc.contains("training")) {
      const auto& t = doc["training"];
      info.l2_strength = t.value("l2_strength", 0.0);
      info.seed = t.value("seed", std::uint64_t{0});
      info.n_train = t.value("n_train", std::size_t{0});
      info.iterations = t.value("iterations", 0);
      info.final_loss = t.value("final_loss", 0.0);
      info.gradient_norm = t.value("gradient_norm", 0.0);
      info.loss_trace = t.value("loss_trace", std::vector<double>{});
    }
    ScoringModel model(std::move(attrs), std::move(weights), doc.at("intercept").get<double>(), std::move(scaling),
                       std::move(info));
    if (doc.contains("schema_hash") && doc["schema_hash"].get<std::string>() != model.schema_hash())
      throw SchemaError("model schema hash does not match its attribute list");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const ScoringModel& model, const std::filesystem::path& path, const nlohmann::json& config) {
  auto doc = to_json(model);
  if (!config.is_null()) doc["config"] = config;
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write model file " + path.string());
  out << doc.dump(2) << '\n';
}

ScoringModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open model file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace loanfair
