#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "loanfair/dataset.hpp"
#include "loanfair/lbfgs.hpp"

namespace loanfair {

/// Range used to map a raw attribute value onto [0, 1]. Continuous
/// attributes use the training-set min/max; categorical ones use
/// (0, k - 1) so index i encodes as i / (k - 1).
struct FeatureScaling {
  double min = 0.0;
  double max = 1.0;

  /// (raw - min) / (max - min), clamped to [0, 1]; 0 for a constant range.
  double encode(double raw) const noexcept;

  friend bool operator==(const FeatureScaling&, const FeatureScaling&) = default;
};

struct TrainingInfo {
  double l2_strength = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  int iterations = 0;
  /// Objective and gradient norm are per training row (loss / n_train).
  double final_loss = 0.0;
  double gradient_norm = 0.0;
  std::vector<double> loss_trace;

  friend bool operator==(const TrainingInfo&, const TrainingInfo&) = default;
};

/// Logistic scoring model with exactly one coefficient per attribute.
/// Immutable once constructed.
class ScoringModel {
 public:
  ScoringModel() = default;
  ScoringModel(std::vector<AttributeSpec> attributes, std::vector<double> weights, double intercept,
               std::vector<FeatureScaling> scaling, TrainingInfo info = {});

  const std::vector<AttributeSpec>& attributes() const noexcept { return attributes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<FeatureScaling>& scaling() const noexcept { return scaling_; }
  double intercept() const noexcept { return intercept_; }
  const TrainingInfo& info() const noexcept { return info_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::vector<std::string> attribute_order() const;
  std::size_t index_of(std::string_view attribute) const;
  bool has_attribute(std::string_view attribute) const;
  double weight(std::string_view attribute) const;
  double max_abs_weight() const;
  std::string schema_hash() const;

  /// Scaled feature vector in attribute order. ContractError when the
  /// application lacks one of the model's attributes.
  std::vector<double> encode(const Application& app) const;

  friend bool operator==(const ScoringModel&, const ScoringModel&) = default;

 private:
  std::vector<AttributeSpec> attributes_;
  std::vector<double> weights_;
  double intercept_ = 0.0;
  std::vector<FeatureScaling> scaling_;
  TrainingInfo info_;
};

struct Prediction {
  std::string application_id;
  /// Probability of acceptance.
  double confidence = 0.5;
  Decision decision = Decision::rejected;
  /// Pre-sigmoid value b + sum_k w_k x_k.
  double utility = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Logistic function, kept strictly inside (0, 1).
double sigmoid(double utility) noexcept;

/// Accepted only when confidence is strictly above one half.
Decision decide(double confidence) noexcept;

/// intercept + sum_k weights[k] * features[k], summed in attribute order.
double linear_utility(std::span<const double> weights, double intercept, std::span<const double> features);

Prediction predict(const ScoringModel& model, const Application& app);
/// Same as predict but with a replacement weight vector (intercept kept).
Prediction predict_with_weights(const ScoringModel& model, std::span<const double> weights, const Application& app);
std::vector<Prediction> predict_all(const ScoringModel& model, std::span<const Application> apps);

struct TrainOptions {
  double l2_strength = 1.0;
  /// Recorded for provenance; optimisation starts from zero and is deterministic.
  std::uint64_t seed = 0;
  LbfgsOptions optimizer{};
};

/// Sum of per-row log losses plus (l2/2)*||w||^2; the intercept (last entry
/// of `params`) is not penalised. Fills `gradient` when non-null.
double regularized_log_loss(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double l2_strength,
                            const Eigen::VectorXd& params, Eigen::VectorXd* gradient);

/// Scaled design matrix and 0/1 label vector of a labelled dataset.
struct DesignMatrix {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
  std::vector<FeatureScaling> scaling;
};
DesignMatrix build_design_matrix(const Dataset& train_set);

/// Fits the L2-regularised logistic regression with L-BFGS.
/// DegenerateDataError on a single-class set; ConvergenceError otherwise
/// failing to reach the gradient tolerance.
ScoringModel train(const Dataset& train_set, const TrainOptions& options = {});

nlohmann::json to_json(const ScoringModel& model);
ScoringModel model_from_json(const nlohmann::json& doc);
/// Writes the model with an optional free-form `config` block for provenance.
void save_model(const ScoringModel& model, const std::filesystem::path& path, const nlohmann::json& config = {});
ScoringModel load_model(const std::filesystem::path& path);

}  // namespace loanfair
