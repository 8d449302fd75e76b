#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "citegen/types.hpp"

namespace citegen {

// Sorted by index, no duplicate indices.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double dot(const double* dense) const;
  double norm() const;
};

inline constexpr std::size_t kDefaultFeatureDim = std::size_t{1} << 15;

// Hashed unigram+bigram counts over tokenizer output, with every <Bn>
// mapped to a shared <B> token.
SparseVector featurize_counts(std::string_view text, std::size_t feature_dim = kDefaultFeatureDim);
// featurize_counts, L2-normalized. Empty text gives the zero vector.
SparseVector featurize(std::string_view text, std::size_t feature_dim = kDefaultFeatureDim);

struct LabeledText {
  std::string text;
  IntentLabel label;
};

// Multinomial logistic regression over hashed features. Rows follow the
// IntentLabel order.
class IntentModel {
 public:
  explicit IntentModel(std::size_t feature_dim = kDefaultFeatureDim);

  std::size_t feature_dim() const { return feature_dim_; }
  std::vector<double>& weights() { return weights_; }  // 4 x feature_dim, row-major
  const std::vector<double>& weights() const { return weights_; }
  std::array<double, kNumIntents>& bias() { return bias_; }
  const std::array<double, kNumIntents>& bias() const { return bias_; }

  std::array<double, kNumIntents> logits(const SparseVector& features) const;

  void save(const std::filesystem::path& path) const;
  static IntentModel load(const std::filesystem::path& path);

  bool operator==(const IntentModel&) const = default;

 private:
  std::size_t feature_dim_;
  std::vector<double> weights_;
  std::array<double, kNumIntents> bias_{};
};

struct IntentExample {
  SparseVector features;
  IntentLabel label;
};

// Mean cross-entropy over `batch`; gradients are written in the model's
// layout when the output pointers are non-null.
double intent_loss(const IntentModel& model, const std::vector<IntentExample>& batch,
                   std::vector<double>* grad_weights = nullptr,
                   std::array<double, kNumIntents>* grad_bias = nullptr);

struct IntentTrainOptions {
  std::size_t epochs = 20;
  double lr = 0.5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  std::size_t feature_dim = kDefaultFeatureDim;
};

// Mini-batch gradient descent on cross-entropy. Throws Error(kClassMissing)
// when some intent has no example.
IntentModel train_intent(const std::vector<LabeledText>& examples, const IntentTrainOptions& options);

struct IntentPrediction {
  IntentLabel label;
  std::array<double, kNumIntents> probabilities;
};

IntentPrediction predict_intent(const IntentModel& model, std::string_view text);

// Fraction of (intended, text) pairs whose predicted intent matches.
// Throws Error(kEmptyEvalSet) for an empty list.
double round_trip_accuracy(const IntentModel& model,
                           const std::vector<std::pair<IntentLabel, std::string>>& generations);

// The minimal run of sentences of `target` holding every <Bn>. Falls back to
// the whole target when <Bn> is absent.
std::string citation_window(std::string_view target, std::size_t n);

// One intent per cited document, classifying each citation window.
std::vector<IntentLabel> label_citations(const IntentModel& model, const std::string& target,
                                         std::size_t n_cited);

// (label, window) training pairs from gold instances.
std::vector<LabeledText> labeled_windows(const std::vector<CitationInstance>& instances);

}  // namespace citegen
