#include "citegen/intent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "citegen/errors.hpp"
#include "citegen/text.hpp"
#include "citegen/tokenizer.hpp"

namespace citegen {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

std::array<double, kNumIntents> softmax(const std::array<double, kNumIntents>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumIntents> probs{};
  double total = 0;
  for (std::size_t k = 0; k < kNumIntents; ++k) {
    probs[k] = std::exp(logits[k] - top);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::size_t argmax(const std::array<double, kNumIntents>& values) {
  // First maximum wins, so ties go to the earlier label.
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

bool ends_sentence(std::string_view text, std::size_t i) {
  const char c = text[i];
  return (c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || text[i + 1] == ' ');
}

}  // namespace

double SparseVector::dot(const double* dense) const {
  double total = 0;
  for (const auto& [index, value] : entries) total += dense[index] * value;
  return total;
}

double SparseVector::norm() const {
  double total = 0;
  for (const auto& entry : entries) total += entry.second * entry.second;
  return std::sqrt(total);
}

SparseVector featurize_counts(std::string_view text, std::size_t feature_dim) {
  std::vector<std::string> tokens = tokenize(text);
  for (auto& token : tokens) {
    if (placeholder_index(token) != 0) token = "<B>";
  }
  std::map<std::uint32_t, double> counts;
  auto bump = [&](const std::string& key) {
    counts[static_cast<std::uint32_t>(fnv1a64(key) % feature_dim)] += 1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bump("u\x1f" + tokens[i]);
    if (i + 1 < tokens.size()) bump("b\x1f" + tokens[i] + "\x1f" + tokens[i + 1]);
  }
  SparseVector out;
  out.entries.assign(counts.begin(), counts.end());
  return out;
}

SparseVector featurize(std::string_view text, std::size_t feature_dim) {
  SparseVector out = featurize_counts(text, feature_dim);
  const double norm = out.norm();
  if (norm > 0) {
    for (auto& entry : out.entries) entry.second /= norm;
  }
  return out;
}

IntentModel::IntentModel(std::size_t feature_dim)
    : feature_dim_(feature_dim), weights_(kNumIntents * feature_dim, 0.0) {}

std::array<double, kNumIntents> IntentModel::logits(const SparseVector& features) const {
  std::array<double, kNumIntents> out{};
  for (std::size_t k = 0; k < kNumIntents; ++k) {
    out[k] = features.dot(weights_.data() + k * feature_dim_) + bias_[k];
  }
  return out;
}

void IntentModel::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  const std::uint64_t header[2] = {feature_dim_, kNumIntents};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(bias_.data()),
            static_cast<std::streamsize>(bias_.size() * sizeof(double)));
}

IntentModel IntentModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  std::uint64_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[1] != kNumIntents || header[0] == 0 || header[0] > (std::uint64_t{1} << 28)) {
    throw Error(ErrorCode::kFormatError, "bad intent checkpoint header in " + path.string());
  }
  IntentModel model(static_cast<std::size_t>(header[0]));
  in.read(reinterpret_cast<char*>(model.weights_.data()),
          static_cast<std::streamsize>(model.weights_.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(model.bias_.data()),
          static_cast<std::streamsize>(model.bias_.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::kFormatError, "truncated intent checkpoint " + path.string());
  return model;
}

double intent_loss(const IntentModel& model, const std::vector<IntentExample>& batch,
                   std::vector<double>* grad_weights, std::array<double, kNumIntents>* grad_bias) {
  const std::size_t dim = model.feature_dim();
  if (grad_weights) grad_weights->assign(kNumIntents * dim, 0.0);
  if (grad_bias) grad_bias->fill(0.0);
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0;
  for (const auto& example : batch) {
    const auto logits = model.logits(example.features);
    const auto probs = softmax(logits);
    const auto gold = static_cast<std::size_t>(example.label);
    loss -= std::log(std::max(probs[gold], 1e-300));
    for (std::size_t k = 0; k < kNumIntents; ++k) {
      const double g = (probs[k] - (k == gold ? 1.0 : 0.0)) * scale;
      if (grad_bias) (*grad_bias)[k] += g;
      if (grad_weights) {
        double* row = grad_weights->data() + k * dim;
        for (const auto& [index, value] : example.features.entries) row[index] += g * value;
      }
    }
  }
  return loss * scale;
}

IntentModel train_intent(const std::vector<LabeledText>& examples, const IntentTrainOptions& options) {
  std::array<std::size_t, kNumIntents> per_class{};
  for (const auto& e : examples) ++per_class[static_cast<std::size_t>(e.label)];
  for (std::size_t k = 0; k < kNumIntents; ++k) {
    if (per_class[k] == 0) {
      throw Error(ErrorCode::kClassMissing,
                  "no training example for intent " + std::string(to_string(kAllIntents[k])));
    }
  }

  std::vector<IntentExample> featurized;
  featurized.reserve(examples.size());
  for (const auto& e : examples) featurized.push_back({featurize(e.text, options.feature_dim), e.label});

  IntentModel model(options.feature_dim);
  auto rng = make_rng(options.seed, "intent-shuffle");
  std::vector<std::size_t> order(featurized.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size = std::max<std::size_t>(options.batch_size, 1);
  const std::size_t dim = options.feature_dim;

  std::vector<double> grad_weights;
  std::array<double, kNumIntents> grad_bias{};
  std::vector<IntentExample> batch;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    portable_shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
        batch.push_back(featurized[order[i]]);
      }
      intent_loss(model, batch, &grad_weights, &grad_bias);
      // Only touched coordinates carry gradient.
      for (const auto& example : batch) {
        for (const auto& entry : example.features.entries) {
          for (std::size_t k = 0; k < kNumIntents; ++k) {
            double& g = grad_weights[k * dim + entry.first];
            model.weights()[k * dim + entry.first] -= options.lr * g;
            g = 0.0;
          }
        }
      }
      for (std::size_t k = 0; k < kNumIntents; ++k) model.bias()[k] -= options.lr * grad_bias[k];
    }
  }
  return model;
}

IntentPrediction predict_intent(const IntentModel& model, std::string_view text) {
  const auto probs = softmax(model.logits(featurize(text, model.feature_dim())));
  return {kAllIntents[argmax(probs)], probs};
}

double round_trip_accuracy(const IntentModel& model,
                           const std::vector<std::pair<IntentLabel, std::string>>& generations) {
  if (generations.empty()) throw Error(ErrorCode::kEmptyEvalSet, "no generations to score");
  std::size_t correct = 0;
  for (const auto& [intended, text] : generations) {
    if (predict_intent(model, text).label == intended) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(generations.size());
}

std::string citation_window(std::string_view target, std::size_t n) {
  std::vector<std::string_view> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (ends_sentence(target, i)) {
      sentences.push_back(trim(target.substr(start, i + 1 - start)));
      start = i + 1;
    }
  }
  if (!trim(target.substr(start)).empty()) sentences.push_back(trim(target.substr(start)));

  const std::string code = placeholder(n);
  std::size_t first = sentences.size();
  std::size_t last = 0;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    for (const auto& token : tokenize(sentences[s])) {
      if (token == code) {
        first = std::min(first, s);
        last = s;
        break;
      }
    }
  }
  if (first == sentences.size()) return normalize_whitespace(target);
  std::string window;
  for (std::size_t s = first; s <= last; ++s) {
    if (!window.empty()) window.push_back(' ');
    window += sentences[s];
  }
  return window;
}

std::vector<IntentLabel> label_citations(const IntentModel& model, const std::string& target,
                                         std::size_t n_cited) {
  std::vector<IntentLabel> labels;
  labels.reserve(n_cited);
  for (std::size_t n = 1; n <= n_cited; ++n) {
    labels.push_back(predict_intent(model, citation_window(target, n)).label);
  }
  return labels;
}

std::vector<LabeledText> labeled_windows(const std::vector<CitationInstance>& instances) {
  std::vector<LabeledText> out;
  for (const auto& instance : instances) {
    for (std::size_t n = 1; n <= instance.intents.size(); ++n) {
      out.push_back({citation_window(instance.target, n), instance.intents[n - 1]});
    }
  }
  return out;
}

}  // namespace citegen
