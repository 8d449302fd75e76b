#include <cmath>

#include "citegen/corpus.hpp"
#include "citegen/errors.hpp"
#include "citegen/intent.hpp"
#include "citegen/text.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace citegen;

namespace {

double value_at(const SparseVector& v, std::uint32_t index) {
  for (const auto& [i, x] : v.entries) {
    if (i == index) return x;
  }
  return 0.0;
}

std::uint32_t slot(const std::string& key, std::size_t dim) {
  return static_cast<std::uint32_t>(fnv1a64(key) % dim);
}

double accuracy(const IntentModel& model, const std::vector<LabeledText>& data) {
  std::size_t correct = 0;
  for (const auto& e : data) correct += predict_intent(model, e.text).label == e.label;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<LabeledText> synthetic_windows(std::uint64_t seed, std::size_t n_single) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.n_single = n_single;
  return labeled_windows(generate_synthetic_corpus(spec).gold);
}

}  // namespace

TEST_CASE("featurization") {
  const std::size_t dim = 1 << 15;
  const SparseVector counts = featurize_counts("a a b", dim);
  CHECK(value_at(counts, slot("u\x1f" "a", dim)) == 2.0);
  CHECK(value_at(counts, slot("u\x1f" "b", dim)) == 1.0);
  CHECK(value_at(counts, slot("b\x1f" "a\x1f" "a", dim)) == 1.0);
  CHECK(value_at(counts, slot("b\x1f" "a\x1f" "b", dim)) == 1.0);

  const auto one = featurize("<B1> x");
  const auto two = featurize("<B2> x");
  CHECK(one.entries == two.entries);
  CHECK(std::abs(one.norm() - 1.0) < 1e-12);
  CHECK(featurize("").entries.empty());
}

TEST_CASE("loss gradient matches central differences") {
  const std::size_t dim = 64;
  std::mt19937_64 rng(3);
  std::vector<IntentExample> batch;
  const char* texts[] = {"we follow <B1> for parsing .", "<B1> introduced tagging .", "unlike <B2> , we find x",
                         "our results agree with <B1>", "a b c d e f"};
  for (std::size_t i = 0; i < 5; ++i) batch.push_back({featurize(texts[i], dim), kAllIntents[i % 4]});

  for (int point = 0; point < 3; ++point) {
    IntentModel model(dim);
    for (double& w : model.weights()) w = standard_normal(rng);
    for (double& b : model.bias()) b = standard_normal(rng);
    std::vector<double> gw;
    std::array<double, kNumIntents> gb{};
    intent_loss(model, batch, &gw, &gb);
    const double h = 1e-6;
    double worst = 0;
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = intent_loss(model, batch);
      param = saved - h;
      const double down = intent_loss(model, batch);
      param = saved;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    };
    for (std::size_t i = 0; i < model.weights().size(); ++i) check(model.weights()[i], gw[i]);
    for (std::size_t k = 0; k < kNumIntents; ++k) check(model.bias()[k], gb[k]);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("training separates the synthetic templates") {
  const auto train_data = synthetic_windows(1, 300);
  IntentTrainOptions options;
  options.seed = 4;
  const IntentModel model = train_intent(train_data, options);
  CHECK(accuracy(model, train_data) >= 0.99);
  CHECK(accuracy(model, synthetic_windows(99, 200)) >= 0.95);
  CHECK(train_intent(train_data, options) == model);
}

TEST_CASE("prediction properties") {
  const auto data = synthetic_windows(2, 100);
  IntentTrainOptions options;
  options.feature_dim = 1 << 12;
  options.epochs = 5;
  IntentModel model = train_intent(data, options);
  const auto p = predict_intent(model, data[0].text);
  double total = 0;
  for (double x : p.probabilities) total += x;
  CHECK(std::abs(total - 1.0) < 1e-9);

  IntentModel scaled = model;
  for (double& w : scaled.weights()) w *= 3.5;
  for (double& b : scaled.bias()) b *= 3.5;
  for (const auto& e : data) CHECK(predict_intent(model, e.text).label == predict_intent(scaled, e.text).label);

  // An all-zero model ties every label; the first label wins.
  CHECK(predict_intent(IntentModel(16), "anything").label == IntentLabel::kBackground);
}

TEST_CASE("round-trip accuracy") {
  IntentModel model(16);
  model.bias() = {0, 0, 5, 0};
  std::vector<std::pair<IntentLabel, std::string>> items = {{IntentLabel::kSupportive, "x"},
                                                            {IntentLabel::kSupportive, "y"},
                                                            {IntentLabel::kSupportive, "z"},
                                                            {IntentLabel::kMethod, "w"}};
  CHECK(round_trip_accuracy(model, items) == 0.75);
  items.pop_back();
  CHECK(round_trip_accuracy(model, items) == 1.0);
  CHECK_THROWS_AS(round_trip_accuracy(model, {}), Error);
}

TEST_CASE("missing class is rejected") {
  std::vector<LabeledText> data = {{"a", IntentLabel::kBackground}, {"b", IntentLabel::kMethod},
                                   {"c", IntentLabel::kSupportive}};
  CHECK_THROWS_AS(train_intent(data, {}), Error);
}

TEST_CASE("citation windows") {
  const std::string target = "<B1> introduced parsing. We follow <B2> for tagging. Our results agree with <B3>.";
  CHECK(citation_window(target, 1) == "<B1> introduced parsing.");
  CHECK(citation_window(target, 2) == "We follow <B2> for tagging.");
  CHECK(citation_window(target, 3) == "Our results agree with <B3>.");
  CHECK(citation_window(target, 4) == target);
  CHECK(citation_window("<B1> did x. Then y. <B1> did z.", 1) == "<B1> did x. Then y. <B1> did z.");
}

TEST_CASE("intent checkpoint round trip") {
  IntentModel model(32);
  for (std::size_t i = 0; i < model.weights().size(); ++i) model.weights()[i] = static_cast<double>(i) * 0.5;
  model.bias() = {1, 2, 3, 4};
  const auto dir = citegen::testing::scratch_dir("intent");
  model.save(dir / "intent.bin");
  CHECK(IntentModel::load(dir / "intent.bin") == model);
  CHECK(std::filesystem::file_size(dir / "intent.bin") == 16 + 8 * (4 * 32 + 4));
}
