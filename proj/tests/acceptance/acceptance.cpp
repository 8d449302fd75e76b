// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "citegen/corpus.hpp"
#include "citegen/errors.hpp"
#include "citegen/fid_model.hpp"
#include "citegen/intent.hpp"
#include "citegen/metrics.hpp"
#include "citegen/retrieval.hpp"
#include "citegen/text.hpp"
#include "citegen/tokenizer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace citegen;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && std::equal(a.data(), a.data() + a.size(), b.data());
}

DocumentIndex index_documents(const std::vector<Document>& documents) {
  DocumentIndex index;
  for (const auto& d : documents) index[d.id] = d;
  return index;
}

std::vector<int> strip_target(const std::vector<int>& target) {
  std::vector<int> out;
  for (int t : target) {
    out.push_back(t);
    if (t == token_id::kEos) break;
  }
  return out;
}

// ------------------------------------------------------------------ 1

Outcome gradient_check() {
  const ModelConfig c = testing::tiny_config();
  double worst = 0;
  std::string worst_name;
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    Parameters params = init_parameters(c, 100 + trial);
    testing::perturb(params, 0.1, 200 + trial);
    std::mt19937_64 rng(300 + trial);
    const FidInput input = FidInput::from_blocks({testing::random_block(rng, c, 6), testing::random_block(rng, c, 3)});
    const std::vector<int> target = testing::random_target(rng, c, 3);
    const Gradients analytic = backward(params, c, input, target);
    std::map<std::string, const Matrix*> grads;
    analytic.grads.visit([&](const std::string& name, const Matrix& m) { grads[name] = &m; });
    const double h = 1e-5;
    params.visit([&](const std::string& name, Matrix& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double saved = m.data()[i];
        m.data()[i] = saved + h;
        const double up = forward_loss(params, c, input, target).loss;
        m.data()[i] = saved - h;
        const double down = forward_loss(params, c, input, target).loss;
        m.data()[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double a = grads.at(name)->data()[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        if (rel > worst) {
          worst = rel;
          worst_name = name;
        }
      }
    });
  }
  return {worst < 1e-3, "max relative error " + fmt(worst) + " (" + worst_name + ")"};
}

// ------------------------------------------------------------------ 2

Outcome overfitting_oracle() {
  SyntheticSpec spec;
  spec.n_single = 16;
  spec.n_multi = 4;
  spec.seed = 11;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  const auto documents = index_documents(corpus.documents);
  ModelConfig config;
  config.target_len = 40;
  config.vocab_size = 0;
  const Vocabulary vocab = training_vocabulary(corpus.gold, documents, 1, 100000);
  config.vocab_size = vocab.size();
  std::vector<TrainingExample> train_set;
  for (const auto& c : corpus.gold) train_set.push_back(make_example(vocab, c, documents, config, true));

  TrainOptions options;
  options.lr = 1e-3;
  options.epochs = 200;
  options.batch_size = 4;
  options.seed = 1;
  Parameters params = init_parameters(config, 1);
  train(params, config, train_set, {}, options);
  const double loss = mean_loss(params, config, train_set);

  GenerateOptions greedy;
  greedy.max_len = config.target_len;
  std::size_t exact = 0;
  for (const auto& e : train_set) exact += generate(params, config, e.input, greedy) == strip_target(e.target);
  return {loss < 0.1 && exact >= 18, std::to_string(train_set.size()) + " instances, " +
                                          std::to_string(options.epochs) + " epochs, train loss " + fmt(loss) +
                                          ", exact greedy matches " + std::to_string(exact) + "/20"};
}

// ------------------------------------------------------------------ 3

Outcome linear_cost() {
  ModelConfig config;
  config.vocab_size = 60;
  std::mt19937_64 rng(21);
  auto counts = [&](std::size_t n) {
    std::vector<std::vector<int>> blocks;
    for (std::size_t b = 0; b < n; ++b) blocks.push_back(testing::random_block(rng, config, 20 + 5 * b));
    const FidInput input = FidInput::from_blocks(blocks);
    const Parameters params = init_parameters(config, 5);
    AttentionCounter fid, mono;
    forward_loss(params, config, input, testing::random_target(rng, config, 6), &fid);
    encode_monolithic(params, config, input, &mono);
    return std::pair{fid.scores, mono.scores};
  };
  // Per head and layer, self-attention over a block of L tokens scores L*L
  // pairs; FiD does this per block, the monolithic encoder over N*L tokens.
  auto closed_form = [&](std::size_t n, bool monolithic) {
    const std::uint64_t per = config.n_enc_layers * config.n_heads;
    const std::uint64_t L = config.block_len;
    return monolithic ? per * (n * L) * (n * L) : per * n * L * L;
  };
  bool exact = true;
  std::map<std::size_t, std::pair<std::uint64_t, std::uint64_t>> seen;
  for (std::size_t n = 1; n <= kMaxCited; ++n) {
    seen[n] = counts(n);
    exact = exact && seen[n].first == closed_form(n, false) && seen[n].second == closed_form(n, true) &&
            attention_cost(config, n).fid == seen[n].first && attention_cost(config, n).monolithic == seen[n].second;
  }
  const double fid_ratio = static_cast<double>(seen[4].first) / static_cast<double>(seen[1].first);
  const double mono_ratio = static_cast<double>(seen[4].second) / static_cast<double>(seen[1].second);
  return {exact && fid_ratio == 4.0 && mono_ratio == 16.0,
          std::string("counts ") + (exact ? "equal" : "differ from") + " the closed form for N=1..8, FiD ratio " +
              fmt(fid_ratio) + ", monolithic ratio " + fmt(mono_ratio)};
}

// ------------------------------------------------------------------ 4

Outcome block_independence() {
  ModelConfig config;
  config.vocab_size = 80;
  std::size_t unchanged = 0, trials = 20, changed = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(400 + t);
    Parameters params = init_parameters(config, 50 + t);
    testing::perturb(params, 0.05, 60 + t);
    const std::size_t n = 2 + t % 7;
    std::vector<std::vector<int>> blocks;
    for (std::size_t b = 0; b < n; ++b) blocks.push_back(testing::random_block(rng, config, 10 + rng() % 50));
    const Matrix before = encode_blocks(params, config, FidInput::from_blocks(blocks));
    blocks[1] = testing::random_block(rng, config, 10 + rng() % 50);
    const Matrix after = encode_blocks(params, config, FidInput::from_blocks(blocks));
    const auto L = static_cast<Eigen::Index>(config.block_len);
    unchanged += same_bits(before.topRows(L), after.topRows(L));
    changed += !same_bits(before.middleRows(L, L), after.middleRows(L, L));
  }
  return {unchanged == trials && changed == trials,
          "block 1 states bit-identical in " + std::to_string(unchanged) + "/" + std::to_string(trials) +
              " trials after replacing block 2"};
}

// ------------------------------------------------------------------ 5, 6

struct GenerationExperiment {
  std::size_t n_instances = 0;
  EvalReport with_intent, without_intent, baseline, oracle;
  double seconds = 0;
};

std::vector<TextRecord> predict(const Parameters& params, const ModelConfig& config, const Vocabulary& vocab,
                                const std::vector<CitationInstance>& test, const DocumentIndex& documents,
                                bool use_intent) {
  GenerateOptions greedy;
  greedy.max_len = config.target_len;
  std::vector<TextRecord> out;
  for (const auto& c : test) {
    const FidInput input = build_fid_input(vocab, c, documents, config.block_len, use_intent);
    out.push_back({c.id, vocab.decode(generate(params, config, input, greedy))});
  }
  return out;
}

const GenerationExperiment& generation_experiment() {
  static const GenerationExperiment result = [] {
    const auto start = std::chrono::steady_clock::now();
    GenerationExperiment ex;
    SyntheticSpec spec;
    spec.n_single = 500;
    spec.n_multi = 50;
    spec.seed = 7;
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
    const auto documents = index_documents(corpus.documents);

    // The same pipeline as the command-line tool: train the labeler on the
    // generator's intents, then extract, label and split.
    const IntentModel labeler = train_intent(labeled_windows(corpus.gold), IntentTrainOptions{});
    BuildResult built = build_dataset(corpus.documents, corpus.bodies, corpus.keys,
                                      [&](const std::string& target, std::size_t n) {
                                        return label_citations(labeler, target, n);
                                      });
    split_dataset(built.instances, spec.seed);
    const auto& dataset = built.instances;
    ex.n_instances = dataset.size();
    std::vector<CitationInstance> train_part, valid_part, test_part;
    for (const auto& c : dataset) {
      (c.split == Split::kTrain ? train_part : c.split == Split::kValid ? valid_part : test_part).push_back(c);
    }
    const Vocabulary vocab = training_vocabulary(train_part, documents, 1, 100000);
    ModelConfig config;
    config.vocab_size = vocab.size();

    TrainOptions options;
    options.lr = 1e-3;
    options.epochs = 15;
    options.batch_size = 8;
    options.seed = 1;
    std::map<bool, Parameters> models;
    for (bool use_intent : {true, false}) {
      std::vector<TrainingExample> train_set, valid_set;
      for (const auto& c : train_part) train_set.push_back(make_example(vocab, c, documents, config, use_intent));
      for (const auto& c : valid_part) valid_set.push_back(make_example(vocab, c, documents, config, use_intent));
      Parameters params = init_parameters(config, 1);
      train(params, config, train_set, valid_set, options);
      models[use_intent] = std::move(params);
    }

    std::vector<TextRecord> refs;
    for (const auto& c : test_part) refs.push_back({c.id, c.target});
    const auto with = predict(models[true], config, vocab, test_part, documents, true);
    const auto without = predict(models[false], config, vocab, test_part, documents, false);
    ex.with_intent = evaluate(with, refs, RoundTripInputs{&labeler, &dataset, &without});
    ex.without_intent = evaluate(without, refs);

    const Matrix& embedding = models[true].token_embedding;
    std::vector<TextRecord> baseline, oracle;
    for (const auto& c : test_part) {
      baseline.push_back({c.id, retrieve_baseline(embedding, vocab, c, documents).prediction});
      oracle.push_back({c.id, retrieve_oracle(embedding, vocab, c, documents).prediction});
    }
    ex.baseline = evaluate(baseline, refs);
    ex.oracle = evaluate(oracle, refs);
    ex.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return ex;
  }();
  return result;
}

Outcome intent_control() {
  const auto& ex = generation_experiment();
  const double with = ex.with_intent.round_trip_acc_with_intent.value();
  const double without = ex.with_intent.round_trip_acc_without_intent.value();
  return {ex.n_instances >= 500 && with - without >= 0.10 && with >= 0.85,
          std::to_string(ex.n_instances) + " instances, round-trip accuracy with intent " + fmt(with) +
              ", without " + fmt(without) + ", models trained in " + fmt(ex.seconds, 3) + " s"};
}

Outcome score_ordering() {
  const auto& ex = generation_experiment();
  const bool pass = ex.with_intent.bleu >= ex.without_intent.bleu && ex.with_intent.rougeL_f >= ex.without_intent.rougeL_f &&
                    ex.with_intent.bleu > ex.baseline.bleu && ex.without_intent.bleu > ex.baseline.bleu &&
                    ex.oracle.rougeL_f >= ex.baseline.rougeL_f;
  auto pair = [](const EvalReport& r) { return fmt(r.bleu, 4) + "/" + fmt(r.rougeL_f, 4); };
  return {pass, "BLEU/ROUGE-L with intent " + pair(ex.with_intent) + ", without " + pair(ex.without_intent) +
                    ", retrieval baseline " + pair(ex.baseline) + ", retrieval oracle " + pair(ex.oracle)};
}

// ------------------------------------------------------------------ 7

Outcome metric_oracles() {
  std::mt19937_64 rng(77);
  double worst = 0;
  bool maximal = true;
  std::vector<Tokens> cands, refs;
  for (int i = 0; i < 50; ++i) {
    cands.push_back(oracle::random_seq(rng, 12));
    refs.push_back(oracle::random_seq(rng, 12));
    const auto& c = cands.back();
    const auto& r = refs.back();
    for (std::size_t n : {1, 2}) {
      const auto got = rouge_n(c, r, n);
      const auto want = oracle::rouge_n(c, r, n);
      worst = std::max({worst, std::abs(got.precision - want.p), std::abs(got.recall - want.r),
                        std::abs(got.f - want.f)});
    }
    const auto l = rouge_l(c, r);
    const auto wl = oracle::rouge_l(c, r);
    worst = std::max({worst, std::abs(l.precision - wl.p), std::abs(l.recall - wl.r), std::abs(l.f - wl.f)});
    worst = std::max(worst, std::abs(bleu({c}, {r}) - oracle::bleu({c}, {r})));
    maximal = maximal && bleu({c}, {c}) == 100.0 && rouge_n(c, c, 1).f == 1.0 && rouge_l(c, c).f == 1.0 &&
              (c.size() < 2 || rouge_n(c, c, 2).f == 1.0);
  }
  worst = std::max(worst, std::abs(bleu(cands, refs) - oracle::bleu(cands, refs)));
  maximal = maximal && bleu(cands, cands) == 100.0;
  return {worst < 1e-9 && maximal, "max deviation from brute force " + fmt(worst) + " on 50 pairs, identical pairs " +
                                       (maximal ? "maximal" : "NOT maximal")};
}

// ------------------------------------------------------------------ 8

Outcome corpus_round_trip() {
  std::size_t matched = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.n_single = 80;
    spec.n_multi = 20;
    spec.max_multi = kMaxCited;
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
    const IntentModel labeler = train_intent(labeled_windows(corpus.gold), IntentTrainOptions{});
    BuildResult built = build_dataset(corpus.documents, corpus.bodies, corpus.keys,
                                      [&](const std::string& target, std::size_t n) {
                                        return label_citations(labeler, target, n);
                                      });
    split_dataset(built.instances, seed);
    total += std::max(corpus.gold.size(), built.instances.size());
    for (std::size_t i = 0; i < corpus.gold.size() && i < built.instances.size(); ++i) {
      matched += built.instances[i] == corpus.gold[i];
    }
  }
  return {matched == total, std::to_string(matched) + "/" + std::to_string(total) +
                                " gold instances reproduced over 5 generator seeds"};
}

// ------------------------------------------------------------------ 9

Outcome split_determinism() {
  std::vector<CitationInstance> instances(100);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    instances[i].citing_id = "paper" + std::to_string(i / 3);
    instances[i].cited_ids = {"ref" + std::to_string(i)};
    instances[i].intents = {IntentLabel::kBackground};
    instances[i].target = "<B1> is cited.";
  }
  assign_instance_ids(instances);
  auto assignment = [](std::vector<CitationInstance> v, std::uint64_t seed) {
    split_dataset(v, seed);
    std::map<std::string, Split> out;
    for (const auto& c : v) out[c.id] = c.split;
    return out;
  };
  const auto first = assignment(instances, 13);
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& [id, split] : first) ++counts[static_cast<int>(split)];
  bool stable = true;
  for (int rerun = 0; rerun < 5; ++rerun) stable = stable && assignment(instances, 13) == first;
  std::vector<CitationInstance> reversed(instances.rbegin(), instances.rend());
  stable = stable && assignment(reversed, 13) == first;
  return {counts[0] == 80 && counts[1] == 10 && counts[2] == 10 && stable,
          "train/valid/test " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
              std::to_string(counts[2]) + ", reruns " + (stable ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double time_limit;  // seconds, 0 for none
  };
  const std::vector<Criterion> criteria = {
      {"gradient correctness", gradient_check, 60},
      {"overfitting oracle", overfitting_oracle, 600},
      {"linear attention cost", linear_cost, 0},
      {"block independence", block_independence, 0},
      {"intent control", intent_control, 1800},
      {"score ordering", score_ordering, 0},
      {"metric oracle equivalence", metric_oracles, 0},
      {"corpus round trip", corpus_round_trip, 0},
      {"split determinism", split_determinism, 0},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].time_limit > 0 && seconds > criteria[i].time_limit) {
      outcome.pass = false;
      outcome.detail += ", over the time limit";
    }
    failures += !outcome.pass;
    std::printf("%s %zu %s: %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
