#pragma once

#include <optional>
#include <string>
#include <vector>

#include "citegen/intent.hpp"
#include "citegen/types.hpp"

namespace citegen {

using Tokens = std::vector<std::string>;

// Corpus BLEU-4 in [0, 100]: clipped n-gram precision summed over the
// corpus, add-one smoothing for n >= 2, brevity penalty.
// Throws Error(kEmptyEvalSet) for empty input, Error(kAlignmentError) for
// lists of different length.
double bleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references);

struct PrfScore {
  double precision = 0;
  double recall = 0;
  double f = 0;
};

PrfScore rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n);
PrfScore rouge_l(const Tokens& candidate, const Tokens& reference);
std::size_t lcs_length(const Tokens& a, const Tokens& b);

struct MeteorDetail {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double f_mean = 0;
  double penalty = 0;
  double score = 0;
};

// Exact-match METEOR core: leftmost greedy unigram alignment, recall-weighted
// F-mean (alpha 0.9), fragmentation penalty 0.5 * (chunks / matches)^3.
MeteorDetail meteor_simplified(const Tokens& candidate, const Tokens& reference);

struct EvalReport {
  double bleu = 0;
  double rouge1_f = 0;
  double rouge2_f = 0;
  double rougeL_f = 0;
  double meteor = 0;
  std::optional<double> round_trip_acc_with_intent;
  std::optional<double> round_trip_acc_without_intent;
  std::size_t n_examples = 0;
  std::size_t skipped_empty_references = 0;
};

// Overlap metrics over aligned (candidate, reference) texts, tokenized with
// the shared tokenizer. ROUGE and METEOR are per-example means scaled to
// [0, 100]; pairs with an empty reference are skipped and counted.
EvalReport score_texts(const std::vector<std::string>& candidates, const std::vector<std::string>& references);

// One line of a predictions or references file.
struct TextRecord {
  std::string instance_id;
  std::string text;
};

// Pairs (instance, n) with the dataset intent of the n-th cited document and
// the citation window of <Bn> in the generated text.
std::vector<std::pair<IntentLabel, std::string>> round_trip_items(
    const std::vector<TextRecord>& predictions, const std::vector<CitationInstance>& dataset);

struct RoundTripInputs {
  const IntentModel* model = nullptr;
  const std::vector<CitationInstance>* dataset = nullptr;
  // Generations of a model trained without intent codes, scored against the
  // same intended intents.
  const std::vector<TextRecord>* predictions_without_intent = nullptr;
};

// Throws Error(kAlignmentError) unless predictions and references cover the
// same instance ids exactly once each.
EvalReport evaluate(const std::vector<TextRecord>& predictions, const std::vector<TextRecord>& references,
                    const RoundTripInputs& round_trip = {});

std::string format_report_table(const EvalReport& report);
std::string report_json(const EvalReport& report);

}  // namespace citegen
