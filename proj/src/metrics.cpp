#include "citegen/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "citegen/errors.hpp"
#include "citegen/tokenizer.hpp"
#include "json.hpp"

namespace citegen {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngram_counts(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t clipped_overlap(const NgramCounts& candidate, const NgramCounts& reference) {
  std::size_t total = 0;
  for (const auto& [gram, count] : candidate) {
    auto it = reference.find(gram);
    if (it != reference.end()) total += std::min(count, it->second);
  }
  return total;
}

std::size_t ngram_total(std::size_t length, std::size_t n) { return length >= n ? length - n + 1 : 0; }

PrfScore prf(double overlap, double candidate_total, double reference_total) {
  PrfScore s;
  s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
  s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
  s.f = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace

double bleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyEvalSet, "BLEU over an empty candidate list");
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::kAlignmentError, "BLEU candidate and reference counts differ");
  }
  std::array<std::size_t, 4> matched{};
  std::array<std::size_t, 4> total{};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      matched[n - 1] += clipped_overlap(ngram_counts(candidates[i], n), ngram_counts(references[i], n));
      total[n - 1] += ngram_total(candidates[i].size(), n);
    }
  }
  if (cand_len == 0 || matched[0] == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(matched[0]) / static_cast<double>(total[0]));
  for (std::size_t n = 2; n <= 4; ++n) {
    log_sum += std::log((static_cast<double>(matched[n - 1]) + 1.0) / (static_cast<double>(total[n - 1]) + 1.0));
  }
  const double brevity =
      cand_len > ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return 100.0 * brevity * std::exp(log_sum / 4.0);
}

PrfScore rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n) {
  const auto overlap = clipped_overlap(ngram_counts(candidate, n), ngram_counts(reference, n));
  return prf(static_cast<double>(overlap), static_cast<double>(ngram_total(candidate.size(), n)),
             static_cast<double>(ngram_total(reference.size(), n)));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PrfScore rouge_l(const Tokens& candidate, const Tokens& reference) {
  return prf(static_cast<double>(lcs_length(candidate, reference)), static_cast<double>(candidate.size()),
             static_cast<double>(reference.size()));
}

MeteorDetail meteor_simplified(const Tokens& candidate, const Tokens& reference) {
  MeteorDetail d;
  std::vector<bool> used(reference.size(), false);
  // Reference position aligned to each candidate token, or -1.
  std::vector<long> aligned(candidate.size(), -1);
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      if (!used[j] && reference[j] == candidate[i]) {
        used[j] = true;
        aligned[i] = static_cast<long>(j);
        ++d.matches;
        break;
      }
    }
  }
  if (d.matches == 0) return d;
  long previous = -2;
  bool in_chunk = false;
  for (long j : aligned) {
    if (j < 0) {
      in_chunk = false;
      continue;
    }
    if (!in_chunk || j != previous + 1) ++d.chunks;
    in_chunk = true;
    previous = j;
  }
  const double m = static_cast<double>(d.matches);
  const double precision = m / static_cast<double>(candidate.size());
  const double recall = m / static_cast<double>(reference.size());
  d.f_mean = 10 * precision * recall / (recall + 9 * precision);
  d.penalty = 0.5 * std::pow(static_cast<double>(d.chunks) / m, 3.0);
  d.score = d.f_mean * (1 - d.penalty);
  return d;
}

EvalReport score_texts(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::kAlignmentError, "candidate and reference counts differ");
  }
  EvalReport report;
  std::vector<Tokens> cand_tokens, ref_tokens;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Tokens ref = tokenize(references[i]);
    if (ref.empty()) {
      ++report.skipped_empty_references;
      continue;
    }
    cand_tokens.push_back(tokenize(candidates[i]));
    ref_tokens.push_back(std::move(ref));
  }
  if (cand_tokens.empty()) throw Error(ErrorCode::kEmptyEvalSet, "no pair with a non-empty reference");
  report.n_examples = cand_tokens.size();
  report.bleu = bleu(cand_tokens, ref_tokens);
  for (std::size_t i = 0; i < cand_tokens.size(); ++i) {
    report.rouge1_f += rouge_n(cand_tokens[i], ref_tokens[i], 1).f;
    report.rouge2_f += rouge_n(cand_tokens[i], ref_tokens[i], 2).f;
    report.rougeL_f += rouge_l(cand_tokens[i], ref_tokens[i]).f;
    report.meteor += meteor_simplified(cand_tokens[i], ref_tokens[i]).score;
  }
  const double scale = 100.0 / static_cast<double>(report.n_examples);
  report.rouge1_f *= scale;
  report.rouge2_f *= scale;
  report.rougeL_f *= scale;
  report.meteor *= scale;
  return report;
}

std::vector<std::pair<IntentLabel, std::string>> round_trip_items(const std::vector<TextRecord>& predictions,
                                                                  const std::vector<CitationInstance>& dataset) {
  std::unordered_map<std::string, const CitationInstance*> by_id;
  for (const auto& instance : dataset) by_id[instance.id] = &instance;
  std::vector<std::pair<IntentLabel, std::string>> items;
  for (const auto& record : predictions) {
    auto it = by_id.find(record.instance_id);
    if (it == by_id.end()) throw Error(ErrorCode::kAlignmentError, "no dataset instance " + record.instance_id);
    const auto& intents = it->second->intents;
    for (std::size_t n = 1; n <= intents.size(); ++n) {
      items.emplace_back(intents[n - 1], citation_window(record.text, n));
    }
  }
  return items;
}

EvalReport evaluate(const std::vector<TextRecord>& predictions, const std::vector<TextRecord>& references,
                    const RoundTripInputs& round_trip) {
  std::unordered_map<std::string, const TextRecord*> predicted;
  for (const auto& record : predictions) {
    if (!predicted.emplace(record.instance_id, &record).second) {
      throw Error(ErrorCode::kAlignmentError, "duplicate prediction for " + record.instance_id);
    }
  }
  std::set<std::string> seen;
  std::vector<std::string> candidates, targets;
  for (const auto& record : references) {
    if (!seen.insert(record.instance_id).second) {
      throw Error(ErrorCode::kAlignmentError, "duplicate reference for " + record.instance_id);
    }
    auto it = predicted.find(record.instance_id);
    if (it == predicted.end()) throw Error(ErrorCode::kAlignmentError, "no prediction for " + record.instance_id);
    candidates.push_back(it->second->text);
    targets.push_back(record.text);
  }
  if (predicted.size() != references.size()) {
    throw Error(ErrorCode::kAlignmentError, "predictions contain ids absent from the references");
  }
  EvalReport report = score_texts(candidates, targets);
  if (round_trip.model && round_trip.dataset) {
    report.round_trip_acc_with_intent =
        round_trip_accuracy(*round_trip.model, round_trip_items(predictions, *round_trip.dataset));
    if (round_trip.predictions_without_intent) {
      report.round_trip_acc_without_intent = round_trip_accuracy(
          *round_trip.model, round_trip_items(*round_trip.predictions_without_intent, *round_trip.dataset));
    }
  }
  return report;
}

std::string format_report_table(const EvalReport& report) {
  auto row = [](const char* name, double value) {
    char line[64];
    std::snprintf(line, sizeof(line), "%-30s %8.2f\n", name, value);
    return std::string(line);
  };
  auto accuracy = [](const char* name, const std::optional<double>& value) {
    char line[64];
    if (value) {
      std::snprintf(line, sizeof(line), "%-30s %8.4f\n", name, *value);
    } else {
      std::snprintf(line, sizeof(line), "%-30s %8s\n", name, "n/a");
    }
    return std::string(line);
  };
  std::string out;
  out += row("BLEU", report.bleu);
  out += row("ROUGE-1 F", report.rouge1_f);
  out += row("ROUGE-2 F", report.rouge2_f);
  out += row("ROUGE-L F", report.rougeL_f);
  out += row("METEOR (simplified)", report.meteor);
  out += accuracy("round-trip acc (with intent)", report.round_trip_acc_with_intent);
  out += accuracy("round-trip acc (no intent)", report.round_trip_acc_without_intent);
  out += "examples " + std::to_string(report.n_examples);
  if (report.skipped_empty_references) {
    out += " (skipped " + std::to_string(report.skipped_empty_references) + " empty references)";
  }
  out += "\n";
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["bleu"] = report.bleu;
  j["rouge1_f"] = report.rouge1_f;
  j["rouge2_f"] = report.rouge2_f;
  j["rougeL_f"] = report.rougeL_f;
  j["meteor"] = report.meteor;
  j["meteor_variant"] = "meteor_simplified";
  j["round_trip_acc_with_intent"] =
      report.round_trip_acc_with_intent ? nlohmann::ordered_json(*report.round_trip_acc_with_intent) : nullptr;
  j["round_trip_acc_without_intent"] = report.round_trip_acc_without_intent
                                           ? nlohmann::ordered_json(*report.round_trip_acc_without_intent)
                                           : nullptr;
  j["n_examples"] = report.n_examples;
  j["skipped_empty_references"] = report.skipped_empty_references;
  return j.dump(2) + "\n";
}

}  // namespace citegen
