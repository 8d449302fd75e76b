#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citegen/types.hpp"

namespace citegen {

// A citation marker found in a sentence. A marker may hold several items,
// e.g. "(Smith, 2019; Jones et al., 2020)" or "[3, 4]".
struct MarkerItem {
  std::string canonical;  // "Smith 2019" or "[3]"
  std::string doc_id;     // empty when the key table has no entry
};

struct CitationMarker {
  std::size_t begin = 0;  // byte offsets into SentenceSpan::text
  std::size_t end = 0;
  std::vector<MarkerItem> items;
};

struct SentenceSpan {
  std::string text;
  std::size_t index = 0;
  std::vector<std::string> cite_keys;  // resolved doc ids, surface order
  bool is_explicit = false;
  std::vector<CitationMarker> markers;
};

// Canonical marker string -> document id.
using KeyTable = std::unordered_map<std::string, std::string>;

std::vector<SentenceSpan> split_sentences(std::string_view body);

SentenceSpan detect_citations(std::string_view sentence, const KeyTable& keys);

std::vector<std::vector<SentenceSpan>> group_consecutive(const std::vector<SentenceSpan>& spans);

struct RewrittenTarget {
  std::string target;
  std::vector<std::string> cited_ids;
};

// Distinct keys in first-appearance order become <B1>..<BN>; markers with no
// resolved key, or a key outside the group, become <REF>. When `body_spans`
// is given, sentences lying between group members (the bridging sentence)
// are kept in the target.
// Throws Error(kMaxRefsExceeded) for more than eight distinct cited keys.
RewrittenTarget rewrite_target(const std::vector<SentenceSpan>& group,
                               std::span<const SentenceSpan> body_spans = {});

// Produces one intent per cited document from the placeholder target.
using IntentFn = std::function<std::vector<IntentLabel>(const std::string& target, std::size_t n_cited)>;

struct BuildStats {
  std::size_t groups = 0;
  std::size_t accepted = 0;
  std::size_t unresolved_skipped = 0;  // warning count
  std::size_t max_refs_rejected = 0;
  std::vector<std::string> warnings;
};

struct BuildResult {
  std::vector<CitationInstance> instances;
  BuildStats stats;
};

// bodies: citing document id -> body text. Instances come out in document
// order of `bodies` keys (sorted), groups in body order.
BuildResult build_dataset(const std::vector<Document>& documents,
                          const std::map<std::string, std::string>& bodies,
                          const KeyTable& keys, const IntentFn& intent_fn);

// Sets `id` on each instance as "<citing_id>#<k>", k counting from 0 in
// sequence order per citing document.
void assign_instance_ids(std::vector<CitationInstance>& instances);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

SplitCounts split_counts(std::size_t n);

// Assignment depends only on (instance ids, seed): ids are sorted, shuffled
// with the "split" sub-stream, then cut 80/10/remainder.
// Throws Error(kSplitTooSmall) below ten instances.
void split_dataset(std::vector<CitationInstance>& instances, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n_single = 50;
  std::size_t n_multi = 10;
  std::size_t max_multi = 3;  // cited documents per multi-citation group, >= 2
  std::array<double, kNumIntents> intent_weights = {0.4, 0.3, 0.15, 0.15};
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<Document> documents;
  std::map<std::string, std::string> bodies;
  KeyTable keys;
  std::vector<CitationInstance> gold;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

// The citation-sentence template for each intent, with "{C}" standing for the
// citation and "{T}" / "{U}" for cited and citing topics.
std::string_view intent_template(IntentLabel label);

}  // namespace citegen
