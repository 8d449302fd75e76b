#include "citegen/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>
#include <regex>
#include <set>
#include <unordered_map>

#include "citegen/errors.hpp"
#include "citegen/text.hpp"

namespace citegen {

namespace {

constexpr std::array<std::string_view, 22> kAbbreviations = {
    "al", "e.g", "i.e", "etc", "fig", "figs", "eq", "eqs", "cf", "vs", "dr",
    "mr", "mrs", "ms", "no", "sec", "tab", "approx", "resp", "ca", "vol", "pp"};

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }

bool is_abbreviation(std::string_view text, std::size_t period) {
  std::size_t begin = period;
  while (begin > 0 && text[begin - 1] != ' ' && text[begin - 1] != '(' && text[begin - 1] != '[') {
    --begin;
  }
  std::string word(text.substr(begin, period - begin));
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

struct MarkerPatterns {
  std::regex et_al{R"(([A-Z][A-Za-z'\-]+) et al\. \((\d{4}[a-z]?)\))"};
  std::regex narrative{R"(([A-Z][A-Za-z'\-]+) \((\d{4}[a-z]?)\))"};
  std::regex parenthetical{R"(\(([^()]+)\))"};
  std::regex parenthetical_item{R"(([A-Z][A-Za-z'\-]+)(?: et al\.)?, (\d{4}[a-z]?))"};
  std::regex numeric{R"(\[(\d+(?:, ?\d+)*)\])"};
};

const MarkerPatterns& patterns() {
  static const MarkerPatterns kPatterns;
  return kPatterns;
}

bool word_start(const std::string& text, std::size_t pos) {
  return pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
}

MarkerItem resolve(std::string canonical, const KeyTable& keys) {
  MarkerItem item{std::move(canonical), {}};
  if (auto it = keys.find(item.canonical); it != keys.end()) item.doc_id = it->second;
  return item;
}

std::vector<CitationMarker> find_markers(const std::string& text, const KeyTable& keys) {
  const MarkerPatterns& p = patterns();
  std::vector<CitationMarker> found;
  auto scan = [&](const std::regex& re, auto&& make) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator();
         ++it) {
      const std::smatch& m = *it;
      const auto begin = static_cast<std::size_t>(m.position(0));
      CitationMarker marker{begin, begin + static_cast<std::size_t>(m.length(0)), {}};
      if (make(m, marker)) found.push_back(std::move(marker));
    }
  };

  auto author_year = [&](const std::smatch& m, CitationMarker& marker) {
    if (!word_start(text, marker.begin)) return false;
    marker.items.push_back(resolve(m.str(1) + " " + m.str(2), keys));
    return true;
  };
  scan(p.et_al, author_year);
  scan(p.narrative, author_year);
  scan(p.parenthetical, [&](const std::smatch& m, CitationMarker& marker) {
    const std::string inner = m.str(1);
    for (std::string_view part : split_on(inner, ';')) {
      std::string item(trim(part));
      std::smatch im;
      if (!std::regex_match(item, im, p.parenthetical_item)) return false;
      marker.items.push_back(resolve(im.str(1) + " " + im.str(2), keys));
    }
    return !marker.items.empty();
  });
  scan(p.numeric, [&](const std::smatch& m, CitationMarker& marker) {
    const std::string inner = m.str(1);
    for (std::string_view part : split_on(inner, ',')) {
      marker.items.push_back(resolve("[" + std::string(trim(part)) + "]", keys));
    }
    return true;
  });

  // Earliest start wins; at equal start the longer match wins.
  std::sort(found.begin(), found.end(), [](const CitationMarker& a, const CitationMarker& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    return a.end > b.end;
  });
  std::vector<CitationMarker> kept;
  for (auto& marker : found) {
    if (!kept.empty() && marker.begin < kept.back().end) continue;
    kept.push_back(std::move(marker));
  }
  return kept;
}

}  // namespace

std::vector<SentenceSpan> split_sentences(std::string_view body) {
  const std::string text = normalize_whitespace(body);
  std::vector<SentenceSpan> spans;
  std::size_t start = 0;
  int depth = 0;
  auto emit = [&](std::size_t end) {
    std::string_view piece = trim(std::string_view(text).substr(start, end - start));
    if (!piece.empty()) {
      spans.push_back(SentenceSpan{std::string(piece), spans.size(), {}, false, {}});
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(' || c == '[') {
      ++depth;
    } else if ((c == ')' || c == ']') && depth > 0) {
      --depth;
    } else if ((c == '.' || c == '!' || c == '?') && depth == 0) {
      const bool at_end = i + 1 == text.size();
      const bool before_upper = i + 2 < text.size() && text[i + 1] == ' ' && is_upper(text[i + 2]);
      if (!at_end && !before_upper) continue;
      if (c == '.' && !at_end && is_abbreviation(text, i)) continue;
      emit(i + 1);
      start = i + 1;
    }
  }
  if (start < text.size()) emit(text.size());
  return spans;
}

SentenceSpan detect_citations(std::string_view sentence, const KeyTable& keys) {
  SentenceSpan span;
  span.text = normalize_whitespace(sentence);
  span.markers = find_markers(span.text, keys);
  for (const auto& marker : span.markers) {
    for (const auto& item : marker.items) {
      if (!item.doc_id.empty()) span.cite_keys.push_back(item.doc_id);
    }
  }
  span.is_explicit = !span.cite_keys.empty();
  return span;
}

std::vector<std::vector<SentenceSpan>> group_consecutive(const std::vector<SentenceSpan>& spans) {
  std::vector<std::vector<SentenceSpan>> groups;
  for (const auto& span : spans) {
    if (!span.is_explicit) continue;
    if (!groups.empty() && span.index - groups.back().back().index <= 2) {
      groups.back().push_back(span);
    } else {
      groups.push_back({span});
    }
  }
  return groups;
}

RewrittenTarget rewrite_target(const std::vector<SentenceSpan>& group,
                               std::span<const SentenceSpan> body_spans) {
  RewrittenTarget out;
  for (const auto& span : group) {
    for (const auto& key : span.cite_keys) {
      if (std::find(out.cited_ids.begin(), out.cited_ids.end(), key) == out.cited_ids.end()) {
        out.cited_ids.push_back(key);
      }
    }
  }
  if (out.cited_ids.size() > kMaxCited) {
    throw Error(ErrorCode::kMaxRefsExceeded,
                std::to_string(out.cited_ids.size()) + " distinct references in one group");
  }

  auto render = [&](const SentenceSpan& span) {
    std::string text;
    std::size_t cursor = 0;
    for (const auto& marker : span.markers) {
      text.append(span.text, cursor, marker.begin - cursor);
      std::string replacement;
      for (const auto& item : marker.items) {
        if (!replacement.empty()) replacement.push_back(' ');
        auto it = std::find(out.cited_ids.begin(), out.cited_ids.end(), item.doc_id);
        if (item.doc_id.empty() || it == out.cited_ids.end()) {
          replacement += "<REF>";
        } else {
          replacement += placeholder(static_cast<std::size_t>(it - out.cited_ids.begin()) + 1);
        }
      }
      text += replacement;
      cursor = marker.end;
    }
    text.append(span.text, cursor);
    return text;
  };

  std::vector<std::string> pieces;
  for (std::size_t g = 0; g < group.size(); ++g) {
    if (g > 0) {
      for (const auto& bridge : body_spans) {
        if (bridge.index > group[g - 1].index && bridge.index < group[g].index) {
          pieces.push_back(render(bridge));
        }
      }
    }
    pieces.push_back(render(group[g]));
  }
  std::string joined;
  for (const auto& piece : pieces) {
    if (!joined.empty()) joined.push_back(' ');
    joined += piece;
  }
  out.target = normalize_whitespace(joined);
  return out;
}

BuildResult build_dataset(const std::vector<Document>& documents,
                          const std::map<std::string, std::string>& bodies,
                          const KeyTable& keys, const IntentFn& intent_fn) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& doc : documents) by_id.emplace(doc.id, &doc);

  BuildResult result;
  for (const auto& [citing_id, body] : bodies) {
    std::vector<SentenceSpan> spans;
    for (const auto& raw : split_sentences(body)) {
      SentenceSpan span = detect_citations(raw.text, keys);
      span.index = raw.index;
      spans.push_back(std::move(span));
    }
    for (const auto& group : group_consecutive(spans)) {
      ++result.stats.groups;
      RewrittenTarget rewritten;
      try {
        rewritten = rewrite_target(group, spans);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMaxRefsExceeded) throw;
        ++result.stats.max_refs_rejected;
        continue;
      }
      std::string missing;
      if (!by_id.contains(citing_id)) missing = citing_id;
      for (const auto& id : rewritten.cited_ids) {
        if (missing.empty() && !by_id.contains(id)) missing = id;
      }
      if (!missing.empty()) {
        ++result.stats.unresolved_skipped;
        result.stats.warnings.push_back("skipping group in " + citing_id +
                                        ": unresolvable document " + missing);
        continue;
      }
      CitationInstance instance;
      instance.citing_id = citing_id;
      instance.cited_ids = std::move(rewritten.cited_ids);
      instance.target = std::move(rewritten.target);
      instance.intents = intent_fn(instance.target, instance.cited_ids.size());
      if (instance.intents.size() != instance.cited_ids.size()) {
        throw Error(ErrorCode::kFormatError, "intent labeler returned wrong number of labels");
      }
      result.instances.push_back(std::move(instance));
      ++result.stats.accepted;
    }
  }
  assign_instance_ids(result.instances);
  return result;
}

void assign_instance_ids(std::vector<CitationInstance>& instances) {
  std::unordered_map<std::string, std::size_t> ordinal;
  for (auto& instance : instances) {
    instance.id = instance.citing_id + "#" + std::to_string(ordinal[instance.citing_id]++);
  }
}

SplitCounts split_counts(std::size_t n) {
  SplitCounts counts;
  counts.train = n * 8 / 10;
  counts.valid = n / 10;
  counts.test = n - counts.train - counts.valid;
  return counts;
}

void split_dataset(std::vector<CitationInstance>& instances, std::uint64_t seed) {
  if (instances.size() < 10) {
    throw Error(ErrorCode::kSplitTooSmall,
                "need at least 10 instances, got " + std::to_string(instances.size()));
  }
  if (std::any_of(instances.begin(), instances.end(),
                  [](const CitationInstance& c) { return c.id.empty(); })) {
    assign_instance_ids(instances);
  }
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return instances[a].id < instances[b].id; });
  auto rng = make_rng(seed, "split");
  portable_shuffle(order, rng);

  const SplitCounts counts = split_counts(instances.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    Split split = Split::kTest;
    if (pos < counts.train) {
      split = Split::kTrain;
    } else if (pos < counts.train + counts.valid) {
      split = Split::kValid;
    }
    instances[order[pos]].split = split;
  }
}

}  // namespace citegen
