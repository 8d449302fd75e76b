#include <algorithm>
#include <set>

#include "citegen/corpus.hpp"
#include "citegen/errors.hpp"
#include "citegen/text.hpp"
#include "doctest.h"

using namespace citegen;

namespace {

std::vector<std::string> texts(const std::vector<SentenceSpan>& spans) {
  std::vector<std::string> out;
  for (const auto& s : spans) out.push_back(s.text);
  return out;
}

std::vector<SentenceSpan> flagged(const std::vector<bool>& flags) {
  std::vector<SentenceSpan> spans;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    SentenceSpan s;
    s.index = i;
    s.is_explicit = flags[i];
    if (flags[i]) s.cite_keys = {"d" + std::to_string(i)};
    spans.push_back(s);
  }
  return spans;
}

std::vector<std::vector<std::size_t>> indices(const std::vector<std::vector<SentenceSpan>>& groups) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& g : groups) {
    out.emplace_back();
    for (const auto& s : g) out.back().push_back(s.index);
  }
  return out;
}

const KeyTable kKeys = {{"Smith 2019", "smith2019"}, {"Jones 2020", "jones2020"}, {"Lee 2018", "lee2018"},
                        {"[3]", "doc3"},             {"[4]", "doc4"}};

std::vector<SentenceSpan> detected(std::string_view body, const KeyTable& keys) {
  std::vector<SentenceSpan> spans;
  for (const auto& raw : split_sentences(body)) {
    SentenceSpan s = detect_citations(raw.text, keys);
    s.index = raw.index;
    spans.push_back(s);
  }
  return spans;
}

}  // namespace

TEST_CASE("sentence splitting") {
  CHECK(texts(split_sentences("A works. B fails.")) == std::vector<std::string>{"A works.", "B fails."});
  CHECK(texts(split_sentences("See Smith et al. (2019). Next.")) ==
        std::vector<std::string>{"See Smith et al. (2019).", "Next."});
  CHECK(split_sentences("").empty());
  CHECK(texts(split_sentences("We use e.g. Graphs here. Done!")) ==
        std::vector<std::string>{"We use e.g. Graphs here.", "Done!"});
  CHECK(texts(split_sentences("It holds (see Fig. A. B). Then?  Yes.")) ==
        std::vector<std::string>{"It holds (see Fig. A. B).", "Then?", "Yes."});
  const auto spans = split_sentences("  One.\n\nTwo.  ");
  REQUIRE(spans.size() == 2);
  CHECK(spans[1].index == 1);
}

TEST_CASE("split pieces rejoin to the normalized body") {
  const std::string body = "First claim  holds. Smith et al. (2019) shows it!\nWhy? Because [3] said so.";
  std::string joined;
  for (const auto& s : split_sentences(body)) joined += (joined.empty() ? "" : " ") + s.text;
  CHECK(joined == normalize_whitespace(body));
}

TEST_CASE("citation detection") {
  auto s = detect_citations("Smith et al. (2019) proposed X.", kKeys);
  CHECK(s.cite_keys == std::vector<std::string>{"smith2019"});
  CHECK(s.is_explicit);
  s = detect_citations("We adopt prior methods [3, 4].", kKeys);
  CHECK(s.cite_keys == std::vector<std::string>{"doc3", "doc4"});
  s = detect_citations("This idea is elegant.", kKeys);
  CHECK(s.cite_keys.empty());
  CHECK_FALSE(s.is_explicit);
  s = detect_citations("As shown before (Jones, 2020; Smith et al., 2019), Lee (2018) agrees.", kKeys);
  CHECK(s.cite_keys == std::vector<std::string>{"jones2020", "smith2019", "lee2018"});
  s = detect_citations("Unknown (1999) did it.", kKeys);
  CHECK_FALSE(s.is_explicit);
  REQUIRE(s.markers.size() == 1);
  CHECK(s.markers[0].items[0].canonical == "Unknown 1999");
}

TEST_CASE("citation detection is idempotent and whitespace-insensitive") {
  const std::string sentence = "We follow Smith et al. (2019) and [4].";
  const auto a = detect_citations(sentence, kKeys);
  const auto b = detect_citations("   " + sentence + "  \n", kKeys);
  const auto c = detect_citations(a.text, kKeys);
  CHECK(a.cite_keys == b.cite_keys);
  CHECK(a.text == b.text);
  CHECK(a.cite_keys == c.cite_keys);
}

TEST_CASE("grouping consecutive citation sentences") {
  CHECK(indices(group_consecutive(flagged({true, false, true, false, false, true}))) ==
        std::vector<std::vector<std::size_t>>{{0, 2}, {5}});
  CHECK(indices(group_consecutive(flagged({true, true, true}))) == std::vector<std::vector<std::size_t>>{{0, 1, 2}});
  CHECK(group_consecutive(flagged({false, false})).empty());
}

TEST_CASE("grouping partitions explicit spans") {
  const std::vector<bool> flags = {false, true, true, false, true, false, false, true, false, true, true};
  const auto groups = group_consecutive(flagged(flags));
  std::multiset<std::size_t> members;
  for (const auto& g : groups) {
    for (const auto& s : g) members.insert(s.index);
  }
  std::multiset<std::size_t> expected;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) expected.insert(i);
  }
  CHECK(members == expected);
}

TEST_CASE("target rewriting") {
  auto spans = detected("Smith et al. (2019) did X. Jones (2020) extended it.", kKeys);
  auto groups = group_consecutive(spans);
  REQUIRE(groups.size() == 1);
  auto r = rewrite_target(groups[0], spans);
  CHECK(r.target == "<B1> did X. <B2> extended it.");
  CHECK(r.cited_ids == std::vector<std::string>{"smith2019", "jones2020"});

  spans = detected("Smith (2019) did X, as Smith (2019) said.", kKeys);
  r = rewrite_target(group_consecutive(spans)[0], spans);
  CHECK(r.target == "<B1> did X, as <B1> said.");

  // Bridging sentence is kept; a marker with no key-table entry is <REF>.
  spans = detected("Smith (2019) did X. Others (2001) disagree. Jones (2020) extended it.", kKeys);
  groups = group_consecutive(spans);
  REQUIRE(groups.size() == 1);
  r = rewrite_target(groups[0], spans);
  CHECK(r.target == "<B1> did X. <REF> disagree. <B2> extended it.");

  // A key outside the group becomes <REF>: build a three-citation group and
  // drop Lee's sentence from it.
  spans = detected("Smith (2019) and Lee (2018) did X. Jones (2020) extended it.", kKeys);
  std::vector<SentenceSpan> group = {spans[0], spans[1]};
  group[0].cite_keys = {"smith2019"};
  r = rewrite_target(group, spans);
  CHECK(r.target == "<B1> and <REF> did X. <B2> extended it.");
  CHECK(r.cited_ids == std::vector<std::string>{"smith2019", "jones2020"});

  spans = detected("As in (Jones, 2020; Smith et al., 2019), we go.", kKeys);
  r = rewrite_target(group_consecutive(spans)[0], spans);
  CHECK(r.target == "As in <B1> <B2>, we go.");
}

TEST_CASE("more than eight references are rejected") {
  KeyTable keys;
  std::string sentence = "We build on [1";
  for (int i = 1; i <= 9; ++i) {
    keys["[" + std::to_string(i) + "]"] = "doc" + std::to_string(i);
    if (i > 1) sentence += ", " + std::to_string(i);
  }
  sentence += "].";
  auto spans = detected(sentence, keys);
  CHECK_THROWS_AS(rewrite_target(group_consecutive(spans)[0], spans), Error);

  std::vector<Document> docs = {{"a", "T", "Abs."}};
  for (int i = 1; i <= 9; ++i) docs.push_back({"doc" + std::to_string(i), "T", "Abs."});
  auto built = build_dataset(docs, {{"a", sentence}}, keys,
                             [](const std::string&, std::size_t n) { return std::vector<IntentLabel>(n); });
  CHECK(built.instances.empty());
  CHECK(built.stats.max_refs_rejected == 1);
}

TEST_CASE("dataset building") {
  const std::vector<Document> docs = {{"a", "Citing", "Abstract A."},
                                      {"smith2019", "S", "Abstract S."},
                                      {"jones2020", "J", "Abstract J."}};
  const std::map<std::string, std::string> bodies = {
      {"a", "Intro text. Smith et al. (2019) did X. Jones (2020) extended it. The end."}};
  auto intents = [](const std::string&, std::size_t n) { return std::vector<IntentLabel>(n, IntentLabel::kMethod); };
  auto built = build_dataset(docs, bodies, kKeys, intents);
  REQUIRE(built.instances.size() == 1);
  const auto& c = built.instances[0];
  CHECK(c.id == "a#0");
  CHECK(c.cited_ids.size() == 2);
  CHECK(c.intents == std::vector<IntentLabel>{IntentLabel::kMethod, IntentLabel::kMethod});
  CHECK(validate_instance(c).empty());

  KeyTable dangling = {{"Smith 2019", "nowhere"}, {"Jones 2020", "missing"}};
  built = build_dataset(docs, bodies, dangling, intents);
  CHECK(built.instances.empty());
  CHECK(built.stats.unresolved_skipped > 0);
  CHECK_FALSE(built.stats.warnings.empty());
}

TEST_CASE("split sizes and determinism") {
  CHECK(split_counts(100).train == 80);
  CHECK(split_counts(100).valid == 10);
  CHECK(split_counts(100).test == 10);
  CHECK(split_counts(95).train == 76);
  CHECK(split_counts(95).valid == 9);
  CHECK(split_counts(95).test == 10);

  std::vector<CitationInstance> instances(100);
  for (std::size_t i = 0; i < instances.size(); ++i) instances[i].citing_id = "doc" + std::to_string(i / 3);
  assign_instance_ids(instances);
  auto a = instances;
  auto b = instances;
  split_dataset(a, 7);
  split_dataset(b, 7);
  CHECK(a == b);
  std::size_t train = 0, valid = 0, test = 0;
  for (const auto& c : a) {
    train += c.split == Split::kTrain;
    valid += c.split == Split::kValid;
    test += c.split == Split::kTest;
  }
  CHECK(train == 80);
  CHECK(valid == 10);
  CHECK(test == 10);

  // Stable under permutation of the input order.
  auto reversed = instances;
  std::reverse(reversed.begin(), reversed.end());
  split_dataset(reversed, 7);
  std::map<std::string, Split> by_id;
  for (const auto& c : a) by_id[c.id] = c.split;
  bool same = true;
  for (const auto& c : reversed) same = same && by_id[c.id] == c.split;
  CHECK(same);

  auto other = instances;
  split_dataset(other, 8);
  CHECK_FALSE(other == a);

  std::vector<CitationInstance> few(9);
  CHECK_THROWS_AS(split_dataset(few, 1), Error);
}

TEST_CASE("synthetic corpus round trip") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    SyntheticSpec spec;
    spec.seed = seed;
    const auto corpus = generate_synthetic_corpus(spec);
    CHECK(corpus.gold.size() == 60);
    // Intents come from the labeler in real runs; here the gold labels are
    // handed back in order so the comparison covers extraction alone.
    std::size_t k = 0;
    auto result = build_dataset(corpus.documents, corpus.bodies, corpus.keys,
                                [&](const std::string&, std::size_t) { return corpus.gold.at(k++).intents; });
    split_dataset(result.instances, seed);
    CHECK(result.instances == corpus.gold);
    for (const auto& c : result.instances) CHECK(validate_instance(c).empty());
  }
}

TEST_CASE("synthetic intent frequencies follow the requested weights") {
  SyntheticSpec spec;
  spec.n_single = 2000;
  spec.n_multi = 0;
  const auto corpus = generate_synthetic_corpus(spec);
  std::array<double, kNumIntents> freq{};
  for (const auto& g : corpus.gold) freq[static_cast<std::size_t>(g.intents[0])] += 1.0 / 2000.0;
  for (std::size_t i = 0; i < kNumIntents; ++i) CHECK(std::abs(freq[i] - spec.intent_weights[i]) < 0.04);
}
