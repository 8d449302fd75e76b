#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <string>

#include "citegen/corpus.hpp"
#include "citegen/errors.hpp"
#include "citegen/text.hpp"

namespace citegen {

namespace {

constexpr std::array<std::string_view, 16> kAdjectives = {
    "neural",     "sparse",       "latent",   "bayesian",  "contrastive",   "hierarchical",
    "multilingual", "adversarial", "incremental", "robust", "efficient", "structured",
    "probabilistic", "graph", "recurrent", "unsupervised"};

constexpr std::array<std::string_view, 12> kTasks = {
    "parsing",    "summarization", "translation", "retrieval",  "tagging",    "segmentation",
    "generation", "classification", "alignment",  "coreference", "entailment", "captioning"};

constexpr std::array<std::string_view, 8> kMethods = {
    "attention models",   "kernel methods",        "beam search",    "dual encoders",
    "tree automata",      "dynamic programming",   "variational inference", "graph networks"};

constexpr std::array<std::string_view, 6> kDatasets = {
    "news articles", "scientific abstracts", "dialogue logs", "product reviews",
    "legal documents", "social media posts"};

constexpr std::array<std::string_view, 40> kSurnames = {
    "Smith",  "Jones",   "Garcia",  "Chen",    "Kumar",   "Novak",   "Okafor",  "Silva",
    "Tanaka", "Muller",  "Rossi",   "Kowalski", "Nguyen", "Haddad",  "Larsen",  "Petrov",
    "Dubois", "Moreau",  "Schmidt", "Ivanova", "Yamada",  "Park",    "Lindqvist", "Costa",
    "Fischer", "Bauer",  "Horvat",  "Santos",  "Andersen", "Weber",  "Keller",  "Becker",
    "Russo",  "Ferrari", "Walsh",   "Murphy",  "Byrne",   "Kelly",   "Oliveira", "Reyes"};

constexpr std::array<std::string_view, 8> kFillers = {
    "This problem has received wide attention.",
    "Many open questions remain.",
    "We review the most relevant work below.",
    "Such systems are widely deployed.",
    "Evaluation remains a challenge.",
    "The field has grown quickly.",
    "Several directions deserve further study.",
    "Data quality matters in practice."};

constexpr std::array<std::string_view, 4> kTemplates = {
    "{C} introduced {T}.",
    "We follow {C} for {T}.",
    "Our results on {T} agree with {C}.",
    "Unlike {C}, we find {U} effective."};

std::string title_case(std::string_view text) {
  std::string out(text);
  bool start = true;
  for (char& c : out) {
    if (start) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    start = c == ' ';
  }
  return out;
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

struct Paper {
  Document doc;
  std::string topic;
  std::string surname;
  std::string year;
  std::size_t number = 0;
};

class Generator {
 public:
  explicit Generator(const SyntheticSpec& spec) : spec_(spec), rng_(make_rng(spec.seed, "synth")) {}

  SyntheticCorpus run();

 private:
  template <std::size_t N>
  std::string_view pick(const std::array<std::string_view, N>& items) {
    return items[uniform_index(rng_, N)];
  }

  std::string make_topic() {
    return std::string(pick(kAdjectives)) + " " + std::string(pick(kTasks));
  }

  Paper make_paper(const std::string& id, bool cited);
  IntentLabel sample_intent();
  // Returns (surface sentence, gold sentence with placeholder n).
  std::pair<std::string, std::string> citation_sentence(const Paper& cited, const Paper& citing,
                                                        IntentLabel intent, std::size_t n);

  const SyntheticSpec& spec_;
  std::mt19937_64 rng_;
  std::size_t next_cited_ = 0;
};

Paper Generator::make_paper(const std::string& id, bool cited) {
  Paper paper;
  paper.topic = make_topic();
  const std::string method(pick(kMethods));
  const std::string dataset(pick(kDatasets));
  paper.doc.id = id;
  paper.doc.title = title_case(paper.topic) + " with " + title_case(method);

  std::vector<std::string> sentences = {
      "We study " + paper.topic + ".",
      "Our approach relies on " + method + ".",
      "Experiments on " + dataset + " show consistent gains.",
  };
  if (uniform_unit(rng_) < 0.5) sentences.push_back("The results suggest new directions for the field.");
  portable_shuffle(sentences, rng_);
  std::string abstract;
  for (const auto& s : sentences) {
    if (!abstract.empty()) abstract.push_back(' ');
    abstract += s;
  }
  paper.doc.abstract = abstract;

  if (cited) {
    paper.number = ++next_cited_;
    const std::size_t slot = paper.number - 1;
    paper.surname = std::string(kSurnames[slot % kSurnames.size()]);
    const std::size_t round = slot / kSurnames.size();
    paper.year = std::to_string(2000 + round % 21);
    if (round >= 21) paper.year.push_back(static_cast<char>('a' + (round / 21 - 1) % 26));
  }
  return paper;
}

IntentLabel Generator::sample_intent() {
  double total = 0;
  for (double w : spec_.intent_weights) total += w;
  double draw = uniform_unit(rng_) * total;
  for (std::size_t k = 0; k < kNumIntents; ++k) {
    draw -= spec_.intent_weights[k];
    if (draw < 0) return kAllIntents[k];
  }
  return kAllIntents.back();
}

std::pair<std::string, std::string> Generator::citation_sentence(const Paper& cited,
                                                                 const Paper& citing,
                                                                 IntentLabel intent,
                                                                 std::size_t n) {
  std::string sentence(kTemplates[static_cast<std::size_t>(intent)]);
  replace_all(sentence, "{T}", cited.topic);
  replace_all(sentence, "{U}", citing.topic);

  // Sentence-initial markers must start with an uppercase letter to survive
  // sentence splitting, so only narrative styles go first.
  const bool initial = sentence.starts_with("{C}");
  const std::size_t style = uniform_index(rng_, initial ? 2 : 4);
  const bool et_al = uniform_unit(rng_) < 0.5;
  std::string marker;
  switch (style) {
    case 0: marker = cited.surname + " et al. (" + cited.year + ")"; break;
    case 1: marker = cited.surname + " (" + cited.year + ")"; break;
    case 2: marker = "(" + cited.surname + (et_al ? " et al., " : ", ") + cited.year + ")"; break;
    default: marker = "[" + std::to_string(cited.number) + "]"; break;
  }
  std::string gold = sentence;
  replace_all(sentence, "{C}", marker);
  replace_all(gold, "{C}", placeholder(n));
  return {sentence, gold};
}

SyntheticCorpus Generator::run() {
  if (spec_.max_multi < 2 || spec_.max_multi > kMaxCited) {
    throw Error(ErrorCode::kConfigError, "max_multi must lie in [2, 8]");
  }
  SyntheticCorpus corpus;
  const std::size_t n_groups = spec_.n_single + spec_.n_multi;

  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < spec_.n_single; ++i) sizes.push_back(1);
  for (std::size_t i = 0; i < spec_.n_multi; ++i) sizes.push_back(2 + uniform_index(rng_, spec_.max_multi - 1));
  portable_shuffle(sizes, rng_);

  constexpr std::size_t kGroupsPerCiting = 3;
  const std::size_t n_citing = (n_groups + kGroupsPerCiting - 1) / kGroupsPerCiting;

  std::size_t group = 0;
  for (std::size_t c = 0; c < n_citing; ++c) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof(id_buf), "citing%05zu", c);
    Paper citing = make_paper(id_buf, false);
    corpus.documents.push_back(citing.doc);

    std::vector<std::string> body;
    body.emplace_back(pick(kFillers));
    for (std::size_t g = 0; g < kGroupsPerCiting && group < n_groups; ++g, ++group) {
      if (g > 0) {
        // Two non-citing sentences always separate groups.
        body.emplace_back(pick(kFillers));
        body.emplace_back(pick(kFillers));
      }
      CitationInstance gold;
      gold.citing_id = citing.doc.id;
      std::string target;
      for (std::size_t n = 1; n <= sizes[group]; ++n) {
        char cited_buf[32];
        std::snprintf(cited_buf, sizeof(cited_buf), "cited%05zu", next_cited_ + 1);
        Paper cited = make_paper(cited_buf, true);
        corpus.documents.push_back(cited.doc);
        corpus.keys.emplace(cited.surname + " " + cited.year, cited.doc.id);
        corpus.keys.emplace("[" + std::to_string(cited.number) + "]", cited.doc.id);

        if (n > 1 && uniform_unit(rng_) < 0.3) {
          std::string bridge(pick(kFillers));
          body.push_back(bridge);
          target += " " + bridge;
        }
        const IntentLabel intent = sample_intent();
        auto [surface, placeholder_text] = citation_sentence(cited, citing, intent, n);
        body.push_back(surface);
        if (!target.empty()) target.push_back(' ');
        target += placeholder_text;
        gold.cited_ids.push_back(cited.doc.id);
        gold.intents.push_back(intent);
      }
      gold.target = normalize_whitespace(target);
      corpus.gold.push_back(std::move(gold));
    }
    body.emplace_back(pick(kFillers));

    std::string text;
    for (const auto& s : body) {
      if (!text.empty()) text.push_back(' ');
      text += s;
    }
    corpus.bodies.emplace(citing.doc.id, std::move(text));
  }
  assign_instance_ids(corpus.gold);
  if (corpus.gold.size() >= 10) split_dataset(corpus.gold, spec_.seed);
  return corpus;
}

}  // namespace

std::string_view intent_template(IntentLabel label) {
  return kTemplates[static_cast<std::size_t>(label)];
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  Generator generator(spec);
  return generator.run();
}

}  // namespace citegen
