#include "citegen/retrieval.hpp"

#include "citegen/corpus.hpp"
#include "citegen/errors.hpp"
#include "citegen/text.hpp"

namespace citegen {

Eigen::VectorXd embed_sentence(const Matrix& token_embedding, const Vocabulary& vocab, std::string_view text) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(token_embedding.cols());
  const auto ids = vocab.encode_tokens(tokenize(text));
  if (ids.empty()) return sum;
  for (int id : ids) sum += token_embedding.row(id).transpose();
  return sum / static_cast<double>(ids.size());
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

RetrievalResult retrieve_for_query(const Matrix& token_embedding, const Vocabulary& vocab,
                                   const CitationInstance& instance, const DocumentIndex& documents,
                                   std::string_view query) {
  const Eigen::VectorXd query_vec = embed_sentence(token_embedding, vocab, query);
  const bool zero_query = query_vec.isZero(0.0);
  RetrievalResult result;
  for (std::size_t n = 1; n <= instance.cited_ids.size(); ++n) {
    const std::string& id = instance.cited_ids[n - 1];
    auto it = documents.find(id);
    if (it == documents.end()) throw Error(ErrorCode::kFormatError, "unknown document " + id);
    const auto sentences = split_sentences(it->second.abstract);
    RetrievedSentence best{id, 0, sentences.empty() ? std::string() : sentences.front().text, 0.0};
    if (!zero_query) {
      double best_score = -2.0;
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        const double score =
            cosine_similarity(query_vec, embed_sentence(token_embedding, vocab, sentences[s].text));
        if (score > best_score) {
          best_score = score;
          best = {id, s, sentences[s].text, score};
        }
      }
    }
    if (!result.prediction.empty()) result.prediction.push_back(' ');
    result.prediction += placeholder(n) + " " + best.sentence;
    result.per_document.push_back(std::move(best));
  }
  result.prediction = normalize_whitespace(result.prediction);
  return result;
}

RetrievalResult retrieve_oracle(const Matrix& token_embedding, const Vocabulary& vocab,
                                const CitationInstance& instance, const DocumentIndex& documents) {
  return retrieve_for_query(token_embedding, vocab, instance, documents, instance.target);
}

RetrievalResult retrieve_baseline(const Matrix& token_embedding, const Vocabulary& vocab,
                                  const CitationInstance& instance, const DocumentIndex& documents) {
  auto it = documents.find(instance.citing_id);
  if (it == documents.end()) throw Error(ErrorCode::kFormatError, "unknown document " + instance.citing_id);
  return retrieve_for_query(token_embedding, vocab, instance, documents, it->second.abstract);
}

}  // namespace citegen
