#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "citegen/fid_model.hpp"
#include "citegen/tokenizer.hpp"
#include "citegen/types.hpp"

namespace citegen {

// Mean of token-embedding rows over the sentence's tokens (<UNK> included).
// Empty text gives the zero vector.
Eigen::VectorXd embed_sentence(const Matrix& token_embedding, const Vocabulary& vocab, std::string_view text);

// Zero when either side is the zero vector.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct RetrievedSentence {
  std::string doc_id;
  std::size_t sentence_index = 0;
  std::string sentence;
  double similarity = 0;
};

struct RetrievalResult {
  std::vector<RetrievedSentence> per_document;  // cited order
  std::string prediction;                       // "<B1> s1 <B2> s2 ..."
};

// For each cited document, the abstract sentence most similar to `query`
// (earliest wins ties; first sentence when the query embeds to zero).
RetrievalResult retrieve_for_query(const Matrix& token_embedding, const Vocabulary& vocab,
                                   const CitationInstance& instance, const DocumentIndex& documents,
                                   std::string_view query);

// Queries with the ground-truth target.
RetrievalResult retrieve_oracle(const Matrix& token_embedding, const Vocabulary& vocab,
                                const CitationInstance& instance, const DocumentIndex& documents);

// Queries with the citing abstract.
RetrievalResult retrieve_baseline(const Matrix& token_embedding, const Vocabulary& vocab,
                                  const CitationInstance& instance, const DocumentIndex& documents);

}  // namespace citegen
