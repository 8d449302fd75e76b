#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citegen/types.hpp"

namespace citegen {

// Reserved ids, fixed for every corpus.
namespace token_id {
inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kBos = 2;
inline constexpr int kEos = 3;
inline constexpr int kRef = 4;
inline constexpr int kFirstPlaceholder = 5;  // <B1>; <Bn> = 4 + n
inline constexpr int kFirstIntent = 13;      // <I:background>
inline constexpr int kNumReserved = 17;
}  // namespace token_id

int placeholder_id(std::size_t n);
int intent_id(IntentLabel label);
std::string intent_code(IntentLabel label);

// Lowercased words and single punctuation characters. Reserved tokens such
// as <B3> or <I:method> are matched verbatim and never split or lowercased.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  // Reserved prefix only.
  Vocabulary();

  static Vocabulary build(const std::vector<std::string>& texts, std::size_t min_freq,
                          std::size_t max_size);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return id_to_token_.size(); }
  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;

  // Fixed-length encoding: ids, then <EOS> when `add_eos`, then <PAD> up to
  // max_len. Over-long input keeps its prefix (and still ends with <EOS>).
  std::vector<int> encode(std::string_view text, std::size_t max_len, bool add_eos = true) const;
  std::vector<int> encode_tokens(const std::vector<std::string>& tokens) const;
  // Stops at <EOS>; drops <PAD> and <BOS>.
  std::string decode(const std::vector<int>& ids) const;

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  void add(std::string token);

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

}  // namespace citegen
