#include "citegen/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "citegen/errors.hpp"
#include "citegen/text.hpp"

namespace citegen {

namespace {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> kReserved = [] {
    std::vector<std::string> tokens = {"<PAD>", "<UNK>", "<BOS>", "<EOS>", "<REF>"};
    for (std::size_t n = 1; n <= kMaxCited; ++n) tokens.push_back(placeholder(n));
    for (IntentLabel label : kAllIntents) tokens.push_back(intent_code(label));
    return tokens;
  }();
  return kReserved;
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

int placeholder_id(std::size_t n) { return token_id::kFirstPlaceholder + static_cast<int>(n) - 1; }

int intent_id(IntentLabel label) { return token_id::kFirstIntent + static_cast<int>(label); }

std::string intent_code(IntentLabel label) { return "<I:" + std::string(to_string(label)) + ">"; }

std::vector<std::string> tokenize(std::string_view text) {
  const auto& reserved = reserved_tokens();
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '<') {
      std::size_t close = text.find('>', i);
      if (close != std::string_view::npos) {
        std::string_view candidate = text.substr(i, close - i + 1);
        if (std::find(reserved.begin(), reserved.end(), candidate) != reserved.end()) {
          tokens.emplace_back(candidate);
          i = close + 1;
          continue;
        }
      }
    }
    if (is_word_byte(c)) {
      std::string word;
      while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
        ++i;
      }
      tokens.push_back(std::move(word));
      continue;
    }
    tokens.emplace_back(1, static_cast<char>(c));
    ++i;
  }
  return tokens;
}

Vocabulary::Vocabulary() {
  for (const auto& token : reserved_tokens()) add(token);
}

void Vocabulary::add(std::string token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t min_freq,
                             std::size_t max_size) {
  if (max_size < static_cast<std::size_t>(token_id::kNumReserved)) {
    throw Error(ErrorCode::kVocabTooSmall, "max_size " + std::to_string(max_size) + " < 17");
  }
  Vocabulary vocab;
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& token : tokenize(text)) {
      if (vocab.contains(token)) continue;
      ++counts[token];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [token, count] : ranked) {
    if (vocab.size() >= max_size) break;
    if (count < std::max<std::size_t>(min_freq, 1)) break;
    vocab.add(token);
  }
  return vocab;
}

int Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? token_id::kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) return id_to_token_[token_id::kUnk];
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode_tokens(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(id(token));
  return ids;
}

std::vector<int> Vocabulary::encode(std::string_view text, std::size_t max_len, bool add_eos) const {
  std::vector<int> ids = encode_tokens(tokenize(text));
  const std::size_t room = add_eos ? (max_len == 0 ? 0 : max_len - 1) : max_len;
  if (ids.size() > room) ids.resize(room);
  if (add_eos && max_len > 0) ids.push_back(token_id::kEos);
  ids.resize(max_len, token_id::kPad);
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == token_id::kEos) break;
    if (id == token_id::kPad || id == token_id::kBos) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) out << id_to_token_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot read " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::kFormatError, "vocabulary line lacks a tab");
    std::string token = line.substr(0, tab);
    std::size_t id = std::stoul(line.substr(tab + 1));
    if (id != expected) throw Error(ErrorCode::kFormatError, "vocabulary ids must be dense and ordered");
    if (id < vocab.size()) {
      if (vocab.id_to_token_[id] != token) {
        throw Error(ErrorCode::kFormatError, "reserved token mismatch at id " + std::to_string(id));
      }
    } else {
      vocab.add(std::move(token));
    }
    ++expected;
  }
  return vocab;
}

}  // namespace citegen
