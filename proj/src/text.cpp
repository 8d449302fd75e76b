#include "citegen/text.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "citegen/errors.hpp"
#include "citegen/types.hpp"

namespace citegen {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMaxRefsExceeded: return "MaxRefsExceeded";
    case ErrorCode::kSplitTooSmall: return "SplitTooSmall";
    case ErrorCode::kVocabTooSmall: return "VocabTooSmall";
    case ErrorCode::kClassMissing: return "ClassMissing";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kNumericalError: return "NumericalError";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kEmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::kAlignmentError: return "AlignmentError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "UnknownError";
}

std::string_view to_string(IntentLabel label) {
  switch (label) {
    case IntentLabel::kBackground: return "background";
    case IntentLabel::kMethod: return "method";
    case IntentLabel::kSupportive: return "supportive";
    case IntentLabel::kNotSupportive: return "not_supportive";
  }
  return "background";
}

std::optional<IntentLabel> parse_intent(std::string_view name) {
  for (IntentLabel label : kAllIntents) {
    if (to_string(label) == name) return label;
  }
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::string validate_instance(const CitationInstance& instance) {
  const std::size_t n = instance.cited_ids.size();
  if (n == 0 || n > kMaxCited) return "cited count out of range";
  if (instance.intents.size() != n) return "intent count differs from cited count";
  std::set<std::string> distinct(instance.cited_ids.begin(), instance.cited_ids.end());
  if (distinct.size() != n) return "cited ids are not distinct";
  std::set<std::size_t> seen;
  std::size_t pos = 0;
  while ((pos = instance.target.find("<B", pos)) != std::string::npos) {
    std::size_t close = instance.target.find('>', pos);
    if (close == std::string::npos) break;
    std::size_t k = placeholder_index(std::string_view(instance.target).substr(pos, close - pos + 1));
    if (k != 0) seen.insert(k);
    pos = close;
  }
  for (std::size_t k = 1; k <= n; ++k) {
    if (!seen.contains(k)) return "target lacks " + placeholder(k);
  }
  if (!seen.empty() && *seen.rbegin() > n) return "target has placeholder beyond N";
  return {};
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::vector<std::string_view> split_on(std::string_view text, char delim) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(delim, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::string placeholder(std::size_t n) { return "<B" + std::to_string(n) + ">"; }

std::size_t placeholder_index(std::string_view token) {
  if (token.size() < 4 || token.size() > 5) return 0;
  if (token.substr(0, 2) != "<B" || token.back() != '>') return 0;
  std::size_t value = 0;
  for (char c : token.substr(2, token.size() - 3)) {
    if (c < '0' || c > '9') return 0;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  if (token[2] == '0') return 0;
  return value;
}

std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream) {
  // splitmix64 finalizer over (seed, stream name)
  std::uint64_t z = seed ^ fnv1a64(stream);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::string_view stream) {
  return std::mt19937_64(substream_seed(seed, stream));
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform_unit(rng);
  double u2 = uniform_unit(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace citegen
