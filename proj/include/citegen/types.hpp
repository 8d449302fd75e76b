#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citegen {

// A paper: the citing document or one of its cited documents.
struct Document {
  std::string id;
  std::string title;
  std::string abstract;
};

enum class IntentLabel { kBackground = 0, kMethod = 1, kSupportive = 2, kNotSupportive = 3 };

inline constexpr std::size_t kNumIntents = 4;
inline constexpr std::array<IntentLabel, kNumIntents> kAllIntents = {
    IntentLabel::kBackground, IntentLabel::kMethod, IntentLabel::kSupportive,
    IntentLabel::kNotSupportive};

std::string_view to_string(IntentLabel label);
std::optional<IntentLabel> parse_intent(std::string_view name);

enum class Split { kTrain, kValid, kTest };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

inline constexpr std::size_t kMaxCited = 8;

// One example: a citing document, its consecutively cited documents with one
// intent each, and the citation text with <B1>..<BN> placeholders.
struct CitationInstance {
  std::string id;  // "<citing_id>#<ordinal>", derived, never serialized
  std::string citing_id;
  std::vector<std::string> cited_ids;
  std::vector<IntentLabel> intents;
  std::string target;
  Split split = Split::kTrain;

  bool operator==(const CitationInstance&) const = default;
};

// Checks |cited| = |intents|, distinct ids, 1 <= N <= 8 and that the target
// holds exactly the placeholders <B1>..<BN>. Returns an empty string when valid.
std::string validate_instance(const CitationInstance& instance);

}  // namespace citegen
