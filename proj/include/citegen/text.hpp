#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace citegen {

// Collapses every whitespace run to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::string_view trim(std::string_view text);

std::vector<std::string_view> split_on(std::string_view text, char delim);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

// Placeholder helpers: "<B3>" <-> 3.
std::string placeholder(std::size_t n);
// Returns n for a token of the form <Bn> (1 <= n <= 99), 0 otherwise.
std::size_t placeholder_index(std::string_view token);

// All randomness derives from one seed through named sub-streams, so a new
// consumer never perturbs an existing one.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream);
std::mt19937_64 make_rng(std::uint64_t seed, std::string_view stream);

// Uniform index in [0, n) from raw engine output; portable across standard
// libraries, unlike std::uniform_int_distribution.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);
double uniform_unit(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);

template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace citegen
