#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "citegen/fid_model.hpp"
#include "citegen/text.hpp"
#include "citegen/tokenizer.hpp"

namespace citegen::testing {

inline ModelConfig tiny_config() {
  ModelConfig c;
  c.vocab_size = 20;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.ffn_dim = 32;
  c.block_len = 6;
  c.target_len = 4;
  c.max_blocks = 2;
  return c;
}

// Block of `used` random non-pad ids followed by padding.
inline std::vector<int> random_block(std::mt19937_64& rng, const ModelConfig& c, std::size_t used) {
  std::vector<int> block(c.block_len, token_id::kPad);
  for (std::size_t i = 0; i < used && i < c.block_len; ++i) {
    block[i] = 1 + static_cast<int>(uniform_index(rng, c.vocab_size - 1));
  }
  return block;
}

// Random target of `used` ids ending in <EOS>, then padding.
inline std::vector<int> random_target(std::mt19937_64& rng, const ModelConfig& c, std::size_t used) {
  std::vector<int> target(c.target_len, token_id::kPad);
  for (std::size_t i = 0; i + 1 < used && i < c.target_len; ++i) {
    target[i] = token_id::kRef + static_cast<int>(uniform_index(rng, c.vocab_size - token_id::kRef));
  }
  target[std::min(used, c.target_len) - 1] = token_id::kEos;
  return target;
}

// Adds N(0, scale) noise to every parameter so no gain or bias sits at its
// symmetric initial value.
inline void perturb(Parameters& params, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  params.visit([&](const std::string&, Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += scale * standard_normal(rng);
  });
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("citegen_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace citegen::testing
