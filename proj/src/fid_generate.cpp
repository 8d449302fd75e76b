#include <algorithm>
#include <cmath>
#include <limits>

#include "citegen/errors.hpp"
#include "citegen/fid_model.hpp"
#include "citegen/tokenizer.hpp"
#include "fid_layers.hpp"

namespace citegen {

namespace {

// Encoder output plus per-layer cross-attention keys/values, computed once.
struct Memory {
  std::vector<Matrix> cross_k, cross_v;
  std::vector<std::uint8_t> mask;
};

// Self-attention keys/values for the prefix decoded so far.
struct PrefixCache {
  std::vector<Matrix> k, v;
};

Memory prepare_memory(const Parameters& params, const ModelConfig& config, const FidInput& input) {
  const Matrix states = encode_blocks(params, config, input);
  Memory memory;
  for (const auto& mask : input.masks) memory.mask.insert(memory.mask.end(), mask.begin(), mask.end());
  for (const auto& layer : params.decoder) {
    Matrix k = states * layer.cross_attn.wk;
    k.rowwise() += layer.cross_attn.bk.row(0);
    Matrix v = states * layer.cross_attn.wv;
    v.rowwise() += layer.cross_attn.bv.row(0);
    memory.cross_k.push_back(std::move(k));
    memory.cross_v.push_back(std::move(v));
  }
  return memory;
}

// Single-query attention against precomputed keys/values.
Matrix attend(const Matrix& q_in, const Matrix& k, const Matrix& v, std::span<const std::uint8_t> mask,
              const AttentionParams& p, std::size_t n_heads) {
  Matrix q = q_in * p.wq;
  q.rowwise() += p.bq.row(0);
  const auto d = q.cols();
  const auto dh = d / static_cast<Eigen::Index>(n_heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix context = Matrix::Zero(1, d);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const auto col = static_cast<Eigen::Index>(h) * dh;
    Matrix scores = (q.middleCols(col, dh) * k.middleCols(col, dh).transpose()) * scale;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (mask.empty() || mask[static_cast<std::size_t>(j)]) top = std::max(top, scores(0, j));
    }
    if (top == -std::numeric_limits<double>::infinity()) continue;
    Matrix probs = Matrix::Zero(1, scores.cols());
    double total = 0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (!mask.empty() && !mask[static_cast<std::size_t>(j)]) continue;
      probs(0, j) = std::exp(scores(0, j) - top);
      total += probs(0, j);
    }
    probs /= total;
    context.middleCols(col, dh) = probs * v.middleCols(col, dh);
  }
  Matrix out = context * p.wo;
  out.rowwise() += p.bo.row(0);
  return out;
}

void append_row(Matrix& m, const Matrix& row) {
  m.conservativeResize(m.rows() + 1, row.cols());
  m.row(m.rows() - 1) = row.row(0);
}

// Feeds `token` at `position`; returns next-token logits (1 x V).
Matrix step(const Parameters& params, const ModelConfig& config, const Memory& memory,
            PrefixCache& cache, int token, std::size_t position) {
  Matrix x = params.token_embedding.row(token) +
             params.position_embedding.row(static_cast<Eigen::Index>(position) %
                                           params.position_embedding.rows());
  if (cache.k.empty()) {
    cache.k.assign(params.decoder.size(), Matrix(0, static_cast<Eigen::Index>(config.d_model)));
    cache.v.assign(params.decoder.size(), Matrix(0, static_cast<Eigen::Index>(config.d_model)));
  }
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const auto& layer = params.decoder[l];
    Matrix h = layers::layer_norm(x, layer.norm1, nullptr);
    Matrix k = h * layer.self_attn.wk;
    k.rowwise() += layer.self_attn.bk.row(0);
    Matrix v = h * layer.self_attn.wv;
    v.rowwise() += layer.self_attn.bv.row(0);
    append_row(cache.k[l], k);
    append_row(cache.v[l], v);
    x += attend(h, cache.k[l], cache.v[l], {}, layer.self_attn, config.n_heads);
    h = layers::layer_norm(x, layer.norm2, nullptr);
    x += attend(h, memory.cross_k[l], memory.cross_v[l], memory.mask, layer.cross_attn, config.n_heads);
    h = layers::layer_norm(x, layer.norm3, nullptr);
    x += layers::feed_forward(h, layer.ffn, nullptr);
  }
  Matrix hidden = layers::layer_norm(x, params.decoder_norm, nullptr);
  Matrix logits = hidden * params.token_embedding.transpose();
  logits.rowwise() += params.output_bias.row(0);
  return logits;
}

// Log-softmax over candidate tokens; <PAD> and <BOS> are never produced.
std::vector<double> log_probs(const Matrix& logits) {
  const auto n = logits.cols();
  std::vector<double> out(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index v = 0; v < n; ++v) {
    if (v == token_id::kPad || v == token_id::kBos) continue;
    top = std::max(top, logits(0, v));
  }
  double sum = 0;
  for (Eigen::Index v = 0; v < n; ++v) {
    if (v == token_id::kPad || v == token_id::kBos) continue;
    sum += std::exp(logits(0, v) - top);
  }
  const double log_norm = top + std::log(sum);
  for (Eigen::Index v = 0; v < n; ++v) {
    if (v == token_id::kPad || v == token_id::kBos) continue;
    out[static_cast<std::size_t>(v)] = logits(0, v) - log_norm;
  }
  return out;
}

struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0;
  PrefixCache cache;
  Matrix next_logits;
  bool finished = false;
};

double normalized(const Hypothesis& h, double penalty) {
  return h.log_prob / std::pow(static_cast<double>(std::max<std::size_t>(h.tokens.size(), 1)), penalty);
}

}  // namespace

std::vector<int> generate(const Parameters& params, const ModelConfig& config, const FidInput& input,
                          const GenerateOptions& options) {
  const Memory memory = prepare_memory(params, config, input);
  // Positions past the table would wrap; cap the output length instead.
  const std::size_t max_len = std::min(options.max_len, config.position_count());

  if (options.mode == GenerateOptions::Mode::kGreedy) {
    PrefixCache cache;
    std::vector<int> out;
    int token = token_id::kBos;
    while (out.size() < max_len) {
      const auto lp = log_probs(step(params, config, memory, cache, token, out.size()));
      token = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      out.push_back(token);
      if (token == token_id::kEos) break;
    }
    return out;
  }

  const std::size_t beam = std::max<std::size_t>(options.beam_size, 1);

  Hypothesis root;
  root.next_logits = step(params, config, memory, root.cache, token_id::kBos, 0);
  std::vector<Hypothesis> alive;
  alive.push_back(std::move(root));
  std::vector<Hypothesis> finished;

  for (std::size_t length = 1; length <= max_len && !alive.empty(); ++length) {
    struct Candidate {
      std::size_t parent;
      int token;
      double log_prob;
      double score;
    };
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < alive.size(); ++b) {
      const auto lp = log_probs(alive[b].next_logits);
      for (std::size_t v = 0; v < lp.size(); ++v) {
        if (!std::isfinite(lp[v])) continue;
        const double total = alive[b].log_prob + lp[v];
        candidates.push_back(
            {b, static_cast<int>(v), total, total / std::pow(static_cast<double>(length), options.length_penalty)});
      }
    }
    const std::size_t keep = std::min(beam, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.token != b.token) return a.token < b.token;
                        return a.parent < b.parent;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const Candidate& cand = candidates[c];
      Hypothesis h;
      h.tokens = alive[cand.parent].tokens;
      h.tokens.push_back(cand.token);
      h.log_prob = cand.log_prob;
      if (cand.token == token_id::kEos) {
        h.finished = true;
        finished.push_back(std::move(h));
        continue;
      }
      h.cache = alive[cand.parent].cache;
      if (length < max_len) {
        h.next_logits = step(params, config, memory, h.cache, cand.token, length);
      }
      next.push_back(std::move(h));
    }
    alive = std::move(next);
    if (finished.size() >= beam) break;
  }

  const Hypothesis* best = nullptr;
  auto consider = [&](const Hypothesis& h) {
    if (!best || normalized(h, options.length_penalty) > normalized(*best, options.length_penalty)) best = &h;
  };
  for (const auto& h : finished) consider(h);
  if (finished.empty()) {
    for (const auto& h : alive) consider(h);
  }
  return best ? best->tokens : std::vector<int>{};
}

Matrix incremental_logits(const Parameters& params, const ModelConfig& config, const FidInput& input,
                          const std::vector<int>& decoder_input) {
  const Memory memory = prepare_memory(params, config, input);
  PrefixCache cache;
  Matrix out(static_cast<Eigen::Index>(decoder_input.size()), static_cast<Eigen::Index>(config.vocab_size));
  for (std::size_t t = 0; t < decoder_input.size(); ++t) {
    out.row(static_cast<Eigen::Index>(t)) = step(params, config, memory, cache, decoder_input[t], t).row(0);
  }
  return out;
}

}  // namespace citegen
