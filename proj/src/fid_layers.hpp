#pragma once

// Layer primitives for the FiD transformer: forward passes that optionally
// record what the matching backward pass needs.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "citegen/fid_model.hpp"

namespace citegen::layers {

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd rstd;
};

Matrix layer_norm(const Matrix& x, const LayerNormParams& p, LayerNormCache* cache);
// Returns dx; accumulates into grad.
Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p, const LayerNormCache& cache,
                           LayerNormParams& grad);

struct AttentionCache {
  Matrix q_in, kv_in;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head, Tq x Tk
  Matrix context;             // Tq x d, heads concatenated
};

// Multi-head attention of q_in over kv_in. key_mask[j] == 0 hides key j;
// `causal` additionally hides keys after the query position. A query with
// no visible key gets a zero context.
Matrix attention(const Matrix& q_in, const Matrix& kv_in, std::span<const std::uint8_t> key_mask,
                 bool causal, const AttentionParams& p, std::size_t n_heads, AttentionCache* cache,
                 std::uint64_t* score_counter);

// Accumulates into grad; writes input gradients (overwriting dq_in / dkv_in).
void attention_backward(const Matrix& dout, const AttentionParams& p, std::size_t n_heads,
                        const AttentionCache& cache, AttentionParams& grad, Matrix& dq_in,
                        Matrix& dkv_in);

struct FeedForwardCache {
  Matrix x, pre, act;
};

Matrix feed_forward(const Matrix& x, const FeedForwardParams& p, FeedForwardCache* cache);
Matrix feed_forward_backward(const Matrix& dout, const FeedForwardParams& p,
                             const FeedForwardCache& cache, FeedForwardParams& grad);

// Inverted dropout. An empty mask means identity.
struct DropoutMask {
  Matrix scale;
};

Matrix dropout(const Matrix& x, double rate, std::mt19937_64* rng, DropoutMask* mask);
Matrix dropout_backward(const Matrix& dy, const DropoutMask& mask);

double gelu(double x);
double gelu_derivative(double x);

}  // namespace citegen::layers
