#include "citegen/fid_model.hpp"

#include <cmath>
#include <limits>

#include "citegen/errors.hpp"
#include "citegen/text.hpp"
#include "citegen/tokenizer.hpp"
#include "fid_layers.hpp"

namespace citegen {

namespace {

using layers::AttentionCache;
using layers::DropoutMask;
using layers::FeedForwardCache;
using layers::LayerNormCache;

struct EncoderLayerTrace {
  LayerNormCache norm1;
  AttentionCache attn;
  DropoutMask drop1;
  LayerNormCache norm2;
  FeedForwardCache ffn;
  DropoutMask drop2;
};

struct BlockTrace {
  std::vector<EncoderLayerTrace> layers;
  LayerNormCache final_norm;
};

struct DecoderLayerTrace {
  LayerNormCache norm1;
  AttentionCache self_attn;
  DropoutMask drop1;
  LayerNormCache norm2;
  AttentionCache cross_attn;
  DropoutMask drop2;
  LayerNormCache norm3;
  FeedForwardCache ffn;
  DropoutMask drop3;
};

struct ForwardTrace {
  std::vector<BlockTrace> blocks;
  std::vector<int> decoder_input;
  std::vector<DecoderLayerTrace> decoder;
  LayerNormCache final_norm;
  Matrix hidden;  // T x d after the final norm
  Matrix probs;   // T x V, zero in the <PAD> column
  std::size_t counted = 0;
};

Matrix row_vector(std::size_t n, double value) {
  return Matrix::Constant(1, static_cast<Eigen::Index>(n), value);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * standard_normal(rng);
  return m;
}

LayerNormParams make_norm(std::size_t d, bool zero) {
  return {row_vector(d, zero ? 0.0 : 1.0), row_vector(d, 0.0)};
}

AttentionParams make_attention(std::size_t d, double out_scale, std::mt19937_64* rng) {
  auto weight = [&](double scale) {
    if (!rng) return Matrix(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    return random_matrix(d, d, scale / std::sqrt(static_cast<double>(d)), *rng);
  };
  AttentionParams p;
  p.wq = weight(1.0);
  p.bq = row_vector(d, 0.0);
  p.wk = weight(1.0);
  p.bk = row_vector(d, 0.0);
  p.wv = weight(1.0);
  p.bv = row_vector(d, 0.0);
  p.wo = weight(out_scale);
  p.bo = row_vector(d, 0.0);
  return p;
}

FeedForwardParams make_ffn(std::size_t d, std::size_t hidden, double out_scale, std::mt19937_64* rng) {
  auto weight = [&](std::size_t rows, std::size_t cols, double scale) {
    if (!rng) {
      return Matrix(Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
    }
    return random_matrix(rows, cols, scale / std::sqrt(static_cast<double>(rows)), *rng);
  };
  FeedForwardParams p;
  p.w1 = weight(d, hidden, 1.0);
  p.b1 = row_vector(hidden, 0.0);
  p.w2 = weight(hidden, d, out_scale);
  p.b2 = row_vector(d, 0.0);
  return p;
}

Parameters make_parameters(const ModelConfig& config, std::mt19937_64* rng) {
  config.validate();
  const std::size_t d = config.d_model;
  const bool zero = rng == nullptr;
  const double enc_out = 1.0 / std::sqrt(2.0 * static_cast<double>(config.n_enc_layers));
  const double dec_out = 1.0 / std::sqrt(3.0 * static_cast<double>(config.n_dec_layers));

  Parameters p;
  constexpr double kEmbeddingStd = 0.02;
  if (zero) {
    p.token_embedding = Matrix::Zero(static_cast<Eigen::Index>(config.vocab_size), static_cast<Eigen::Index>(d));
    p.position_embedding =
        Matrix::Zero(static_cast<Eigen::Index>(config.position_count()), static_cast<Eigen::Index>(d));
  } else {
    p.token_embedding = random_matrix(config.vocab_size, d, kEmbeddingStd, *rng);
    p.position_embedding = random_matrix(config.position_count(), d, kEmbeddingStd, *rng);
  }
  for (std::size_t l = 0; l < config.n_enc_layers; ++l) {
    EncoderLayerParams layer;
    layer.norm1 = make_norm(d, zero);
    layer.self_attn = make_attention(d, enc_out, rng);
    layer.norm2 = make_norm(d, zero);
    layer.ffn = make_ffn(d, config.ffn_dim, enc_out, rng);
    p.encoder.push_back(std::move(layer));
  }
  p.encoder_norm = make_norm(d, zero);
  for (std::size_t l = 0; l < config.n_dec_layers; ++l) {
    DecoderLayerParams layer;
    layer.norm1 = make_norm(d, zero);
    layer.self_attn = make_attention(d, dec_out, rng);
    layer.norm2 = make_norm(d, zero);
    layer.cross_attn = make_attention(d, dec_out, rng);
    layer.norm3 = make_norm(d, zero);
    layer.ffn = make_ffn(d, config.ffn_dim, dec_out, rng);
    p.decoder.push_back(std::move(layer));
  }
  p.decoder_norm = make_norm(d, zero);
  p.output_bias = row_vector(config.vocab_size, 0.0);
  return p;
}

Matrix embed(const Parameters& params, const std::vector<int>& ids) {
  const auto d = params.token_embedding.cols();
  Matrix x(static_cast<Eigen::Index>(ids.size()), d);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    x.row(row) = params.token_embedding.row(ids[t]) +
                 params.position_embedding.row(row % params.position_embedding.rows());
  }
  return x;
}

void embed_backward(const Matrix& dx, const std::vector<int>& ids, Parameters& grads) {
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    grads.token_embedding.row(ids[t]) += dx.row(row);
    grads.position_embedding.row(row % grads.position_embedding.rows()) += dx.row(row);
  }
}

void check_ids(const std::vector<int>& ids, std::size_t vocab_size) {
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw Error(ErrorCode::kShapeError, "token id " + std::to_string(id) + " outside vocabulary");
    }
  }
}

Matrix run_encoder(const Parameters& params, const ModelConfig& config, const std::vector<int>& ids,
                   std::span<const std::uint8_t> mask, BlockTrace* trace, AttentionCounter* counter,
                   std::mt19937_64* rng) {
  Matrix x = embed(params, ids);
  if (trace) trace->layers.resize(params.encoder.size());
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    const auto& layer = params.encoder[l];
    EncoderLayerTrace* lt = trace ? &trace->layers[l] : nullptr;
    Matrix h = layers::layer_norm(x, layer.norm1, lt ? &lt->norm1 : nullptr);
    Matrix a = layers::attention(h, h, mask, false, layer.self_attn, config.n_heads,
                                 lt ? &lt->attn : nullptr, counter ? &counter->scores : nullptr);
    x += layers::dropout(a, config.dropout, rng, lt ? &lt->drop1 : nullptr);
    h = layers::layer_norm(x, layer.norm2, lt ? &lt->norm2 : nullptr);
    Matrix f = layers::feed_forward(h, layer.ffn, lt ? &lt->ffn : nullptr);
    x += layers::dropout(f, config.dropout, rng, lt ? &lt->drop2 : nullptr);
  }
  return layers::layer_norm(x, params.encoder_norm, trace ? &trace->final_norm : nullptr);
}

Matrix run_encoder_backward(const Parameters& params, const ModelConfig& config, Matrix dx,
                            const BlockTrace& trace, Parameters& grads) {
  dx = layers::layer_norm_backward(dx, params.encoder_norm, trace.final_norm, grads.encoder_norm);
  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    const auto& layer = params.encoder[l];
    auto& g = grads.encoder[l];
    const auto& lt = trace.layers[l];
    Matrix dh = layers::feed_forward_backward(layers::dropout_backward(dx, lt.drop2), layer.ffn, lt.ffn, g.ffn);
    dx += layers::layer_norm_backward(dh, layer.norm2, lt.norm2, g.norm2);
    Matrix dq, dkv;
    layers::attention_backward(layers::dropout_backward(dx, lt.drop1), layer.self_attn, config.n_heads,
                               lt.attn, g.self_attn, dq, dkv);
    dq += dkv;
    dx += layers::layer_norm_backward(dq, layer.norm1, lt.norm1, g.norm1);
  }
  return dx;
}

void validate_input(const ModelConfig& config, const FidInput& input) {
  if (input.blocks.empty() || input.blocks.size() > config.max_blocks) {
    throw Error(ErrorCode::kShapeError, "block count " + std::to_string(input.blocks.size()) +
                                            " outside [1, " + std::to_string(config.max_blocks) + "]");
  }
  if (input.masks.size() != input.blocks.size()) {
    throw Error(ErrorCode::kShapeError, "one mask per block required");
  }
  for (std::size_t b = 0; b < input.blocks.size(); ++b) {
    if (input.blocks[b].size() != config.block_len || input.masks[b].size() != config.block_len) {
      throw Error(ErrorCode::kShapeError, "block " + std::to_string(b) + " length " +
                                              std::to_string(input.blocks[b].size()) + " != L=" +
                                              std::to_string(config.block_len));
    }
    check_ids(input.blocks[b], config.vocab_size);
  }
}

ForwardResult forward_impl(const Parameters& params, const ModelConfig& config, const FidInput& input,
                           const std::vector<int>& target, ForwardTrace* trace,
                           AttentionCounter* counter, std::mt19937_64* rng) {
  validate_input(config, input);
  if (target.size() != config.target_len) {
    throw Error(ErrorCode::kShapeError, "target length " + std::to_string(target.size()) +
                                            " != T=" + std::to_string(config.target_len));
  }
  check_ids(target, config.vocab_size);

  const auto block_len = static_cast<Eigen::Index>(config.block_len);
  const auto n_blocks = static_cast<Eigen::Index>(input.blocks.size());
  Matrix memory(n_blocks * block_len, static_cast<Eigen::Index>(config.d_model));
  std::vector<std::uint8_t> memory_mask;
  memory_mask.reserve(static_cast<std::size_t>(memory.rows()));
  if (trace) trace->blocks.resize(input.blocks.size());
  for (std::size_t b = 0; b < input.blocks.size(); ++b) {
    memory.middleRows(static_cast<Eigen::Index>(b) * block_len, block_len) =
        run_encoder(params, config, input.blocks[b], input.masks[b], trace ? &trace->blocks[b] : nullptr,
                    counter, rng);
    memory_mask.insert(memory_mask.end(), input.masks[b].begin(), input.masks[b].end());
  }

  std::vector<int> dec_input(config.target_len, token_id::kPad);
  dec_input[0] = token_id::kBos;
  for (std::size_t t = 1; t < config.target_len; ++t) dec_input[t] = target[t - 1];
  std::vector<std::uint8_t> dec_mask(dec_input.size());
  for (std::size_t t = 0; t < dec_input.size(); ++t) dec_mask[t] = dec_input[t] != token_id::kPad;

  Matrix y = embed(params, dec_input);
  if (trace) trace->decoder.resize(params.decoder.size());
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const auto& layer = params.decoder[l];
    DecoderLayerTrace* lt = trace ? &trace->decoder[l] : nullptr;
    Matrix h = layers::layer_norm(y, layer.norm1, lt ? &lt->norm1 : nullptr);
    Matrix s = layers::attention(h, h, dec_mask, true, layer.self_attn, config.n_heads,
                                 lt ? &lt->self_attn : nullptr, nullptr);
    y += layers::dropout(s, config.dropout, rng, lt ? &lt->drop1 : nullptr);
    h = layers::layer_norm(y, layer.norm2, lt ? &lt->norm2 : nullptr);
    Matrix c = layers::attention(h, memory, memory_mask, false, layer.cross_attn, config.n_heads,
                                 lt ? &lt->cross_attn : nullptr, nullptr);
    y += layers::dropout(c, config.dropout, rng, lt ? &lt->drop2 : nullptr);
    h = layers::layer_norm(y, layer.norm3, lt ? &lt->norm3 : nullptr);
    Matrix f = layers::feed_forward(h, layer.ffn, lt ? &lt->ffn : nullptr);
    y += layers::dropout(f, config.dropout, rng, lt ? &lt->drop3 : nullptr);
  }
  Matrix hidden = layers::layer_norm(y, params.decoder_norm, trace ? &trace->final_norm : nullptr);

  ForwardResult result;
  result.logits = hidden * params.token_embedding.transpose();
  result.logits.rowwise() += params.output_bias.row(0);

  Matrix probs;
  if (trace) probs = Matrix::Zero(result.logits.rows(), result.logits.cols());
  double total = 0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < config.target_len; ++t) {
    if (target[t] == token_id::kPad) continue;
    const auto row = result.logits.row(static_cast<Eigen::Index>(t));
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index v = 1; v < row.size(); ++v) top = std::max(top, row(v));
    double sum = 0;
    for (Eigen::Index v = 1; v < row.size(); ++v) sum += std::exp(row(v) - top);
    const double log_norm = top + std::log(sum);
    total += log_norm - row(target[t]);
    ++counted;
    if (trace) {
      for (Eigen::Index v = 1; v < row.size(); ++v) {
        probs(static_cast<Eigen::Index>(t), v) = std::exp(row(v) - log_norm);
      }
    }
  }
  if (counted == 0) throw Error(ErrorCode::kShapeError, "target has no non-pad position");
  result.loss = total / static_cast<double>(counted);
  if (!std::isfinite(result.loss)) {
    throw Error(ErrorCode::kNumericalError, "non-finite loss");
  }
  if (trace) {
    trace->decoder_input = std::move(dec_input);
    trace->hidden = std::move(hidden);
    trace->probs = std::move(probs);
    trace->counted = counted;
  }
  return result;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfigError, what); };
  if (vocab_size < static_cast<std::size_t>(token_id::kNumReserved)) fail("vocab_size below reserved prefix");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) fail("d_model must be a multiple of n_heads");
  if (n_enc_layers == 0 || n_dec_layers == 0) fail("layer counts must be positive");
  if (ffn_dim == 0) fail("ffn_dim must be positive");
  if (block_len < 2 || target_len < 2) fail("block_len and target_len must be >= 2");
  if (max_blocks == 0 || max_blocks > kMaxCited) fail("max_blocks must lie in [1, 8]");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
}

std::size_t Parameters::parameter_count() const {
  std::size_t total = 0;
  visit([&](const std::string&, const Matrix& m) { total += static_cast<std::size_t>(m.size()); });
  return total;
}

Parameters zero_parameters(const ModelConfig& config) { return make_parameters(config, nullptr); }

Parameters init_parameters(const ModelConfig& config, std::uint64_t seed) {
  auto rng = make_rng(seed, "init");
  return make_parameters(config, &rng);
}

bool all_finite(const Parameters& params) {
  bool finite = true;
  params.visit([&](const std::string&, const Matrix& m) { finite = finite && m.allFinite(); });
  return finite;
}

FidInput FidInput::from_blocks(std::vector<std::vector<int>> blocks) {
  FidInput input;
  for (const auto& block : blocks) {
    std::vector<std::uint8_t> mask(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) mask[i] = block[i] != token_id::kPad;
    input.masks.push_back(std::move(mask));
  }
  input.blocks = std::move(blocks);
  return input;
}

std::vector<int> build_block(const Vocabulary& vocab, const BlockSource& source, std::size_t block_len) {
  const auto citing = vocab.encode_tokens(tokenize(source.citing_abstract));
  const auto title = vocab.encode_tokens(tokenize(source.cited_title));
  const auto cited = vocab.encode_tokens(tokenize(source.cited_abstract));

  std::size_t budget = block_len;
  auto take = [&](std::size_t wanted) {
    const std::size_t n = std::min(wanted, budget);
    budget -= n;
    return n;
  };
  const std::size_t intent_keep = source.intent ? take(1) : 0;
  const std::size_t code_keep = take(1);
  const std::size_t title_keep = take(title.size());
  const std::size_t citing_keep = take(citing.size());
  const std::size_t cited_keep = take(cited.size());

  std::vector<int> block;
  block.reserve(block_len);
  if (intent_keep) block.push_back(intent_id(*source.intent));
  block.insert(block.end(), citing.begin(), citing.begin() + static_cast<std::ptrdiff_t>(citing_keep));
  if (code_keep) block.push_back(placeholder_id(source.n));
  block.insert(block.end(), title.begin(), title.begin() + static_cast<std::ptrdiff_t>(title_keep));
  block.insert(block.end(), cited.begin(), cited.begin() + static_cast<std::ptrdiff_t>(cited_keep));
  block.resize(block_len, token_id::kPad);
  return block;
}

FidInput build_fid_input(const Vocabulary& vocab, const CitationInstance& instance,
                         const DocumentIndex& documents, std::size_t block_len, bool use_intent) {
  auto lookup = [&](const std::string& id) -> const Document& {
    auto it = documents.find(id);
    if (it == documents.end()) throw Error(ErrorCode::kFormatError, "unknown document " + id);
    return it->second;
  };
  const Document& citing = lookup(instance.citing_id);
  std::vector<std::vector<int>> blocks;
  for (std::size_t n = 1; n <= instance.cited_ids.size(); ++n) {
    const Document& cited = lookup(instance.cited_ids[n - 1]);
    BlockSource source;
    if (use_intent) source.intent = instance.intents.at(n - 1);
    source.citing_abstract = citing.abstract;
    source.n = n;
    source.cited_title = cited.title;
    source.cited_abstract = cited.abstract;
    blocks.push_back(build_block(vocab, source, block_len));
  }
  return FidInput::from_blocks(std::move(blocks));
}

Vocabulary training_vocabulary(const std::vector<CitationInstance>& instances, const DocumentIndex& documents,
                               std::size_t min_freq, std::size_t max_size) {
  std::vector<std::string> texts;
  auto add_document = [&](const std::string& id) {
    auto it = documents.find(id);
    if (it == documents.end()) throw Error(ErrorCode::kFormatError, "unknown document " + id);
    texts.push_back(it->second.title);
    texts.push_back(it->second.abstract);
  };
  for (const auto& c : instances) {
    texts.push_back(c.target);
    add_document(c.citing_id);
    for (const auto& id : c.cited_ids) add_document(id);
  }
  return Vocabulary::build(texts, min_freq, max_size);
}

TrainingExample make_example(const Vocabulary& vocab, const CitationInstance& instance,
                             const DocumentIndex& documents, const ModelConfig& config,
                             bool use_intent) {
  return {build_fid_input(vocab, instance, documents, config.block_len, use_intent),
          vocab.encode(instance.target, config.target_len, true)};
}

Matrix encode_block(const Parameters& params, const ModelConfig& config, const std::vector<int>& ids,
                    const std::vector<std::uint8_t>& mask, AttentionCounter* counter) {
  if (ids.size() != config.block_len || mask.size() != config.block_len) {
    throw Error(ErrorCode::kShapeError, "block length " + std::to_string(ids.size()) +
                                            " != L=" + std::to_string(config.block_len));
  }
  check_ids(ids, config.vocab_size);
  return run_encoder(params, config, ids, mask, nullptr, counter, nullptr);
}

Matrix encode_blocks(const Parameters& params, const ModelConfig& config, const FidInput& input,
                     AttentionCounter* counter) {
  validate_input(config, input);
  const auto block_len = static_cast<Eigen::Index>(config.block_len);
  Matrix states(static_cast<Eigen::Index>(input.blocks.size()) * block_len,
                static_cast<Eigen::Index>(config.d_model));
  for (std::size_t b = 0; b < input.blocks.size(); ++b) {
    states.middleRows(static_cast<Eigen::Index>(b) * block_len, block_len) =
        run_encoder(params, config, input.blocks[b], input.masks[b], nullptr, counter, nullptr);
  }
  return states;
}

Matrix encode_monolithic(const Parameters& params, const ModelConfig& config, const FidInput& input,
                         AttentionCounter* counter) {
  validate_input(config, input);
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;
  for (std::size_t b = 0; b < input.blocks.size(); ++b) {
    ids.insert(ids.end(), input.blocks[b].begin(), input.blocks[b].end());
    mask.insert(mask.end(), input.masks[b].begin(), input.masks[b].end());
  }
  // Positions past the table wrap around; this path exists to count cost.
  return run_encoder(params, config, ids, mask, nullptr, counter, nullptr);
}

AttentionCost attention_cost(const ModelConfig& config, std::size_t n_blocks) {
  const std::uint64_t per_layer_heads = config.n_enc_layers * config.n_heads;
  const std::uint64_t block = config.block_len;
  const std::uint64_t joint = n_blocks * block;
  return {per_layer_heads * n_blocks * block * block, per_layer_heads * joint * joint};
}

ForwardResult forward_loss(const Parameters& params, const ModelConfig& config, const FidInput& input,
                           const std::vector<int>& target, AttentionCounter* counter) {
  return forward_impl(params, config, input, target, nullptr, counter, nullptr);
}

Gradients backward(const Parameters& params, const ModelConfig& config, const FidInput& input,
                   const std::vector<int>& target, std::mt19937_64* dropout_rng) {
  ForwardTrace trace;
  std::mt19937_64* rng = config.dropout > 0.0 ? dropout_rng : nullptr;
  const ForwardResult forward = forward_impl(params, config, input, target, &trace, nullptr, rng);

  Gradients out{forward.loss, zero_parameters(config)};
  Parameters& grads = out.grads;

  Matrix dlogits = trace.probs;
  const double inv_count = 1.0 / static_cast<double>(trace.counted);
  for (std::size_t t = 0; t < config.target_len; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    if (target[t] == token_id::kPad) {
      dlogits.row(row).setZero();
      continue;
    }
    dlogits(row, target[t]) -= 1.0;
    dlogits.row(row) *= inv_count;
  }
  grads.output_bias += dlogits.colwise().sum();
  grads.token_embedding.noalias() += dlogits.transpose() * trace.hidden;
  Matrix dy = dlogits * params.token_embedding;
  dy = layers::layer_norm_backward(dy, params.decoder_norm, trace.final_norm, grads.decoder_norm);

  const auto block_len = static_cast<Eigen::Index>(config.block_len);
  Matrix dmemory = Matrix::Zero(static_cast<Eigen::Index>(input.blocks.size()) * block_len,
                                static_cast<Eigen::Index>(config.d_model));
  for (std::size_t l = params.decoder.size(); l-- > 0;) {
    const auto& layer = params.decoder[l];
    auto& g = grads.decoder[l];
    const auto& lt = trace.decoder[l];
    Matrix dh = layers::feed_forward_backward(layers::dropout_backward(dy, lt.drop3), layer.ffn, lt.ffn, g.ffn);
    dy += layers::layer_norm_backward(dh, layer.norm3, lt.norm3, g.norm3);

    Matrix dq, dkv;
    layers::attention_backward(layers::dropout_backward(dy, lt.drop2), layer.cross_attn, config.n_heads,
                               lt.cross_attn, g.cross_attn, dq, dkv);
    dmemory += dkv;
    dy += layers::layer_norm_backward(dq, layer.norm2, lt.norm2, g.norm2);

    layers::attention_backward(layers::dropout_backward(dy, lt.drop1), layer.self_attn, config.n_heads,
                               lt.self_attn, g.self_attn, dq, dkv);
    dq += dkv;
    dy += layers::layer_norm_backward(dq, layer.norm1, lt.norm1, g.norm1);
  }
  embed_backward(dy, trace.decoder_input, grads);

  for (std::size_t b = 0; b < input.blocks.size(); ++b) {
    Matrix dblock = dmemory.middleRows(static_cast<Eigen::Index>(b) * block_len, block_len);
    Matrix dx = run_encoder_backward(params, config, std::move(dblock), trace.blocks[b], grads);
    embed_backward(dx, input.blocks[b], grads);
  }
  return out;
}

}  // namespace citegen
