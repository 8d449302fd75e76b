#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "citegen/types.hpp"

namespace citegen {

class Vocabulary;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_enc_layers = 2;
  std::size_t n_dec_layers = 2;
  std::size_t ffn_dim = 256;
  std::size_t block_len = 64;   // L
  std::size_t target_len = 32;  // T
  std::size_t max_blocks = kMaxCited;
  double dropout = 0.0;

  // Throws Error(kConfigError).
  void validate() const;
  std::size_t position_count() const { return std::max(block_len, target_len); }

  bool operator==(const ModelConfig&) const = default;
};

struct LayerNormParams {
  Matrix gain;  // 1 x d
  Matrix bias;  // 1 x d
};

struct AttentionParams {
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
};

struct FeedForwardParams {
  Matrix w1, b1, w2, b2;
};

struct EncoderLayerParams {
  LayerNormParams norm1;
  AttentionParams self_attn;
  LayerNormParams norm2;
  FeedForwardParams ffn;
};

struct DecoderLayerParams {
  LayerNormParams norm1;
  AttentionParams self_attn;
  LayerNormParams norm2;
  AttentionParams cross_attn;
  LayerNormParams norm3;
  FeedForwardParams ffn;
};

// Every learnable tensor. The token embedding doubles as the output
// projection. Gradients and optimizer moments reuse this type.
struct Parameters {
  Matrix token_embedding;     // V x d
  Matrix position_embedding;  // max(L, T) x d, restarts at 0 in every block
  std::vector<EncoderLayerParams> encoder;
  LayerNormParams encoder_norm;
  std::vector<DecoderLayerParams> decoder;
  LayerNormParams decoder_norm;
  Matrix output_bias;  // 1 x V

  // Calls fn(name, tensor) for every tensor in a fixed order.
  template <typename Fn>
  void visit(Fn&& fn) {
    visit_impl(*this, fn);
  }
  template <typename Fn>
  void visit(Fn&& fn) const {
    visit_impl(*this, fn);
  }

  std::size_t parameter_count() const;

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn& fn);
};

Parameters zero_parameters(const ModelConfig& config);
Parameters init_parameters(const ModelConfig& config, std::uint64_t seed);
bool all_finite(const Parameters& params);

// Blocks are fixed-length id sequences; a mask entry of 1 marks a real
// token. Masked positions are never attended to.
struct FidInput {
  std::vector<std::vector<int>> blocks;
  std::vector<std::vector<std::uint8_t>> masks;

  static FidInput from_blocks(std::vector<std::vector<int>> blocks);
};

// Input block for the n-th cited document. Over-long content is cut in
// priority order: intent code, then <Bn> and title, then citing abstract,
// then cited abstract tail.
struct BlockSource {
  std::optional<IntentLabel> intent;
  std::string citing_abstract;
  std::size_t n = 1;
  std::string cited_title;
  std::string cited_abstract;
};

std::vector<int> build_block(const Vocabulary& vocab, const BlockSource& source, std::size_t block_len);

using DocumentIndex = std::unordered_map<std::string, Document>;

FidInput build_fid_input(const Vocabulary& vocab, const CitationInstance& instance,
                         const DocumentIndex& documents, std::size_t block_len, bool use_intent);

// Vocabulary over the targets of `instances` plus the titles and abstracts
// of the documents they cite and cite from. Throws Error(kFormatError) for
// an unknown document id.
Vocabulary training_vocabulary(const std::vector<CitationInstance>& instances, const DocumentIndex& documents,
                               std::size_t min_freq, std::size_t max_size);

struct TrainingExample {
  FidInput input;
  std::vector<int> target;  // length T, <EOS> then <PAD>
};

TrainingExample make_example(const Vocabulary& vocab, const CitationInstance& instance,
                             const DocumentIndex& documents, const ModelConfig& config,
                             bool use_intent);

// Counts every attention score computed by the encoder (masked or not).
struct AttentionCounter {
  std::uint64_t scores = 0;
};

// Pre-norm transformer encoder over one block only; positions restart at 0.
// Throws Error(kShapeError) when the block length differs from L.
Matrix encode_block(const Parameters& params, const ModelConfig& config, const std::vector<int>& ids,
                    const std::vector<std::uint8_t>& mask, AttentionCounter* counter = nullptr);

// Reference encoder attending across all blocks as one sequence; only used
// to measure cost.
// Concatenated encoder states of every block, (N*L) x d_model; the memory
// the decoder cross-attends over.
Matrix encode_blocks(const Parameters& params, const ModelConfig& config, const FidInput& input,
                     AttentionCounter* counter = nullptr);

Matrix encode_monolithic(const Parameters& params, const ModelConfig& config, const FidInput& input,
                         AttentionCounter* counter = nullptr);

struct AttentionCost {
  std::uint64_t fid = 0;
  std::uint64_t monolithic = 0;
};

AttentionCost attention_cost(const ModelConfig& config, std::size_t n_blocks);

struct ForwardResult {
  double loss = 0;
  Matrix logits;  // T x V; <PAD> is never a prediction and its column is ignored
};

// Mean token cross-entropy over non-pad targets under teacher forcing.
// Throws Error(kNumericalError) when the loss is not finite.
ForwardResult forward_loss(const Parameters& params, const ModelConfig& config, const FidInput& input,
                           const std::vector<int>& target, AttentionCounter* counter = nullptr);

struct Gradients {
  double loss = 0;
  Parameters grads;
};

// `dropout_rng` is only consulted when config.dropout > 0.
Gradients backward(const Parameters& params, const ModelConfig& config, const FidInput& input,
                   const std::vector<int>& target, std::mt19937_64* dropout_rng = nullptr);

struct TrainOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  double grad_clip = 1.0;  // global norm; 0 disables
  // Called after every epoch with (epoch, train loss, validation loss or NaN).
  std::function<void(std::size_t, double, double)> on_epoch;
};

struct TrainReport {
  double initial_loss = 0;
  std::vector<double> train_loss;
  std::vector<double> valid_loss;
  std::size_t best_epoch = 0;
};

// Adam over mini-batches. With a validation set, `params` ends at the
// best-validation epoch. Throws Error(kDivergence) when an epoch's loss
// exceeds ten times the initial loss.
TrainReport train(Parameters& params, const ModelConfig& config,
                  const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& valid_set, const TrainOptions& options);

double mean_loss(const Parameters& params, const ModelConfig& config,
                 const std::vector<TrainingExample>& examples);

struct GenerateOptions {
  enum class Mode { kGreedy, kBeam };
  Mode mode = Mode::kGreedy;
  std::size_t beam_size = 4;
  std::size_t max_len = 32;
  double length_penalty = 0.7;  // beam score = log p / length^penalty
};

// Starts from <BOS>; output excludes <BOS>, ends with <EOS> when one was
// produced, and never contains <PAD>.
std::vector<int> generate(const Parameters& params, const ModelConfig& config, const FidInput& input,
                          const GenerateOptions& options);

// Next-token logits for every prefix position, computed incrementally.
Matrix incremental_logits(const Parameters& params, const ModelConfig& config, const FidInput& input,
                          const std::vector<int>& decoder_input);

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  std::map<std::string, std::string> header;  // e.g. vocab_path, use_intent
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// -- implementation ---------------------------------------------------------

template <typename Self, typename Fn>
void Parameters::visit_impl(Self& self, Fn& fn) {
  auto norm = [&](const std::string& prefix, auto& p) {
    fn(prefix + ".gain", p.gain);
    fn(prefix + ".bias", p.bias);
  };
  auto attn = [&](const std::string& prefix, auto& p) {
    fn(prefix + ".wq", p.wq);
    fn(prefix + ".bq", p.bq);
    fn(prefix + ".wk", p.wk);
    fn(prefix + ".bk", p.bk);
    fn(prefix + ".wv", p.wv);
    fn(prefix + ".bv", p.bv);
    fn(prefix + ".wo", p.wo);
    fn(prefix + ".bo", p.bo);
  };
  auto ffn = [&](const std::string& prefix, auto& p) {
    fn(prefix + ".w1", p.w1);
    fn(prefix + ".b1", p.b1);
    fn(prefix + ".w2", p.w2);
    fn(prefix + ".b2", p.b2);
  };
  fn(std::string("token_embedding"), self.token_embedding);
  fn(std::string("position_embedding"), self.position_embedding);
  for (std::size_t l = 0; l < self.encoder.size(); ++l) {
    const std::string p = "encoder." + std::to_string(l);
    norm(p + ".norm1", self.encoder[l].norm1);
    attn(p + ".self_attn", self.encoder[l].self_attn);
    norm(p + ".norm2", self.encoder[l].norm2);
    ffn(p + ".ffn", self.encoder[l].ffn);
  }
  norm("encoder_norm", self.encoder_norm);
  for (std::size_t l = 0; l < self.decoder.size(); ++l) {
    const std::string p = "decoder." + std::to_string(l);
    norm(p + ".norm1", self.decoder[l].norm1);
    attn(p + ".self_attn", self.decoder[l].self_attn);
    norm(p + ".norm2", self.decoder[l].norm2);
    attn(p + ".cross_attn", self.decoder[l].cross_attn);
    norm(p + ".norm3", self.decoder[l].norm3);
    ffn(p + ".ffn", self.decoder[l].ffn);
  }
  norm("decoder_norm", self.decoder_norm);
  fn(std::string("output_bias"), self.output_bias);
}

}  // namespace citegen
