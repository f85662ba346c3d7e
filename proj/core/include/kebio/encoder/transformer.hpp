#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kebio/ndmath/tensor.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

/// Shape of the encoder. l0 layers of text-only encoding feed the entity
/// memory; l1 layers encode the knowledge-fused states (l1 = 0 skips them).
struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t heads = 4;
  std::size_t l0 = 2;
  std::size_t l1 = 1;
  std::size_t max_seq_len = 128;
  std::size_t entity_dim = 100;
  std::size_t k = 100;        // retrieval fan-out
  std::size_t ffn_dim = 0;    // 0 means 4 * hidden_dim
  double layer_norm_eps = 1e-12;
  double init_std = 0.02;
  bool gelu_tanh = false;
  bool use_entity_memory = true;

  std::size_t ffn() const { return ffn_dim ? ffn_dim : 4 * hidden_dim; }
  /// Throws ConfigError on the first violated constraint.
  void validate() const;

  /// 8/4 split, 768 hidden, 12 heads, 512 positions, k = 100.
  static EncoderConfig large_preset(std::size_t vocab_size);

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct TransformerLayer {
  Tensor query_w, query_b, key_w, key_b, value_w, value_b, out_w, out_b;
  Tensor ln1_gain, ln1_bias;
  Tensor ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b;
  Tensor ln2_gain, ln2_bias;

  static TransformerLayer init(const EncoderConfig& config, Rng& rng);
  void collect(const std::string& prefix, std::vector<NamedTensor>& out) const;
};

/// [1 x n] additive attention bias: 0 on real positions, -1e9 on padding.
Tensor attention_bias(std::span<const std::uint8_t> attention_mask);

/// Post-norm block: LN(x + MHA(x)), then LN(. + FFN(.)).
Tensor transformer_layer(const Tensor& x, const Tensor& bias,
                         const TransformerLayer& layer, const EncoderConfig& config);

/// Token and position embeddings, both transformer groups and the MLM head.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Rng& rng);

  const EncoderConfig& config() const { return config_; }

  /// Embedding layer output [n x d].
  Tensor embed(std::span<const int> ids) const;
  /// Text-only states h_1..h_n.
  Tensor encode_group0(std::span<const int> ids,
                       std::span<const std::uint8_t> attention_mask) const;
  /// Final states from fused states; identity when l1 = 0.
  Tensor encode_group1(const Tensor& fused,
                       std::span<const std::uint8_t> attention_mask) const;
  /// [n x vocab] logits of the MLM head (softmax is left to the loss).
  Tensor mlm_logits(const Tensor& final_states) const;

  void collect(std::vector<NamedTensor>& out) const;
  /// Parameters of the two transformer groups only.
  std::size_t stack_parameter_count() const;
  /// Grows token embeddings and MLM head for newly added vocabulary entries.
  void resize_vocab(std::size_t vocab_size, Rng& rng);

  Tensor token_embedding;
  Tensor position_embedding;
  Tensor embed_ln_gain, embed_ln_bias;
  std::vector<TransformerLayer> group0;
  std::vector<TransformerLayer> group1;
  Tensor head_mlm_w, head_mlm_b;

 private:
  Tensor run_stack(Tensor x, const std::vector<TransformerLayer>& layers,
                   std::span<const std::uint8_t> attention_mask) const;

  EncoderConfig config_;
};

/// N(0, std) matrix leaf that requires grad.
Tensor init_normal(Shape shape, double std, Rng& rng);

}  // namespace kebio::inline KEBIO_PRECISION_NS
