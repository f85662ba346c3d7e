#include "kebio/encoder/transformer.hpp"

#include <cmath>

#include "kebio/ndmath/ops.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("encoder config: " + msg); };
  if (vocab_size < 6) fail("vocab_size must cover the reserved tokens plus at least one piece");
  if (hidden_dim == 0 || heads == 0) fail("hidden_dim and heads must be positive");
  if (hidden_dim % heads != 0) fail("hidden_dim must be divisible by heads");
  if (l0 < 1) fail("l0 must be >= 1");
  if (max_seq_len < 2) fail("max_seq_len must be >= 2");
  if (entity_dim == 0) fail("entity_dim must be positive");
  if (k < 1) fail("k must be >= 1");
  if (!(layer_norm_eps > 0)) fail("layer_norm_eps must be positive");
  if (!(init_std > 0)) fail("init_std must be positive");
}

EncoderConfig EncoderConfig::large_preset(std::size_t vocab_size) {
  EncoderConfig c;
  c.vocab_size = vocab_size;
  c.hidden_dim = 768;
  c.heads = 12;
  c.l0 = 8;
  c.l1 = 4;
  c.max_seq_len = 512;
  c.entity_dim = 100;
  c.k = 100;
  c.ffn_dim = 3072;
  return c;
}

Tensor init_normal(Shape shape, double std, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (real& v : t.mutable_data()) v = static_cast<real>(rng.normal() * std);
  return t;
}

namespace {
Tensor zeros_param(std::size_t n) { return Tensor::zeros({n}, true); }
Tensor ones_param(std::size_t n) { return Tensor::full({n}, real{1}, true); }
}  // namespace

TransformerLayer TransformerLayer::init(const EncoderConfig& c, Rng& rng) {
  const std::size_t d = c.hidden_dim, f = c.ffn();
  TransformerLayer l;
  l.query_w = init_normal({d, d}, c.init_std, rng);
  l.query_b = zeros_param(d);
  l.key_w = init_normal({d, d}, c.init_std, rng);
  l.key_b = zeros_param(d);
  l.value_w = init_normal({d, d}, c.init_std, rng);
  l.value_b = zeros_param(d);
  l.out_w = init_normal({d, d}, c.init_std, rng);
  l.out_b = zeros_param(d);
  l.ln1_gain = ones_param(d);
  l.ln1_bias = zeros_param(d);
  l.ffn_in_w = init_normal({d, f}, c.init_std, rng);
  l.ffn_in_b = zeros_param(f);
  l.ffn_out_w = init_normal({f, d}, c.init_std, rng);
  l.ffn_out_b = zeros_param(d);
  l.ln2_gain = ones_param(d);
  l.ln2_bias = zeros_param(d);
  return l;
}

void TransformerLayer::collect(const std::string& prefix,
                               std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".attn.query.weight", query_w});
  out.push_back({prefix + ".attn.query.bias", query_b});
  out.push_back({prefix + ".attn.key.weight", key_w});
  out.push_back({prefix + ".attn.key.bias", key_b});
  out.push_back({prefix + ".attn.value.weight", value_w});
  out.push_back({prefix + ".attn.value.bias", value_b});
  out.push_back({prefix + ".attn.out.weight", out_w});
  out.push_back({prefix + ".attn.out.bias", out_b});
  out.push_back({prefix + ".ln1.gain", ln1_gain});
  out.push_back({prefix + ".ln1.bias", ln1_bias});
  out.push_back({prefix + ".ffn.in.weight", ffn_in_w});
  out.push_back({prefix + ".ffn.in.bias", ffn_in_b});
  out.push_back({prefix + ".ffn.out.weight", ffn_out_w});
  out.push_back({prefix + ".ffn.out.bias", ffn_out_b});
  out.push_back({prefix + ".ln2.gain", ln2_gain});
  out.push_back({prefix + ".ln2.bias", ln2_bias});
}

Tensor attention_bias(std::span<const std::uint8_t> attention_mask) {
  std::vector<real> bias(attention_mask.size());
  for (std::size_t i = 0; i < bias.size(); ++i) {
    bias[i] = attention_mask[i] ? real{0} : static_cast<real>(-1e9);
  }
  const std::size_t n = bias.size();
  return Tensor::from_data({1, n}, std::move(bias));
}

Tensor transformer_layer(const Tensor& x, const Tensor& bias,
                         const TransformerLayer& l, const EncoderConfig& c) {
  const std::size_t d = c.hidden_dim, dh = d / c.heads;
  const real eps = static_cast<real>(c.layer_norm_eps);
  const Tensor q = nd::add(nd::matmul(x, l.query_w), l.query_b);
  const Tensor k = nd::add(nd::matmul(x, l.key_w), l.key_b);
  const Tensor v = nd::add(nd::matmul(x, l.value_w), l.value_b);
  const real scale = static_cast<real>(1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<Tensor> heads;
  heads.reserve(c.heads);
  for (std::size_t h = 0; h < c.heads; ++h) {
    const Tensor qh = nd::slice(q, 1, h * dh, (h + 1) * dh);
    const Tensor kh = nd::slice(k, 1, h * dh, (h + 1) * dh);
    const Tensor vh = nd::slice(v, 1, h * dh, (h + 1) * dh);
    Tensor scores = nd::scale(nd::matmul(qh, nd::transpose(kh)), scale);
    scores = nd::add(scores, bias);
    heads.push_back(nd::matmul(nd::softmax(scores, 1), vh));
  }
  const Tensor attn =
      nd::add(nd::matmul(c.heads == 1 ? heads[0] : nd::concat(heads, 1), l.out_w), l.out_b);
  const Tensor x1 = nd::layer_norm(nd::add(x, attn), l.ln1_gain, l.ln1_bias, eps);
  const Tensor hidden =
      nd::gelu(nd::add(nd::matmul(x1, l.ffn_in_w), l.ffn_in_b), c.gelu_tanh);
  const Tensor ffn = nd::add(nd::matmul(hidden, l.ffn_out_w), l.ffn_out_b);
  return nd::layer_norm(nd::add(x1, ffn), l.ln2_gain, l.ln2_bias, eps);
}

Encoder::Encoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t d = config_.hidden_dim;
  token_embedding = init_normal({config_.vocab_size, d}, config_.init_std, rng);
  position_embedding = init_normal({config_.max_seq_len, d}, config_.init_std, rng);
  embed_ln_gain = ones_param(d);
  embed_ln_bias = zeros_param(d);
  for (std::size_t i = 0; i < config_.l0; ++i) group0.push_back(TransformerLayer::init(config_, rng));
  for (std::size_t i = 0; i < config_.l1; ++i) group1.push_back(TransformerLayer::init(config_, rng));
  head_mlm_w = init_normal({d, config_.vocab_size}, config_.init_std, rng);
  head_mlm_b = zeros_param(config_.vocab_size);
}

Tensor Encoder::embed(std::span<const int> ids) const {
  if (ids.empty()) throw UsageError("encoder: empty input");
  if (ids.size() > config_.max_seq_len) {
    throw UsageError("encoder: input of length " + std::to_string(ids.size()) +
                     " exceeds max_seq_len " + std::to_string(config_.max_seq_len) +
                     "; truncate before encoding");
  }
  std::vector<int> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  const Tensor x = nd::add(nd::gather_rows(token_embedding, ids),
                           nd::gather_rows(position_embedding, positions));
  return nd::layer_norm(x, embed_ln_gain, embed_ln_bias,
                        static_cast<real>(config_.layer_norm_eps));
}

Tensor Encoder::run_stack(Tensor x, const std::vector<TransformerLayer>& layers,
                          std::span<const std::uint8_t> attention_mask) const {
  if (layers.empty()) return x;
  if (attention_mask.size() != x.rows()) {
    throw DimensionError("encoder: attention mask length does not match input");
  }
  const Tensor bias = attention_bias(attention_mask);
  for (const auto& layer : layers) x = transformer_layer(x, bias, layer, config_);
  return x;
}

Tensor Encoder::encode_group0(std::span<const int> ids,
                              std::span<const std::uint8_t> attention_mask) const {
  return run_stack(embed(ids), group0, attention_mask);
}

Tensor Encoder::encode_group1(const Tensor& fused,
                              std::span<const std::uint8_t> attention_mask) const {
  return run_stack(fused, group1, attention_mask);
}

Tensor Encoder::mlm_logits(const Tensor& final_states) const {
  return nd::add(nd::matmul(final_states, head_mlm_w), head_mlm_b);
}

void Encoder::collect(std::vector<NamedTensor>& out) const {
  out.push_back({"embeddings.token", token_embedding});
  out.push_back({"embeddings.position", position_embedding});
  out.push_back({"embeddings.ln.gain", embed_ln_gain});
  out.push_back({"embeddings.ln.bias", embed_ln_bias});
  for (std::size_t i = 0; i < group0.size(); ++i) {
    group0[i].collect("group0.layer" + std::to_string(i), out);
  }
  for (std::size_t i = 0; i < group1.size(); ++i) {
    group1[i].collect("group1.layer" + std::to_string(i), out);
  }
  out.push_back({"head_mlm.weight", head_mlm_w});
  out.push_back({"head_mlm.bias", head_mlm_b});
}

std::size_t Encoder::stack_parameter_count() const {
  std::vector<NamedTensor> params;
  for (std::size_t i = 0; i < group0.size(); ++i) group0[i].collect("g0", params);
  for (std::size_t i = 0; i < group1.size(); ++i) group1[i].collect("g1", params);
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

void Encoder::resize_vocab(std::size_t vocab_size, Rng& rng) {
  const std::size_t old = config_.vocab_size, d = config_.hidden_dim;
  if (vocab_size <= old) return;
  std::vector<real> emb(token_embedding.data().begin(), token_embedding.data().end());
  for (std::size_t i = old * d; i < vocab_size * d; ++i) {
    emb.push_back(static_cast<real>(rng.normal() * config_.init_std));
  }
  token_embedding = Tensor::from_data({vocab_size, d}, std::move(emb), true);
  const auto w = head_mlm_w.data();
  std::vector<real> head(d * vocab_size);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < vocab_size; ++c) {
      head[r * vocab_size + c] = c < old ? w[r * old + c]
                                         : static_cast<real>(rng.normal() * config_.init_std);
    }
  }
  head_mlm_w = Tensor::from_data({d, vocab_size}, std::move(head), true);
  std::vector<real> bias(head_mlm_b.data().begin(), head_mlm_b.data().end());
  bias.resize(vocab_size, real{0});
  head_mlm_b = Tensor::from_data({vocab_size}, std::move(bias), true);
  config_.vocab_size = vocab_size;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
