#include "tcgen/dit.hpp"

#include <cmath>

#include "tcgen/error.hpp"
#include "tcgen/timestamp.hpp"

namespace tcgen {

using ad::Tensor;

void DiTConfig::validate() const {
  if (layers == 0 || heads == 0 || hidden == 0 || cond_dim == 0 || latent_dim == 0 ||
      frames == 0 || ffn_mult == 0)
    throw Error(ErrorCode::kTypeError, "model dimensions must be positive");
  if (hidden % heads != 0)
    throw Error(ErrorCode::kTypeError, "hidden (" + std::to_string(hidden) +
                                           ") must be divisible by heads (" +
                                           std::to_string(heads) + ")");
  if (hidden % 2 != 0) throw Error(ErrorCode::kTypeError, "hidden must be even");
  if (!(cfg_dropout >= 0.0 && cfg_dropout < 1.0))
    throw Error(ErrorCode::kTypeError, "cfg_dropout must lie in [0, 1)");
}

DiTConfig DiTConfig::desk() { return DiTConfig{}; }

DiTConfig DiTConfig::toy() {
  DiTConfig c;
  c.layers = 2;
  c.heads = 2;
  c.hidden = 32;
  c.cond_dim = 32;
  c.latent_dim = 8;
  c.frames = 32;
  c.ffn_mult = 2;
  return c;
}

DiTConfig DiTConfig::large() {
  DiTConfig c;
  c.layers = 24;
  c.heads = 16;
  c.hidden = 1024;
  c.cond_dim = 1024;
  c.frames = 500;
  return c;
}

DiTConfig DiTConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "toy") return toy();
  if (name == "large") return large();
  throw Error(ErrorCode::kTypeError, "unknown model preset '" + name + "'");
}

nlohmann::json DiTConfig::to_json() const {
  return {{"layers", layers},       {"heads", heads},
          {"hidden", hidden},       {"cond_dim", cond_dim},
          {"latent_dim", latent_dim}, {"frames", frames},
          {"ffn_mult", ffn_mult},   {"cfg_dropout", cfg_dropout},
          {"use_timestamps", use_timestamps}};
}

DiTConfig DiTConfig::from_json(const nlohmann::json& j) {
  DiTConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.cond_dim = j.at("cond_dim").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.frames = j.at("frames").get<std::size_t>();
  c.ffn_mult = j.at("ffn_mult").get<std::size_t>();
  c.cfg_dropout = j.at("cfg_dropout").get<double>();
  c.use_timestamps = j.at("use_timestamps").get<bool>();
  c.validate();
  return c;
}

namespace nn {

Tensor Linear::operator()(const Tensor& x) const {
  return ad::add_row(ad::matmul(x, weight), bias);
}

Tensor adaln(const Tensor& x, const Tensor& tau_embed, const AdaLNParams& p) {
  if (tau_embed.size() != x.cols())
    throw Error(ErrorCode::kShapeMismatch, "adaln: tau embedding " +
                                               ad::shape_string(tau_embed.shape()) +
                                               " vs input " + ad::shape_string(x.shape()));
  const Tensor gamma = p.scale(tau_embed);
  const Tensor beta = p.shift(tau_embed);
  return ad::add_row(ad::mul_row(ad::layer_norm_rows(x), gamma), beta);
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionParams& p,
                 std::size_t heads) {
  const std::size_t hidden = q.cols();
  if (k.cols() != hidden || v.cols() != hidden || k.rows() != v.rows() || hidden % heads != 0)
    throw Error(ErrorCode::kShapeMismatch,
                "attention: q " + ad::shape_string(q.shape()) + ", k " +
                    ad::shape_string(k.shape()) + ", v " + ad::shape_string(v.shape()));
  const std::size_t dh = hidden / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor qp = p.query(q);
  const Tensor kp = p.key(k);
  const Tensor vp = p.value(v);
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = ad::slice_cols(qp, h * dh, dh);
    const Tensor kh = ad::slice_cols(kp, h * dh, dh);
    const Tensor vh = ad::slice_cols(vp, h * dh, dh);
    const Tensor weights = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt));
    outs.push_back(ad::matmul(weights, vh));
  }
  return p.out(heads == 1 ? outs.front() : ad::concat_cols(outs));
}

Tensor concat_time_aligned(const Tensor& a, const Tensor& t_mat, const FusionParams& p) {
  if (a.rows() != t_mat.rows())
    throw Error(ErrorCode::kFrameMismatch, "latent has " + std::to_string(a.rows()) +
                                               " frames, timestamp matrix has " +
                                               std::to_string(t_mat.rows()));
  return ad::add(a, p.proj(ad::concat_cols({a, t_mat})));
}

Tensor dit_block(const Tensor& a, const Tensor& t_mat, const Tensor& c, const Tensor& tau_embed,
                 const BlockParams& p, std::size_t heads) {
  const Tensor x = adaln(a, tau_embed, p.adaln1);
  Tensor h = ad::add(a, attention(x, x, x, p.self_attn, heads));
  h = concat_time_aligned(h, t_mat, p.fusion);
  h = ad::add(h, attention(h, c, c, p.cross_attn, heads));
  const Tensor y = adaln(h, tau_embed, p.adaln2);
  return ad::add(h, p.ffn_out(ad::gelu(p.ffn_in(y))));
}

std::vector<double> timestep_features(double t, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    out[i] = std::sin(1000.0 * t * freq);
    out[half + i] = std::cos(1000.0 * t * freq);
  }
  return out;
}

}  // namespace nn

Tensor& ParameterSet::add(std::string name, Tensor tensor) {
  items_.emplace_back(std::move(name), std::move(tensor));
  return items_.back().second;
}

Tensor* ParameterSet::find(const std::string& name) {
  for (auto& [n, t] : items_)
    if (n == name) return &t;
  return nullptr;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : items_) t.zero_grad();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : items_) n += t.size();
  return n;
}

nn::Linear DiTModel::make_linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                                 double weight_scale, double bias_value) {
  std::vector<double> w(in * out);
  const double std_dev = weight_scale / std::sqrt(static_cast<double>(in));
  for (double& x : w) x = weight_scale == 0.0 ? 0.0 : std_dev * rng.normal();
  nn::Linear l;
  l.weight = params_.add(name + ".weight", Tensor::from({in, out}, std::move(w), true));
  l.bias = params_.add(name + ".bias", Tensor::full({1, out}, bias_value, true));
  return l;
}

DiTModel::DiTModel(DiTConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const std::size_t h = config_.hidden, c = config_.cond_dim;
  in_proj_ = make_linear("in_proj", config_.latent_dim, h, rng, 1.0);
  time_mlp1_ = make_linear("time_mlp.0", h, h, rng, 1.0);
  time_mlp2_ = make_linear("time_mlp.2", h, h, rng, 1.0);
  cond_proj_ = make_linear("cond_proj", c, h, rng, 1.0);
  {
    std::vector<double> v(c);
    for (double& x : v) x = rng.normal() / std::sqrt(static_cast<double>(c));
    null_caption_ = params_.add("null_caption", Tensor::from({1, c}, std::move(v), true));
  }
  placeholder_ = params_.add("timestamp_placeholder", Tensor::from({1, c}, placeholder_row(c), true));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    nn::BlockParams b;
    b.adaln1.scale = make_linear(p + "adaln1.scale", h, h, rng, 0.0, 1.0);
    b.adaln1.shift = make_linear(p + "adaln1.shift", h, h, rng, 0.0);
    b.self_attn.query = make_linear(p + "self_attn.query", h, h, rng, 1.0);
    b.self_attn.key = make_linear(p + "self_attn.key", h, h, rng, 1.0);
    b.self_attn.value = make_linear(p + "self_attn.value", h, h, rng, 1.0);
    b.self_attn.out = make_linear(p + "self_attn.out", h, h, rng, 1.0);
    b.fusion.proj = make_linear(p + "fusion.proj", h + c, h, rng, 0.0);
    b.cross_attn.query = make_linear(p + "cross_attn.query", h, h, rng, 1.0);
    b.cross_attn.key = make_linear(p + "cross_attn.key", h, h, rng, 1.0);
    b.cross_attn.value = make_linear(p + "cross_attn.value", h, h, rng, 1.0);
    b.cross_attn.out = make_linear(p + "cross_attn.out", h, h, rng, 1.0);
    b.adaln2.scale = make_linear(p + "adaln2.scale", h, h, rng, 0.0, 1.0);
    b.adaln2.shift = make_linear(p + "adaln2.shift", h, h, rng, 0.0);
    b.ffn_in = make_linear(p + "ffn.in", h, config_.ffn_mult * h, rng, 1.0);
    b.ffn_out = make_linear(p + "ffn.out", config_.ffn_mult * h, h, rng, 1.0);
    blocks_.push_back(std::move(b));
  }
  final_adaln_.scale = make_linear("final_adaln.scale", h, h, rng, 0.0, 1.0);
  final_adaln_.shift = make_linear("final_adaln.shift", h, h, rng, 0.0);
  out_proj_ = make_linear("out_proj", h, config_.latent_dim, rng, 1.0);
}

Tensor DiTModel::placeholder_matrix(std::size_t frames) const {
  return ad::repeat_rows(placeholder_, frames);
}

Tensor DiTModel::forward(const Tensor& x_t, double t, const Tensor* t_mat, const Tensor* caption) const {
  if (x_t.cols() != config_.latent_dim)
    throw Error(ErrorCode::kShapeMismatch, "latent width " + std::to_string(x_t.cols()) +
                                               " != " + std::to_string(config_.latent_dim));
  const std::size_t frames = x_t.rows();
  Tensor tm;
  if (t_mat != nullptr && config_.use_timestamps) {
    if (t_mat->rows() != frames)
      throw Error(ErrorCode::kFrameMismatch, "timestamp matrix has " + std::to_string(t_mat->rows()) +
                                                 " frames, latent has " + std::to_string(frames));
    if (t_mat->cols() != config_.cond_dim)
      throw Error(ErrorCode::kShapeMismatch, "timestamp matrix width mismatch");
    tm = *t_mat;
  } else {
    tm = placeholder_matrix(frames);
  }
  const Tensor& cap = caption != nullptr ? *caption : null_caption_;
  if (cap.cols() != config_.cond_dim)
    throw Error(ErrorCode::kShapeMismatch, "caption feature width mismatch");

  const Tensor tfeat = Tensor::from({1, config_.hidden}, nn::timestep_features(t, config_.hidden));
  const Tensor tau = time_mlp2_(ad::silu(time_mlp1_(tfeat)));
  const Tensor c = cond_proj_(cap);
  Tensor h = in_proj_(x_t);
  for (const auto& b : blocks_) h = nn::dit_block(h, tm, c, tau, b, config_.heads);
  return out_proj_(nn::adaln(h, tau, final_adaln_));
}

}  // namespace tcgen
