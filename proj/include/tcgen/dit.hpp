#pragma once

// Diffusion-transformer denoiser. One block runs, in order:
//   a = a + SelfAttn(AdaLN1(a, tau))
//   a = Fuse(Concat(a, T))              per-frame, back to hidden width
//   a = a + CrossAttn(a, C, C)
//   a = a + FFN(AdaLN2(a, tau))

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tcgen/random.hpp"
#include "tcgen/tensor.hpp"

namespace tcgen {

struct DiTConfig {
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t hidden = 64;
  std::size_t cond_dim = 32;    // C: caption token and timestamp-matrix width
  std::size_t latent_dim = 8;   // D: channels of the latent being denoised
  std::size_t frames = 128;     // T
  std::size_t ffn_mult = 4;
  double cfg_dropout = 0.1;
  /// When false the timestamp matrix is never consumed; every item gets the
  /// placeholder sequence (the "without T" model).
  bool use_timestamps = true;

  void validate() const;
  static DiTConfig desk();   // default desk-scale preset
  static DiTConfig toy();    // small preset used by the toy experiments
  static DiTConfig large();   // 24 layers, 16 heads, hidden 1024
  static DiTConfig preset(const std::string& name);

  nlohmann::json to_json() const;
  static DiTConfig from_json(const nlohmann::json& j);
  bool operator==(const DiTConfig&) const = default;
};

namespace nn {

/// y = x W + b with W stored (in, out).
struct Linear {
  ad::Tensor weight;
  ad::Tensor bias;
  ad::Tensor operator()(const ad::Tensor& x) const;
};

/// Scale and shift rows of a layer-normalized input, both produced from
/// the diffusion-time embedding by affine maps.
struct AdaLNParams {
  Linear scale;
  Linear shift;
};

struct AttentionParams {
  Linear query;
  Linear key;
  Linear value;
  Linear out;
};

/// Fusion of the timestamp matrix: a + [a | T] W + b. With W and b zero the
/// step is the identity on a.
struct FusionParams {
  Linear proj;
};

struct BlockParams {
  AdaLNParams adaln1;
  AttentionParams self_attn;
  FusionParams fusion;
  AttentionParams cross_attn;
  AdaLNParams adaln2;
  Linear ffn_in;
  Linear ffn_out;
};

ad::Tensor adaln(const ad::Tensor& x, const ad::Tensor& tau_embed, const AdaLNParams& p);

/// Multi-head scaled dot-product attention. q: (Tq, hidden); k, v: (Tk, hidden).
ad::Tensor attention(const ad::Tensor& q, const ad::Tensor& k, const ad::Tensor& v,
                     const AttentionParams& p, std::size_t heads);

ad::Tensor concat_time_aligned(const ad::Tensor& a, const ad::Tensor& t_mat,
                               const FusionParams& p);

ad::Tensor dit_block(const ad::Tensor& a, const ad::Tensor& t_mat, const ad::Tensor& c,
                     const ad::Tensor& tau_embed, const BlockParams& p, std::size_t heads);

/// Sinusoidal features of a diffusion time t in [0, 1], width `dim` (even).
std::vector<double> timestep_features(double t, std::size_t dim);

}  // namespace nn

/// Named parameter registry in registration order.
class ParameterSet {
 public:
  ad::Tensor& add(std::string name, ad::Tensor tensor);
  std::vector<std::pair<std::string, ad::Tensor>>& items() { return items_; }
  const std::vector<std::pair<std::string, ad::Tensor>>& items() const { return items_; }
  ad::Tensor* find(const std::string& name);
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, ad::Tensor>> items_;
};

class DiTModel {
 public:
  explicit DiTModel(DiTConfig config, std::uint64_t seed = 0);

  /// Predicted velocity for noisy latent x_t (T, D) at diffusion time t.
  /// `t_mat` (T, C) may be null (placeholder sequence); `caption` (L, C) may
  /// be null (learned null caption).
  ad::Tensor forward(const ad::Tensor& x_t, double t, const ad::Tensor* t_mat,
                     const ad::Tensor* caption) const;

  const DiTConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const std::vector<nn::BlockParams>& blocks() const { return blocks_; }

  /// The placeholder sequence (T, C) built from the learned placeholder row.
  ad::Tensor placeholder_matrix(std::size_t frames) const;
  const ad::Tensor& null_caption() const { return null_caption_; }

 private:
  nn::Linear make_linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                         double weight_scale, double bias_value = 0.0);

  DiTConfig config_;
  ParameterSet params_;
  nn::Linear in_proj_;
  nn::Linear time_mlp1_;
  nn::Linear time_mlp2_;
  nn::Linear cond_proj_;
  ad::Tensor null_caption_;
  ad::Tensor placeholder_;
  std::vector<nn::BlockParams> blocks_;
  nn::AdaLNParams final_adaln_;
  nn::Linear out_proj_;
};

}  // namespace tcgen
