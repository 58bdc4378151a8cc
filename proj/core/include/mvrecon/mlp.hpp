#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mvrecon/types.hpp"

namespace mvr {

/// Frequency encoding of each input coordinate x:
///   [x (when included), sin(2^0 pi x), cos(2^0 pi x), ...,
///    sin(2^(L-1) pi x), cos(2^(L-1) pi x)]
/// L = 0 with include_input passes the input through unchanged.
int encoded_dim(int input_dim, int frequencies, bool include_input = true);
void encode_position(const double* in, int input_dim, int frequencies, bool include_input,
                     double* out);

struct MlpConfig {
  int input_dim = 3;
  int output_dim = 1;
  int hidden_width = 64;
  int hidden_layers = 3;
  int encoding_frequencies = 0;
  bool encoding_include_input = true;
  enum class Head { identity, sigmoid };
  Head head = Head::identity;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

/// Fully connected network with softplus hidden activations. Parameters live
/// in one flat vector (per layer: row-major weights, then biases), so the
/// optimizer treats the whole network as a single variable.
class Mlp {
 public:
  explicit Mlp(const MlpConfig& config);

  const MlpConfig& config() const { return config_; }
  int param_count() const { return static_cast<int>(params_.size()); }
  VecX& params() { return params_; }
  const VecX& params() const { return params_; }

  /// Saved intermediate activations of one forward call, consumed by backward.
  struct Tape {
    MatX encoded;                   // N x encoded_dim
    std::vector<MatX> pre;          // pre-activations per layer (head last)
    std::vector<MatX> post;         // softplus outputs per hidden layer
    MatX inputs;                    // N x input_dim (for encoding gradients)
  };

  /// inputs: N x input_dim, returns N x output_dim.
  MatX forward(const MatX& inputs, Tape* tape = nullptr) const;

  /// dL/doutput (N x output_dim) -> accumulates dL/dparams into param_grad
  /// (resized & zeroed if empty) and returns dL/dinputs (N x input_dim).
  MatX backward(const Tape& tape, const MatX& dout, VecX& param_grad) const;

  /// Binary checkpoint: layer shapes, 64-bit parameters, and (when an
  /// optimizer is passed) its moment vectors and step count.
  void save(const std::filesystem::path& path, const class AdamW* optimizer = nullptr) const;
  static Mlp load(const std::filesystem::path& path, class AdamW* optimizer = nullptr);

 private:
  struct Layer {
    int in = 0, out = 0;
    std::ptrdiff_t weight_offset = 0, bias_offset = 0;
  };
  Eigen::Map<const MatX> weights(int layer) const;
  Eigen::Map<const VecX> biases(int layer) const;

  MlpConfig config_;
  std::vector<Layer> layers_;  // hidden layers then head
  VecX params_;
};

/// Decoupled weight-decay Adam. State tensors are lazily sized to the first
/// gradient; `step` applies one update in place.
class AdamW {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
  };
  AdamW() = default;
  explicit AdamW(const Options& opts) : opts_(opts) {}

  Options& options() { return opts_; }
  const Options& options() const { return opts_; }
  std::int64_t steps() const { return t_; }

  void step(VecX& params, const VecX& grad);
  void reset();

  const VecX& first_moment() const { return m_; }
  const VecX& second_moment() const { return v_; }
  void set_state(VecX m, VecX v, std::int64_t steps);

 private:
  Options opts_;
  VecX m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace mvr
