#include "mvrecon/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

namespace mvr {

int encoded_dim(int input_dim, int frequencies, bool include_input) {
  return input_dim * ((include_input ? 1 : 0) + 2 * frequencies);
}

void encode_position(const double* in, int input_dim, int frequencies, bool include_input,
                     double* out) {
  if (include_input)
    for (int d = 0; d < input_dim; ++d) *out++ = in[d];
  double scale = std::numbers::pi;
  for (int j = 0; j < frequencies; ++j) {
    for (int d = 0; d < input_dim; ++d) {
      *out++ = std::sin(scale * in[d]);
      *out++ = std::cos(scale * in[d]);
    }
    scale *= 2.0;
  }
}

void MlpConfig::validate() const {
  if (input_dim < 1 || output_dim < 1) throw config_error("mlp needs positive input/output dims");
  if (hidden_width < 1) throw config_error("mlp hidden width must be >= 1");
  if (hidden_layers < 1) throw config_error("mlp needs at least one hidden layer");
  if (encoding_frequencies < 0) throw config_error("encoding frequencies must be >= 0");
  if (!encoding_include_input && encoding_frequencies == 0)
    throw config_error("encoding with neither raw input nor frequencies is empty");
}

namespace {

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr std::uint32_t kCheckpointMagic = 0x4e52564d;  // "MVRN"
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

Mlp::Mlp(const MlpConfig& config) : config_(config) {
  config_.validate();
  const int enc = encoded_dim(config_.input_dim, config_.encoding_frequencies,
                              config_.encoding_include_input);
  std::ptrdiff_t offset = 0;
  int in = enc;
  for (int l = 0; l < config_.hidden_layers + 1; ++l) {
    const int out = l < config_.hidden_layers ? config_.hidden_width : config_.output_dim;
    Layer layer;
    layer.in = in;
    layer.out = out;
    layer.weight_offset = offset;
    offset += static_cast<std::ptrdiff_t>(in) * out;
    layer.bias_offset = offset;
    offset += out;
    layers_.push_back(layer);
    in = out;
  }
  params_.resize(offset);

  std::mt19937_64 rng(config_.seed);
  for (const Layer& layer : layers_) {
    const double bound = std::sqrt(6.0 / (layer.in + layer.out));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(layer.in) * layer.out; ++i)
      params_[layer.weight_offset + i] = uni(rng);
    for (int i = 0; i < layer.out; ++i) params_[layer.bias_offset + i] = 0.0;
  }
}

Eigen::Map<const MatX> Mlp::weights(int layer) const {
  const Layer& l = layers_[layer];
  // column-major (in x out) so that activations (N x in) * map = N x out
  return {params_.data() + l.weight_offset, l.in, l.out};
}

Eigen::Map<const VecX> Mlp::biases(int layer) const {
  const Layer& l = layers_[layer];
  return {params_.data() + l.bias_offset, l.out};
}

MatX Mlp::forward(const MatX& inputs, Tape* tape) const {
  if (inputs.cols() != config_.input_dim)
    throw numeric_error("mlp input has " + std::to_string(inputs.cols()) + " columns, expected " +
                        std::to_string(config_.input_dim));
  const auto n = inputs.rows();
  MatX a(n, encoded_dim(config_.input_dim, config_.encoding_frequencies,
                        config_.encoding_include_input));
  {
    Eigen::VectorXd row_in(config_.input_dim);
    Eigen::VectorXd row_out(a.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      row_in = inputs.row(i);
      encode_position(row_in.data(), config_.input_dim, config_.encoding_frequencies,
                      config_.encoding_include_input, row_out.data());
      a.row(i) = row_out;
    }
  }
  if (tape) {
    tape->inputs = inputs;
    tape->encoded = a;
    tape->pre.clear();
    tape->post.clear();
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    MatX z = a * weights(static_cast<int>(l));
    z.rowwise() += biases(static_cast<int>(l)).transpose();
    const bool is_head = l + 1 == layers_.size();
    if (tape) tape->pre.push_back(z);
    if (!is_head) {
      a = z.unaryExpr([](double x) { return softplus(x); });
      if (tape) tape->post.push_back(a);
    } else {
      if (config_.head == MlpConfig::Head::sigmoid)
        a = z.unaryExpr([](double x) { return sigmoid(x); });
      else
        a = std::move(z);
    }
  }
  return a;
}

MatX Mlp::backward(const Tape& tape, const MatX& dout, VecX& param_grad) const {
  if (param_grad.size() == 0) param_grad = VecX::Zero(params_.size());
  if (param_grad.size() != params_.size())
    throw numeric_error("parameter gradient buffer has the wrong size");

  const int n_layers = static_cast<int>(layers_.size());
  MatX delta;  // dL/d(pre-activation of current layer)
  if (config_.head == MlpConfig::Head::sigmoid) {
    const MatX s = tape.pre.back().unaryExpr([](double x) { return sigmoid(x); });
    delta = dout.cwiseProduct(s.cwiseProduct(MatX::Ones(s.rows(), s.cols()) - s));
  } else {
    delta = dout;
  }
  for (int l = n_layers - 1; l >= 0; --l) {
    const Layer& layer = layers_[l];
    const MatX& prev = l == 0 ? tape.encoded : tape.post[l - 1];
    Eigen::Map<MatX> wgrad(param_grad.data() + layer.weight_offset, layer.in, layer.out);
    Eigen::Map<VecX> bgrad(param_grad.data() + layer.bias_offset, layer.out);
    wgrad.noalias() += prev.transpose() * delta;
    bgrad += delta.colwise().sum().transpose();
    MatX dprev = delta * weights(l).transpose();
    if (l > 0) {
      // softplus'(z) = sigmoid(z)
      delta = dprev.cwiseProduct(tape.pre[l - 1].unaryExpr([](double x) { return sigmoid(x); }));
    } else {
      delta = std::move(dprev);  // dL/d(encoded)
    }
  }

  // chain through the frequency encoding back to the raw coordinates
  const auto n = tape.inputs.rows();
  const int d = config_.input_dim;
  const int skip = config_.encoding_include_input ? d : 0;
  MatX din(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      double g = config_.encoding_include_input ? delta(i, c) : 0.0;
      double scale = std::numbers::pi;
      for (int j = 0; j < config_.encoding_frequencies; ++j) {
        const int base = skip + 2 * (j * d + c);
        const double arg = scale * tape.inputs(i, c);
        g += delta(i, base) * scale * std::cos(arg);
        g -= delta(i, base + 1) * scale * std::sin(arg);
        scale *= 2.0;
      }
      din(i, c) = g;
    }
  }
  return din;
}

void Mlp::save(const std::filesystem::path& path, const AdamW* optimizer) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  const auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  const auto put_i32 = [&](std::int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  const auto put_vec = [&](const VecX& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  put_u32(kCheckpointMagic);
  put_u32(kCheckpointVersion);
  put_i32(config_.input_dim);
  put_i32(config_.output_dim);
  put_i32(config_.hidden_width);
  put_i32(config_.hidden_layers);
  put_i32(config_.encoding_frequencies);
  put_i32(config_.encoding_include_input ? 1 : 0);
  put_i32(config_.head == MlpConfig::Head::sigmoid ? 1 : 0);
  out.write(reinterpret_cast<const char*>(&config_.seed), 8);
  const std::int64_t count = params_.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  put_vec(params_);
  const bool with_opt = optimizer != nullptr && optimizer->first_moment().size() == count;
  put_i32(with_opt ? 1 : 0);
  if (with_opt) {
    const std::int64_t steps = optimizer->steps();
    out.write(reinterpret_cast<const char*>(&steps), 8);
    put_vec(optimizer->first_moment());
    put_vec(optimizer->second_moment());
  }
  if (!out) throw io_error("failed while writing " + path.string());
}

Mlp Mlp::load(const std::filesystem::path& path, AdamW* optimizer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  const auto get_u32 = [&] {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const auto get_i32 = [&] {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const auto get_vec = [&](std::int64_t size) {
    VecX v(size);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(size * sizeof(double)));
    return v;
  };
  if (get_u32() != kCheckpointMagic)
    throw io_error(path.string() + " is not a network checkpoint");
  const std::uint32_t version = get_u32();
  if (version != kCheckpointVersion)
    throw io_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  MlpConfig config;
  config.input_dim = get_i32();
  config.output_dim = get_i32();
  config.hidden_width = get_i32();
  config.hidden_layers = get_i32();
  config.encoding_frequencies = get_i32();
  config.encoding_include_input = get_i32() == 1;
  config.head = get_i32() == 1 ? MlpConfig::Head::sigmoid : MlpConfig::Head::identity;
  in.read(reinterpret_cast<char*>(&config.seed), 8);
  std::int64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  Mlp mlp(config);
  if (count != mlp.param_count())
    throw io_error(path.string() + ": parameter count mismatch");
  in.read(reinterpret_cast<char*>(mlp.params_.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw io_error(path.string() + ": truncated checkpoint");
  const bool with_opt = get_i32() == 1;
  if (with_opt) {
    std::int64_t steps = 0;
    in.read(reinterpret_cast<char*>(&steps), 8);
    VecX m = get_vec(count);
    VecX v = get_vec(count);
    if (!in) throw io_error(path.string() + ": truncated optimizer state");
    if (optimizer) optimizer->set_state(std::move(m), std::move(v), steps);
  } else if (optimizer) {
    optimizer->reset();
  }
  return mlp;
}

void AdamW::step(VecX& params, const VecX& grad) {
  if (params.size() != grad.size()) throw numeric_error("optimizer got mismatched sizes");
  if (m_.size() != params.size()) {
    m_ = VecX::Zero(params.size());
    v_ = VecX::Zero(params.size());
    t_ = 0;
  }
  ++t_;
  m_ = opts_.beta1 * m_ + (1.0 - opts_.beta1) * grad;
  v_ = opts_.beta2 * v_ + (1.0 - opts_.beta2) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  // decoupled decay: the weights shrink directly instead of through the
  // gradient, both terms evaluated at the incoming parameter values
  const VecX update = (m_ / bias1).array() / ((v_ / bias2).cwiseSqrt().array() + opts_.eps) +
                      opts_.weight_decay * params.array();
  params -= opts_.lr * update;
}

void AdamW::reset() {
  m_.resize(0);
  v_.resize(0);
  t_ = 0;
}

void AdamW::set_state(VecX m, VecX v, std::int64_t steps) {
  if (m.size() != v.size() || steps < 0) throw numeric_error("inconsistent optimizer state");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = steps;
}

}  // namespace mvr
