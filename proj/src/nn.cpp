#include "steer/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "steer/errors.hpp"
#include "steer/rng.hpp"

namespace steer {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct LayerView {
  RowMajorMap w;
  Eigen::Map<const Eigen::VectorXd> b;
};

std::vector<LayerView> views(const ModelParams& p) {
  const auto dims = p.spec.dims();
  std::vector<LayerView> out;
  const double* ptr = p.values.data();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], o = dims[l + 1];
    RowMajorMap w(ptr, o, in);
    ptr += static_cast<std::size_t>(in) * o;
    Eigen::Map<const Eigen::VectorXd> b(ptr, o);
    ptr += o;
    out.push_back({w, b});
  }
  return out;
}

void check_size(const ModelParams& p) {
  if (p.values.size() != p.spec.param_count()) throw ContractViolation("parameter vector does not match spec");
}

}  // namespace

std::vector<int> NetSpec::dims() const {
  std::vector<int> d;
  d.push_back(input_dim);
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(output_dim);
  return d;
}

std::size_t NetSpec::param_count() const {
  const auto d = dims();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < d.size(); ++l)
    n += static_cast<std::size_t>(d[l]) * d[l + 1] + static_cast<std::size_t>(d[l + 1]);
  return n;
}

void validate(const NetSpec& spec) {
  for (int d : spec.dims())
    if (d <= 0) throw ConfigError("network dimensions must be > 0");
}

std::vector<DenseLayer> unflatten(const ModelParams& params) {
  check_size(params);
  std::vector<DenseLayer> layers;
  for (const auto& v : views(params)) layers.push_back({v.w, v.b});
  return layers;
}

ModelParams flatten(const NetSpec& spec, std::span<const DenseLayer> layers) {
  const auto dims = spec.dims();
  if (layers.size() + 1 != dims.size()) throw ContractViolation("layer count does not match spec");
  ModelParams p{spec, {}};
  p.values.reserve(spec.param_count());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    if (L.weights.rows() != dims[l + 1] || L.weights.cols() != dims[l] || L.bias.size() != dims[l + 1])
      throw ContractViolation("layer shape does not match spec");
    for (Eigen::Index r = 0; r < L.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < L.weights.cols(); ++c) p.values.push_back(L.weights(r, c));
    for (Eigen::Index r = 0; r < L.bias.size(); ++r) p.values.push_back(L.bias(r));
  }
  return p;
}

ModelParams init_params(const NetSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  ModelParams p{spec, {}};
  p.values.reserve(spec.param_count());
  const auto dims = spec.dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    const std::size_t n = static_cast<std::size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
    for (std::size_t i = 0; i < n; ++i) p.values.push_back(uniform(rng, -scale, scale));
  }
  return p;
}

Batch forward_batch(const ModelParams& params, const Batch& states) {
  check_size(params);
  if (states.cols() != params.spec.input_dim) throw ContractViolation("state dimension mismatch");
  Batch a = states;
  const auto layers = views(params);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Batch z = a * layers[l].w.transpose();
    z.rowwise() += layers[l].b.transpose();
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const ModelParams& params, std::span<const double> state) {
  if (static_cast<int>(state.size()) != params.spec.input_dim) throw ContractViolation("state dimension mismatch");
  Batch x = Eigen::Map<const Batch>(state.data(), 1, static_cast<Eigen::Index>(state.size()));
  return forward_batch(params, x).row(0).transpose();
}

double td_loss_and_gradient(const ModelParams& params, const Batch& states, std::span<const int> actions,
                            std::span<const double> targets, std::vector<double>& grad) {
  check_size(params);
  const Eigen::Index batch = states.rows();
  if (batch == 0) throw ContractViolation("empty batch");
  if (static_cast<Eigen::Index>(actions.size()) != batch || static_cast<Eigen::Index>(targets.size()) != batch)
    throw ContractViolation("batch sizes disagree");
  if (states.cols() != params.spec.input_dim) throw ContractViolation("state dimension mismatch");

  const auto layers = views(params);
  // Pre-activations per layer; activations[0] is the input.
  std::vector<Batch> acts{states};
  std::vector<Batch> pre;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Batch z = acts.back() * layers[l].w.transpose();
    z.rowwise() += layers[l].b.transpose();
    pre.push_back(z);
    acts.push_back(l + 1 < layers.size() ? Batch(z.cwiseMax(0.0)) : z);
  }

  const Batch& q = acts.back();
  Batch dz = Batch::Zero(batch, q.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int a = actions[i];
    if (a < 0 || a >= q.cols()) throw ContractViolation("action index out of range");
    const double err = targets[i] - q(i, a);
    loss += err * err;
    dz(i, a) = -2.0 * err / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);

  grad.assign(params.values.size(), 0.0);
  // Offsets of each layer's block inside the flat vector.
  const auto dims = params.spec.dims();
  std::vector<std::size_t> offset(layers.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = off;
    off += static_cast<std::size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    const int in = dims[l], o = dims[l + 1];
    RowMajorMapMut gw(grad.data() + offset[l], o, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offset[l] + static_cast<std::size_t>(in) * o, o);
    gw.noalias() = dz.transpose() * acts[l];
    gb = dz.colwise().sum().transpose();
    if (l == 0) break;
    Batch da = dz * layers[l].w;
    dz = da.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

double td_step(ModelParams& params, const Batch& states, std::span<const int> actions,
               std::span<const double> targets, double lr) {
  for (double t : targets)
    if (!std::isfinite(t)) throw TrainingError("non-finite TD target");
  std::vector<double> grad;
  const double loss = td_loss_and_gradient(params, states, actions, targets, grad);
  if (!std::isfinite(loss)) throw TrainingError("non-finite TD loss");
  if (lr == 0.0) return loss;
  for (std::size_t i = 0; i < grad.size(); ++i) params.values[i] -= lr * grad[i];
  for (double v : params.values)
    if (!std::isfinite(v)) throw TrainingError("non-finite parameters after update");
  return loss;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char b[8] = {};
  is.read(reinterpret_cast<char*>(b), bytes);
  if (!is) throw ConfigError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, std::uint64_t seed) {
  check_size(params);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
  os.write("SQNT", 4);
  put_u32(os, kCheckpointVersion);
  const auto dims = params.spec.dims();
  put_u32(os, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put_u32(os, static_cast<std::uint32_t>(d));
  put_u64(os, seed);
  put_u64(os, params.values.size());
  for (double v : params.values) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(os, bits);
  }
  if (!os) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SQNT", 4) != 0) throw ConfigError("not a checkpoint: " + path.string());
  const auto version = static_cast<std::uint32_t>(get_le(is, 4));
  if (version != kCheckpointVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  const auto n_dims = static_cast<std::uint32_t>(get_le(is, 4));
  if (n_dims < 2 || n_dims > 64) throw ConfigError("bad layer count in checkpoint");
  std::vector<int> dims(n_dims);
  for (auto& d : dims) d = static_cast<int>(get_le(is, 4));
  Checkpoint ck;
  ck.params.spec.input_dim = dims.front();
  ck.params.spec.output_dim = dims.back();
  ck.params.spec.hidden.assign(dims.begin() + 1, dims.end() - 1);
  validate(ck.params.spec);
  ck.seed = get_le(is, 8);
  const auto count = get_le(is, 8);
  if (count != ck.params.spec.param_count()) throw ConfigError("checkpoint parameter count mismatch");
  ck.params.values.resize(count);
  for (auto& v : ck.params.values) {
    const auto bits = static_cast<std::uint32_t>(get_le(is, 4));
    float f;
    std::memcpy(&f, &bits, sizeof f);
    v = f;
  }
  return ck;
}

}  // namespace steer
