#include "dmf/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "dmf/errors.hpp"
#include "dmf/parallel.hpp"

namespace dmf {
namespace {

std::span<double> span_of(WeightMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

void NetworkConfig::validate() const {
  if (in_channels < 1) throw InputError("network: in_channels must be >= 1");
  if (hidden.empty()) throw InputError("network: at least one conv layer is required");
  for (int h : hidden) {
    if (h < 1) throw InputError("network: hidden widths must be >= 1");
  }
  if (num_classes < 1) throw InputError("network: num_classes must be >= 1");
}

std::vector<std::span<double>> NetGradients::blocks() {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < conv_weights.size(); ++l) {
    out.push_back(span_of(conv_weights[l]));
    out.push_back(span_of(conv_bias[l]));
  }
  out.push_back(span_of(head_weights));
  out.push_back(span_of(head_bias));
  return out;
}

SegNet SegNet::zeros(const NetworkConfig& config) {
  config.validate();
  SegNet net;
  net.config_ = config;
  net.shift_ = Eigen::VectorXd::Zero(config.in_channels);
  net.scale_ = Eigen::VectorXd::Ones(config.in_channels);
  int c_in = config.in_channels;
  for (int h : config.hidden) {
    net.convs_.push_back(SparseConvLayer::zeros(c_in, h));
    c_in = h;
  }
  net.head_.weights = WeightMatrix::Zero(c_in, config.num_classes);
  net.head_.bias = Eigen::VectorXd::Zero(config.num_classes);
  return net;
}

SegNet SegNet::init(const NetworkConfig& config, std::uint64_t seed) {
  SegNet net = zeros(config);
  std::mt19937_64 rng(seed);
  for (auto& conv : net.convs_) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / (kKernelVolume * conv.c_in)));
    for (Eigen::Index i = 0; i < conv.weights.size(); ++i) conv.weights.data()[i] = gauss(rng);
  }
  std::normal_distribution<double> gauss(0.0, std::sqrt(1.0 / net.head_.weights.rows()));
  for (Eigen::Index i = 0; i < net.head_.weights.size(); ++i) net.head_.weights.data()[i] = gauss(rng);
  return net;
}

void SegNet::sync_config() {
  config_.in_channels = convs_.empty() ? 0 : convs_.front().c_in;
  config_.hidden.clear();
  for (const auto& c : convs_) config_.hidden.push_back(c.c_out);
  config_.num_classes = static_cast<int>(head_.weights.cols());
}

void SegNet::fit_input_normalization(std::span<const SparseTensor> data) {
  const int c = in_channels();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(c);
  double n = 0.0;
  for (const auto& t : data) {
    if (t.channels() != c) throw DimensionError("fit_input_normalization: channel mismatch");
    for (Eigen::Index r = 0; r < t.features.rows(); ++r) {
      sum += t.features.row(r).transpose();
      sum_sq += t.features.row(r).transpose().cwiseAbs2();
    }
    n += static_cast<double>(t.features.rows());
  }
  shift_ = Eigen::VectorXd::Zero(c);
  scale_ = Eigen::VectorXd::Ones(c);
  if (n == 0.0) return;
  for (int i = 0; i < c; ++i) {
    const double mean = sum[i] / n;
    const double var = std::max(0.0, sum_sq[i] / n - mean * mean);
    shift_[i] = mean;
    if (var > 1e-12) scale_[i] = 1.0 / std::sqrt(var);
  }
}

ForwardCache SegNet::forward_cached(const FeatureMatrix& features, const KernelMap& map,
                                    unsigned threads) const {
  if (features.cols() != in_channels()) {
    throw DimensionError("network expects " + std::to_string(in_channels()) + " input channels, got " +
                         std::to_string(features.cols()));
  }
  ForwardCache cache;
  cache.input = (features.rowwise() - shift_.transpose()).array().rowwise() * scale_.transpose().array();
  FeatureMatrix x = cache.input;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    cache.conv_in.push_back(x);
    cache.conv_out.push_back(sparse_conv(x, map, convs_[l], threads));
    x = cache.conv_out.back();
    if (l + 1 < convs_.size()) x = x.cwiseMax(0.0);
  }
  cache.logits = (x * head_.weights).rowwise() + head_.bias.transpose();
  return cache;
}

FeatureMatrix SegNet::forward(const FeatureMatrix& features, const KernelMap& map, unsigned threads) const {
  return forward_cached(features, map, threads).logits;
}

FeatureMatrix SegNet::forward(const SparseTensor& input, unsigned threads) const {
  const KernelMap map(input.coords);
  return forward(input.features, map, threads);
}

NetGradients SegNet::zero_gradients() const {
  NetGradients g;
  for (const auto& c : convs_) {
    g.conv_weights.push_back(WeightMatrix::Zero(c.weights.rows(), c.weights.cols()));
    g.conv_bias.push_back(Eigen::VectorXd::Zero(c.bias.size()));
  }
  g.head_weights = WeightMatrix::Zero(head_.weights.rows(), head_.weights.cols());
  g.head_bias = Eigen::VectorXd::Zero(head_.bias.size());
  return g;
}

NetGradients SegNet::backward(const ForwardCache& cache, const FeatureMatrix& grad_logits,
                              const KernelMap& map, unsigned threads) const {
  NetGradients g = zero_gradients();
  const std::size_t v_count = map.size();
  if (static_cast<std::size_t>(grad_logits.rows()) != v_count || grad_logits.cols() != num_classes()) {
    throw DimensionError("backward: gradient shape does not match the logits");
  }
  const FeatureMatrix& last = cache.conv_out.back();
  g.head_weights = last.transpose() * grad_logits;
  g.head_bias = grad_logits.colwise().sum().transpose();
  FeatureMatrix grad_out = grad_logits * head_.weights.transpose();

  for (std::size_t l = convs_.size(); l-- > 0;) {
    const SparseConvLayer& conv = convs_[l];
    const FeatureMatrix& in = cache.conv_in[l];
    const int ci = conv.c_in;
    const int co = conv.c_out;

    for (std::size_t v = 0; v < v_count; ++v) {
      for (int j = 0; j < co; ++j) g.conv_bias[l][j] += grad_out(static_cast<Eigen::Index>(v), j);
    }
    // One task per kernel offset; each sums voxels in ascending order.
    WeightMatrix& gw = g.conv_weights[l];
    parallel_for(
        kKernelVolume,
        [&](std::size_t o) {
          double* block = gw.data() + o * ci * co;
          for (std::size_t v = 0; v < v_count; ++v) {
            const std::int32_t n = map.neighbor(v, static_cast<int>(o));
            if (n < 0) continue;
            const double* src = in.data() + static_cast<std::size_t>(n) * ci;
            const double* d = grad_out.data() + v * co;
            for (int i = 0; i < ci; ++i) {
              if (src[i] == 0.0) continue;
              for (int j = 0; j < co; ++j) block[i * co + j] += src[i] * d[j];
            }
          }
        },
        threads);

    if (l == 0) break;
    // dL/din(u) = sum_o W_o dout(u - offset(o)); u - offset(o) is neighbour 26 - o.
    FeatureMatrix grad_in = FeatureMatrix::Zero(static_cast<Eigen::Index>(v_count), ci);
    parallel_for(
        v_count,
        [&](std::size_t u) {
          double* dst = grad_in.data() + u * ci;
          for (int o = 0; o < kKernelVolume; ++o) {
            const std::int32_t v = map.neighbor(u, kKernelVolume - 1 - o);
            if (v < 0) continue;
            const double* d = grad_out.data() + static_cast<std::size_t>(v) * co;
            const double* w = conv.weights.data() + static_cast<std::size_t>(o) * ci * co;
            for (int i = 0; i < ci; ++i) {
              double acc = 0.0;
              for (int j = 0; j < co; ++j) acc += w[i * co + j] * d[j];
              dst[i] += acc;
            }
          }
        },
        threads);
    const FeatureMatrix& pre = cache.conv_out[l - 1];
    grad_out = (pre.array() > 0.0).select(grad_in, 0.0);
  }
  return g;
}

std::vector<std::span<double>> SegNet::parameter_blocks() {
  std::vector<std::span<double>> out;
  for (auto& c : convs_) {
    out.push_back(span_of(c.weights));
    out.push_back(span_of(c.bias));
  }
  out.push_back(span_of(head_.weights));
  out.push_back(span_of(head_.bias));
  return out;
}

std::size_t SegNet::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(head_.weights.size() + head_.bias.size());
  for (const auto& c : convs_) n += static_cast<std::size_t>(c.weights.size() + c.bias.size());
  return n;
}

// --- loss ------------------------------------------------------------------

FeatureMatrix softmax(const FeatureMatrix& logits) {
  FeatureMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

CrossEntropy cross_entropy(const FeatureMatrix& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw InputError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (logits.rows() == 0) throw InputError("cross_entropy: no rows");
  const auto classes = logits.cols();
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw InputError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }
  CrossEntropy out;
  out.grad.resize(logits.rows(), classes);
  const double inv_rows = 1.0 / static_cast<double>(logits.rows());
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const auto shifted = (logits.row(r).array() - m).eval();
    const double sum_exp = shifted.exp().sum();
    const int y = labels[static_cast<std::size_t>(r)];
    total += std::log(sum_exp) - shifted[y];
    out.grad.row(r) = shifted.exp() / sum_exp;
    out.grad(r, y) -= 1.0;
  }
  out.grad *= inv_rows;
  out.loss = total * inv_rows;
  return out;
}

// --- training --------------------------------------------------------------

Schedule parse_schedule(const std::string& name) {
  if (name == "constant") return Schedule::kConstant;
  if (name == "cosine") return Schedule::kCosine;
  throw InputError("unknown schedule '" + name + "'");
}

std::string to_string(Schedule s) { return s == Schedule::kConstant ? "constant" : "cosine"; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("train: learning_rate must be positive");
  if (!(min_learning_rate >= 0.0) || min_learning_rate > learning_rate) {
    throw InputError("train: min_learning_rate must lie in [0, learning_rate]");
  }
  if (epochs < 0) throw InputError("train: epochs must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw InputError("train: invalid Adam hyper-parameters");
  }
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (schedule == Schedule::kConstant || epochs == 0) return learning_rate;
  return min_learning_rate +
         0.5 * (learning_rate - min_learning_rate) * (1.0 + std::cos(std::numbers::pi * epoch / epochs));
}

Adam::Adam(const std::vector<std::span<double>>& params, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const auto& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads,
                double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw DimensionError("Adam: block count changed");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size()) {
      throw DimensionError("Adam: block size changed");
    }
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m_[b][i] = beta1_ * m_[b][i] + (1.0 - beta1_) * g;
      v_[b][i] = beta2_ * v_[b][i] + (1.0 - beta2_) * g * g;
      params[b][i] -= lr * (m_[b][i] / c1) / (std::sqrt(v_[b][i] / c2) + epsilon_);
    }
  }
}

std::vector<EpochRecord> train(SegNet& net, std::span<const SparseTensor> dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw InputError("train: empty dataset");
  std::vector<KernelMap> maps;
  for (const auto& sample : dataset) {
    if (sample.labels.size() != sample.size()) throw InputError("train: every sample needs per-voxel labels");
    maps.emplace_back(sample.coords);
  }
  Adam adam(net.parameter_blocks(), cfg.beta1, cfg.beta2, cfg.epsilon);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochRecord> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.learning_rate_at(epoch);
    double total = 0.0;
    for (std::size_t idx : order) {
      const SparseTensor& sample = dataset[idx];
      const ForwardCache cache = net.forward_cached(sample.features, maps[idx], cfg.threads);
      const CrossEntropy ce = cross_entropy(cache.logits, sample.labels);
      NetGradients grads = net.backward(cache, ce.grad, maps[idx], cfg.threads);
      adam.step(net.parameter_blocks(), grads.blocks(), lr);
      total += ce.loss;
    }
    history.push_back({epoch, total / static_cast<double>(dataset.size()), lr});
  }
  return history;
}

void write_loss_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,loss,lr\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : history) out << r.epoch << ',' << r.loss << ',' << r.learning_rate << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// --- checkpoint ------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'D', 'M', 'F', 'N'};
enum LayerKind : std::uint32_t { kConvLayer = 0, kLinearLayer = 1, kAffineLayer = 2 };

void put_u32(std::vector<char>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + 4);
}

void put_floats(std::vector<char>& out, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float f = static_cast<float>(data[i]);
    const auto* p = reinterpret_cast<const char*>(&f);
    out.insert(out.end(), p, p + 4);
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  void floats(double* out, std::size_t n) {
    need(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, bytes_.data() + pos_ + 4 * i, 4);
      out[i] = f;
    }
    pos_ += n * 4;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated");
  }
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<char> encode_checkpoint(const SegNet& net) {
  std::vector<char> out(kCheckpointMagic, kCheckpointMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.convs().size() + 2));
  const auto c = static_cast<std::uint32_t>(net.in_channels());
  put_u32(out, kAffineLayer);
  put_u32(out, c);
  put_u32(out, c);
  put_floats(out, net.input_scale().data(), c);
  put_floats(out, net.input_shift().data(), c);
  for (const auto& conv : net.convs()) {
    put_u32(out, kConvLayer);
    put_u32(out, static_cast<std::uint32_t>(conv.c_in));
    put_u32(out, static_cast<std::uint32_t>(conv.c_out));
    put_floats(out, conv.weights.data(), static_cast<std::size_t>(conv.weights.size()));
    put_floats(out, conv.bias.data(), static_cast<std::size_t>(conv.bias.size()));
  }
  const auto& head = net.head();
  put_u32(out, kLinearLayer);
  put_u32(out, static_cast<std::uint32_t>(head.weights.rows()));
  put_u32(out, static_cast<std::uint32_t>(head.weights.cols()));
  put_floats(out, head.weights.data(), static_cast<std::size_t>(head.weights.size()));
  put_floats(out, head.bias.data(), static_cast<std::size_t>(head.bias.size()));
  return out;
}

SegNet decode_checkpoint(const std::vector<char>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  Reader in(bytes);
  in.u32();
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t layers = in.u32();
  if (layers < 3) throw FormatError("checkpoint: expected affine, >= 1 conv and a head");

  constexpr std::uint32_t kMaxChannels = 1u << 16;
  SegNet net;
  std::uint32_t prev = 0;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint32_t kind = in.u32();
    const std::uint32_t ci = in.u32();
    const std::uint32_t co = in.u32();
    if (ci == 0 || co == 0 || ci > kMaxChannels || co > kMaxChannels) throw FormatError("checkpoint: bad layer dims");
    const bool first = l == 0;
    const bool last = l + 1 == layers;
    if (first != (kind == kAffineLayer) || last != (kind == kLinearLayer) ||
        (!first && !last && kind != kConvLayer)) {
      throw FormatError("checkpoint: unexpected layer kind " + std::to_string(kind) + " at position " +
                        std::to_string(l));
    }
    if (!first && ci != prev) throw FormatError("checkpoint: layer dims do not chain");
    if (kind == kAffineLayer) {
      if (ci != co) throw FormatError("checkpoint: affine layer must be square");
      net.input_scale().resize(ci);
      net.input_shift().resize(ci);
      in.floats(net.input_scale().data(), ci);
      in.floats(net.input_shift().data(), ci);
    } else if (kind == kConvLayer) {
      SparseConvLayer conv = SparseConvLayer::zeros(static_cast<int>(ci), static_cast<int>(co));
      in.floats(conv.weights.data(), static_cast<std::size_t>(conv.weights.size()));
      in.floats(conv.bias.data(), co);
      net.convs().push_back(std::move(conv));
    } else {
      net.head().weights = WeightMatrix::Zero(ci, co);
      net.head().bias = Eigen::VectorXd::Zero(co);
      in.floats(net.head().weights.data(), static_cast<std::size_t>(ci) * co);
      in.floats(net.head().bias.data(), co);
    }
    prev = co;
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes");
  net.sync_config();
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const SegNet& net) {
  const auto bytes = encode_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

SegNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace dmf
