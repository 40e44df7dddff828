#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dmf/sparse.hpp"

namespace dmf {

struct NetworkConfig {
  int in_channels = 16;
  std::vector<int> hidden = {16, 16};  // one submanifold conv per entry
  int num_classes = 2;

  void validate() const;
};

struct LinearLayer {
  WeightMatrix weights;     // c_in x c_out
  Eigen::VectorXd bias;     // c_out
};

/// Activations kept by SegNet::forward_cached for the backward pass.
struct ForwardCache {
  FeatureMatrix input;                     // after input normalisation
  std::vector<FeatureMatrix> conv_out;     // pre-activation output of each conv
  std::vector<FeatureMatrix> conv_in;      // input of each conv
  FeatureMatrix logits;
};

/// Parameter-shaped gradient buffers.
struct NetGradients {
  std::vector<WeightMatrix> conv_weights;
  std::vector<Eigen::VectorXd> conv_bias;
  WeightMatrix head_weights;
  Eigen::VectorXd head_bias;

  std::vector<std::span<double>> blocks();
};

/// Minimal sparse segmentation network:
///   normalise -> conv -> ReLU -> conv [-> ReLU -> conv ...] -> linear head.
/// The per-channel input normalisation is fitted from data, not trained.
class SegNet {
 public:
  SegNet() = default;

  /// He-initialised weights, zero biases, identity normalisation.
  static SegNet init(const NetworkConfig& config, std::uint64_t seed);

  /// Every weight and bias zero.
  static SegNet zeros(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }
  int in_channels() const { return config_.in_channels; }
  int num_classes() const { return config_.num_classes; }

  /// Sets shift/scale so every input channel has zero mean and unit variance
  /// over all voxels of `data`; constant channels keep scale 1.
  void fit_input_normalization(std::span<const SparseTensor> data);

  /// V x num_classes logits.
  FeatureMatrix forward(const SparseTensor& input, unsigned threads = 0) const;
  FeatureMatrix forward(const FeatureMatrix& features, const KernelMap& map, unsigned threads = 0) const;
  ForwardCache forward_cached(const FeatureMatrix& features, const KernelMap& map, unsigned threads = 0) const;

  /// Gradients of the loss w.r.t. every trainable parameter given dL/dlogits.
  NetGradients backward(const ForwardCache& cache, const FeatureMatrix& grad_logits, const KernelMap& map,
                        unsigned threads = 0) const;

  NetGradients zero_gradients() const;

  /// Trainable parameters in a fixed order matching NetGradients::blocks().
  std::vector<std::span<double>> parameter_blocks();
  std::size_t parameter_count() const;

  std::vector<SparseConvLayer>& convs() { return convs_; }
  const std::vector<SparseConvLayer>& convs() const { return convs_; }
  LinearLayer& head() { return head_; }
  const LinearLayer& head() const { return head_; }
  Eigen::VectorXd& input_shift() { return shift_; }
  Eigen::VectorXd& input_scale() { return scale_; }
  const Eigen::VectorXd& input_shift() const { return shift_; }
  const Eigen::VectorXd& input_scale() const { return scale_; }

  /// Rebuilds config() from the layer shapes (used after loading).
  void sync_config();

 private:
  NetworkConfig config_;
  Eigen::VectorXd shift_;
  Eigen::VectorXd scale_;
  std::vector<SparseConvLayer> convs_;
  LinearLayer head_;
};

struct CrossEntropy {
  double loss = 0.0;
  FeatureMatrix grad;  // (softmax - onehot) / V
};

/// Row-wise softmax with max subtraction.
FeatureMatrix softmax(const FeatureMatrix& logits);

/// Mean negative log-likelihood over rows. Throws InputError for labels
/// outside [0, C) or a row-count mismatch.
CrossEntropy cross_entropy(const FeatureMatrix& logits, std::span<const int> labels);

enum class Schedule { kConstant, kCosine };
Schedule parse_schedule(const std::string& name);
std::string to_string(Schedule s);

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 500;
  Schedule schedule = Schedule::kCosine;
  double min_learning_rate = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const;
  /// eta(t) = eta_min + (eta_0 - eta_min) (1 + cos(pi t / T)) / 2 for cosine.
  double learning_rate_at(int epoch) const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;          // mean loss over the epoch's samples, before each update
  double learning_rate = 0.0;
};

/// Adam with bias correction over a fixed list of parameter blocks.
class Adam {
 public:
  Adam(const std::vector<std::span<double>>& params, double beta1, double beta2, double epsilon);
  void step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads, double lr);

 private:
  double beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Full-batch Adam: every epoch visits the samples once in a seeded shuffled
/// order and takes one step per sample. Each sample needs per-voxel labels.
std::vector<EpochRecord> train(SegNet& net, std::span<const SparseTensor> dataset, const TrainConfig& cfg);

/// History as "epoch,loss,lr" CSV.
void write_loss_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

// ---------------------------------------------------------------------------
// Checkpoint
//
//   "DMFN" | u32 version = 1 | u32 layer count |
//   per layer: u32 kind | u32 c_in | u32 c_out | float32 weights | float32 bias
//
// kind 2 = input affine (weights = scale, bias = shift, c_in = c_out),
// kind 0 = 3x3x3 conv (27 * c_in * c_out weights, offset-major),
// kind 1 = linear head (c_in * c_out weights, row-major). Little-endian.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<char> encode_checkpoint(const SegNet& net);
SegNet decode_checkpoint(const std::vector<char>& bytes);
void save_checkpoint(const std::filesystem::path& path, const SegNet& net);
SegNet load_checkpoint(const std::filesystem::path& path);

}  // namespace dmf
