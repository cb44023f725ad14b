#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace movingout::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1, kTanh = 2 };
const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kIdentity;
};

/// Per-layer parameter gradients plus the gradient with respect to the input.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;

  Gradients& operator+=(const Gradients& o);
};

/// Intermediate values of a forward pass, needed by backward().
struct Tape {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;
};

/// Fully connected network. Batches are column-per-sample matrices.
class DenseNet {
 public:
  DenseNet() = default;
  /// `sizes` has one more entry than `activations`. Weights are drawn
  /// uniformly in +-sqrt(6 / (fan_in + fan_out)), biases start at zero.
  DenseNet(const std::vector<int>& sizes, const std::vector<Activation>& activations, std::uint64_t seed);
  explicit DenseNet(std::vector<Layer> layers);

  int input_size() const;
  int output_size() const;
  std::size_t parameter_count() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  /// Throws ShapeMismatch when the batch height differs from input_size().
  Matrix forward(const Matrix& batch) const;
  Tape forward_tape(const Matrix& batch) const;
  /// `upstream` is dLoss/dOutput with the same shape as tape.output.
  Gradients backward(const Tape& tape, const Matrix& upstream) const;
  Gradients zero_gradients() const;

  bool all_finite() const;
  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  std::vector<Layer> layers_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const DenseNet& net, AdamConfig config = {});
  void step(DenseNet& net, const Gradients& grads);
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<Vector> m_b_, v_b_;
  long t_ = 0;
};

enum class LossKind { kMse, kCrossEntropy, kComposite };
LossKind loss_kind_from_string(const std::string& s);

struct LossSpec {
  LossKind kind = LossKind::kMse;
  /// Composite only: output rows trained as Bernoulli logits (binary
  /// cross-entropy); every other row uses mean squared error.
  std::vector<int> logit_rows;
};

struct LossValue {
  double value = 0.0;
  Matrix grad;
};

/// Mean over all entries of the squared error.
LossValue mse_loss(const Matrix& pred, const Matrix& target);
/// Softmax cross-entropy per column against a target distribution, averaged over columns.
LossValue cross_entropy_loss(const Matrix& logits, const Matrix& target);
/// MSE on regression rows plus binary cross-entropy with logits on `logit_rows`,
/// each averaged over the samples.
LossValue composite_loss(const Matrix& pred, const Matrix& target, const std::vector<int>& logit_rows);
LossValue compute_loss(const LossSpec& spec, const Matrix& pred, const Matrix& target);

struct Dataset {
  Matrix inputs;   // in x N
  Matrix targets;  // out x N
  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
};

struct TrainConfig {
  LossSpec loss;
  int epochs = 100;
  int batch_size = 1024;
  std::uint64_t seed = 0;
  AdamConfig adam;
};

struct TrainResult {
  /// Mean batch loss per epoch.
  std::vector<double> loss_curve;
};

/// Mini-batch Adam. Shuffling is driven by `seed` alone, so identical inputs
/// give identical parameters. Throws EmptyDataset, ShapeMismatch and
/// NonFiniteLoss.
TrainResult train(DenseNet& net, const Dataset& data, const TrainConfig& config);

/// Fixed row order of a batch drawn from a shuffled permutation.
std::vector<std::vector<Eigen::Index>> epoch_batches(std::size_t n, int batch_size, std::uint64_t seed, int epoch);

Matrix gather_columns(const Matrix& m, const std::vector<Eigen::Index>& cols);

// ---- model files ----

inline constexpr char kModelMagic[] = "MOVNN1";

/// Named networks and vectors stored together in one model file.
struct Bundle {
  using Entry = std::variant<DenseNet, std::vector<double>, std::string>;
  std::vector<std::pair<std::string, Entry>> entries;

  void put(const std::string& name, Entry value);
  const Entry& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  const DenseNet& net(const std::string& name) const;
  const std::vector<double>& vec(const std::string& name) const;
  const std::string& text(const std::string& name) const;
};

std::string serialize_bundle(const Bundle& bundle);
Bundle deserialize_bundle(const std::string& bytes);
void save_bundle(const Bundle& bundle, const std::filesystem::path& path);
Bundle load_bundle(const std::filesystem::path& path);

}  // namespace movingout::nn
