#include "movingout/nn.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <algorithm>
#include <sstream>

#include "movingout/errors.hpp"
#include "movingout/rng.hpp"

namespace movingout::nn {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

namespace {

Matrix activate(const Matrix& pre, Activation a) {
  switch (a) {
    case Activation::kIdentity: return pre;
    case Activation::kRelu: return pre.cwiseMax(0.0);
    case Activation::kTanh: return pre.array().tanh().matrix();
  }
  return pre;
}

// Elementwise derivative of the activation evaluated at `pre`.
Matrix activation_grad(const Matrix& pre, Activation a) {
  switch (a) {
    case Activation::kIdentity: return Matrix::Ones(pre.rows(), pre.cols());
    case Activation::kRelu: return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh: return (1.0 - pre.array().tanh().square()).matrix();
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

void check_finite(double v, const std::string& where) {
  if (!std::isfinite(v)) throw Error(ErrorKind::kNonFiniteLoss, "loss became non-finite at " + where);
}

}  // namespace

Gradients& Gradients::operator+=(const Gradients& o) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += o.weight[i];
    bias[i] += o.bias[i];
  }
  return *this;
}

DenseNet::DenseNet(const std::vector<int>& sizes, const std::vector<Activation>& activations, std::uint64_t seed) {
  if (sizes.size() < 2 || activations.size() + 1 != sizes.size()) {
    throw Error(ErrorKind::kShapeMismatch, "layer sizes and activations do not chain");
  }
  Rng rng = make_rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    if (in <= 0 || out <= 0) throw Error(ErrorKind::kShapeMismatch, "layer sizes must be positive");
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> init(-limit, limit);
    Layer layer;
    layer.weight.resize(out, in);
    for (int c = 0; c < in; ++c) {
      for (int r = 0; r < out; ++r) layer.weight(r, c) = init(rng);
    }
    layer.bias = Vector::Zero(out);
    layer.activation = activations[l];
    layers_.push_back(std::move(layer));
  }
}

DenseNet::DenseNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    if (L.bias.size() != L.weight.rows() || (l > 0 && L.weight.cols() != layers_[l - 1].weight.rows())) {
      throw Error(ErrorKind::kShapeMismatch, "layer " + std::to_string(l) + " does not chain");
    }
  }
}

int DenseNet::input_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }
int DenseNet::output_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows()); }

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Matrix DenseNet::forward(const Matrix& batch) const {
  if (batch.rows() != input_size()) {
    throw Error(ErrorKind::kShapeMismatch, "batch height " + std::to_string(batch.rows()) + ", network expects " +
                                               std::to_string(input_size()));
  }
  Matrix x = batch;
  for (const Layer& l : layers_) {
    Matrix pre = l.weight * x;
    pre.colwise() += l.bias;
    x = activate(pre, l.activation);
  }
  return x;
}

Tape DenseNet::forward_tape(const Matrix& batch) const {
  if (batch.rows() != input_size()) {
    throw Error(ErrorKind::kShapeMismatch, "batch height " + std::to_string(batch.rows()) + ", network expects " +
                                               std::to_string(input_size()));
  }
  Tape tape;
  Matrix x = batch;
  for (const Layer& l : layers_) {
    tape.inputs.push_back(x);
    Matrix pre = l.weight * x;
    pre.colwise() += l.bias;
    x = activate(pre, l.activation);
    tape.pre.push_back(std::move(pre));
  }
  tape.output = std::move(x);
  return tape;
}

Gradients DenseNet::backward(const Tape& tape, const Matrix& upstream) const {
  if (upstream.rows() != tape.output.rows() || upstream.cols() != tape.output.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "upstream gradient shape differs from the output");
  }
  Gradients g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  Matrix delta = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Layer& l = layers_[i];
    if (l.activation != Activation::kIdentity) delta = delta.cwiseProduct(activation_grad(tape.pre[i], l.activation));
    g.weight[i] = delta * tape.inputs[i].transpose();
    g.bias[i] = delta.rowwise().sum();
    delta = l.weight.transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

Gradients DenseNet::zero_gradients() const {
  Gradients g;
  for (const Layer& l : layers_) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

bool DenseNet::all_finite() const {
  for (const Layer& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const Layer& x = a.layers_[i];
    const Layer& y = b.layers_[i];
    if (x.activation != y.activation || x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols()) {
      return false;
    }
    if (x.weight != y.weight || x.bias != y.bias) return false;
  }
  return true;
}

Adam::Adam(const DenseNet& net, AdamConfig config) : config_(config) {
  for (const Layer& l : net.layers()) {
    m_w_.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    v_w_.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    m_b_.push_back(Vector::Zero(l.bias.size()));
    v_b_.push_back(Vector::Zero(l.bias.size()));
  }
}

void Adam::step(DenseNet& net, const Gradients& grads) {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= config_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.eps);
  };
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight, grads.weight[i], m_w_[i], v_w_[i]);
    update(layers[i].bias, grads.bias[i], m_b_[i], v_b_[i]);
  }
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mse") return LossKind::kMse;
  if (s == "cross-entropy") return LossKind::kCrossEntropy;
  if (s == "composite") return LossKind::kComposite;
  throw std::invalid_argument("unknown loss '" + s + "'");
}

namespace {

void same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "prediction " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                               " vs target " + std::to_string(b.rows()) + "x" +
                                               std::to_string(b.cols()));
  }
}

}  // namespace

LossValue mse_loss(const Matrix& pred, const Matrix& target) {
  same_shape(pred, target);
  const double n = static_cast<double>(pred.size());
  const Matrix diff = pred - target;
  return {diff.squaredNorm() / n, diff * (2.0 / n)};
}

LossValue cross_entropy_loss(const Matrix& logits, const Matrix& target) {
  same_shape(logits, target);
  const double n = static_cast<double>(logits.cols());
  LossValue out{0.0, Matrix(logits.rows(), logits.cols())};
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    const Vector e = (logits.col(c).array() - mx).exp().matrix();
    const double z = e.sum();
    const Vector p = e / z;
    const double mass = target.col(c).sum();
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const double log_p = logits(r, c) - mx - std::log(z);
      out.value -= target(r, c) * log_p;
    }
    out.grad.col(c) = (p * mass - target.col(c)) / n;
  }
  out.value /= n;
  return out;
}

LossValue composite_loss(const Matrix& pred, const Matrix& target, const std::vector<int>& logit_rows) {
  same_shape(pred, target);
  const Eigen::Index rows = pred.rows();
  const double n = static_cast<double>(pred.cols());
  std::vector<bool> is_logit(static_cast<std::size_t>(rows), false);
  for (int r : logit_rows) {
    if (r < 0 || r >= rows) throw Error(ErrorKind::kShapeMismatch, "logit row out of range");
    is_logit[static_cast<std::size_t>(r)] = true;
  }
  const double n_logit = static_cast<double>(logit_rows.size()) * n;
  const double n_reg = static_cast<double>(rows) * n - n_logit;
  LossValue out{0.0, Matrix::Zero(pred.rows(), pred.cols())};
  double reg = 0.0;
  double bce = 0.0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double x = pred(r, c);
      const double t = target(r, c);
      if (is_logit[static_cast<std::size_t>(r)]) {
        bce += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
        out.grad(r, c) = (1.0 / (1.0 + std::exp(-x)) - t) / n_logit;
      } else {
        reg += (x - t) * (x - t);
        out.grad(r, c) = 2.0 * (x - t) / n_reg;
      }
    }
  }
  out.value = (n_reg > 0 ? reg / n_reg : 0.0) + (n_logit > 0 ? bce / n_logit : 0.0);
  return out;
}

LossValue compute_loss(const LossSpec& spec, const Matrix& pred, const Matrix& target) {
  switch (spec.kind) {
    case LossKind::kMse: return mse_loss(pred, target);
    case LossKind::kCrossEntropy: return cross_entropy_loss(pred, target);
    case LossKind::kComposite: return composite_loss(pred, target, spec.logit_rows);
  }
  return mse_loss(pred, target);
}

std::vector<std::vector<Eigen::Index>> epoch_batches(std::size_t n, int batch_size, std::uint64_t seed, int epoch) {
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(epoch) + 1);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t bs = static_cast<std::size_t>(std::max(1, batch_size));
  std::vector<std::vector<Eigen::Index>> out;
  for (std::size_t s = 0; s < n; s += bs) out.emplace_back(order.begin() + s, order.begin() + std::min(n, s + bs));
  return out;
}

Matrix gather_columns(const Matrix& m, const std::vector<Eigen::Index>& cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(cols[i]);
  return out;
}

TrainResult train(DenseNet& net, const Dataset& data, const TrainConfig& config) {
  if (data.size() == 0) throw Error(ErrorKind::kEmptyDataset, "training set has no samples");
  if (data.inputs.rows() != net.input_size() || data.targets.rows() != net.output_size() ||
      data.targets.cols() != data.inputs.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "dataset shape does not match the network");
  }
  TrainResult result;
  Adam adam(net, config.adam);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    const auto batches = epoch_batches(data.size(), config.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Matrix x = gather_columns(data.inputs, batches[b]);
      const Matrix y = gather_columns(data.targets, batches[b]);
      const Tape tape = net.forward_tape(x);
      const LossValue loss = compute_loss(config.loss, tape.output, y);
      check_finite(loss.value, "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      adam.step(net, net.backward(tape, loss.grad));
      total += loss.value * static_cast<double>(batches[b].size());
    }
    result.loss_curve.push_back(total / static_cast<double>(data.size()));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model files: magic, u32 version, u32 entry count, then per entry a
// length-prefixed name, a type byte and the payload. Little-endian.

namespace {

constexpr std::uint32_t kModelVersion = 1;
enum : std::uint8_t { kEntryNet = 0, kEntryVector = 1, kEntryText = 2 };

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error(ErrorKind::kParseError, "model file truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void Bundle::put(const std::string& name, Entry value) {
  for (auto& [n, v] : entries) {
    if (n == name) {
      v = std::move(value);
      return;
    }
  }
  entries.emplace_back(name, std::move(value));
}

bool Bundle::contains(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.first == name) return true;
  }
  return false;
}

const Bundle::Entry& Bundle::at(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.first == name) return e.second;
  }
  throw Error(ErrorKind::kParseError, "model file has no entry '" + name + "'");
}

const DenseNet& Bundle::net(const std::string& name) const {
  const auto* p = std::get_if<DenseNet>(&at(name));
  if (!p) throw Error(ErrorKind::kParseError, "entry '" + name + "' is not a network");
  return *p;
}

const std::vector<double>& Bundle::vec(const std::string& name) const {
  const auto* p = std::get_if<std::vector<double>>(&at(name));
  if (!p) throw Error(ErrorKind::kParseError, "entry '" + name + "' is not a vector");
  return *p;
}

const std::string& Bundle::text(const std::string& name) const {
  const auto* p = std::get_if<std::string>(&at(name));
  if (!p) throw Error(ErrorKind::kParseError, "entry '" + name + "' is not text");
  return *p;
}

std::string serialize_bundle(const Bundle& bundle) {
  Writer w;
  for (const char* c = kModelMagic; *c; ++c) w.u8(static_cast<std::uint8_t>(*c));
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(bundle.entries.size()));
  for (const auto& [name, entry] : bundle.entries) {
    w.bytes(name);
    if (const auto* net = std::get_if<DenseNet>(&entry)) {
      w.u8(kEntryNet);
      w.u32(static_cast<std::uint32_t>(net->layers().size()));
      for (const Layer& l : net->layers()) {
        w.u32(static_cast<std::uint32_t>(l.weight.rows()));
        w.u32(static_cast<std::uint32_t>(l.weight.cols()));
        w.u8(static_cast<std::uint8_t>(l.activation));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
          for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias(r));
      }
    } else if (const auto* v = std::get_if<std::vector<double>>(&entry)) {
      w.u8(kEntryVector);
      w.u64(v->size());
      for (double x : *v) w.f64(x);
    } else {
      w.u8(kEntryText);
      w.bytes(std::get<std::string>(entry));
    }
  }
  return w.take();
}

Bundle deserialize_bundle(const std::string& bytes) {
  const std::string magic(kModelMagic);
  if (bytes.compare(0, magic.size(), magic) != 0) throw Error(ErrorKind::kParseError, "not a MOVNN1 model file");
  const std::string body = bytes.substr(magic.size());
  Reader r(body);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw Error(ErrorKind::kSchemaVersion, "unsupported model version " + std::to_string(version));
  }
  Bundle b;
  const std::uint32_t count = r.u32();
  for (std::uint32_t e = 0; e < count; ++e) {
    std::string name = r.bytes();
    const std::uint8_t type = r.u8();
    if (type == kEntryNet) {
      std::vector<Layer> layers(r.u32());
      for (Layer& l : layers) {
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        const std::uint8_t act = r.u8();
        if (act > 2) throw Error(ErrorKind::kParseError, "unknown activation code");
        l.activation = static_cast<Activation>(act);
        l.weight.resize(rows, cols);
        for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
          for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = r.f64();
        }
        l.bias.resize(rows);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = r.f64();
      }
      b.entries.emplace_back(std::move(name), DenseNet(std::move(layers)));
    } else if (type == kEntryVector) {
      std::vector<double> v(r.u64());
      for (double& x : v) x = r.f64();
      b.entries.emplace_back(std::move(name), std::move(v));
    } else if (type == kEntryText) {
      b.entries.emplace_back(std::move(name), r.bytes());
    } else {
      throw Error(ErrorKind::kParseError, "unknown entry type in model file");
    }
  }
  if (!r.done()) throw Error(ErrorKind::kParseError, "trailing bytes in model file");
  return b;
}

void save_bundle(const Bundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIO, "cannot write model file " + path.string());
  const std::string bytes = serialize_bundle(bundle);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Bundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIO, "cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_bundle(ss.str());
}

}  // namespace movingout::nn
