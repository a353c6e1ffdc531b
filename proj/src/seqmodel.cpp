#include "keyforge/seqmodel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "keyforge/error.hpp"
#include "keyforge/optim.hpp"

namespace keyforge::seqmodel {

namespace {

using Eigen::MatrixXd;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using CMapT = Eigen::Map<const Mat<Scalar>>;

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr int kFormatVersion = 1;

template <typename Scalar>
CMapT<Scalar> cmat(const Scalar* base, const Tensor& t) {
  const int cols = t.shape.size() > 1 ? t.shape[1] : 1;
  return CMapT<Scalar>(base + t.offset, t.shape[0], cols);
}

std::size_t embedding_index() { return 0; }
std::size_t weight_index(int layer) { return 1 + 2 * static_cast<std::size_t>(layer); }
std::size_t bias_index(int layer) { return 2 + 2 * static_cast<std::size_t>(layer); }
std::size_t head_weight_index(int layers) { return 1 + 2 * static_cast<std::size_t>(layers); }
std::size_t head_bias_index(int layers) { return 2 + 2 * static_cast<std::size_t>(layers); }

template <typename Scalar>
Mat<Scalar> sigmoid(const Mat<Scalar>& a) {
  return (Scalar(1) + (-a.array()).exp()).inverse().matrix();
}

template <typename Scalar>
struct LayerCache {
  Mat<Scalar> z;  // [input; h_prev]
  Mat<Scalar> i, f, g, o, c_prev, tanh_c;
};

template <typename Scalar>
struct StepCache {
  std::vector<LayerCache<Scalar>> layers;
  Mat<Scalar> top;  // top-layer hidden state
  Mat<Scalar> dy;   // loss gradient with respect to the head output
};

template <typename Scalar>
struct State {
  std::vector<Mat<Scalar>> h, c;

  State(int layers, int hidden, int batch)
      : h(static_cast<std::size_t>(layers), Mat<Scalar>::Zero(hidden, batch)),
        c(static_cast<std::size_t>(layers), Mat<Scalar>::Zero(hidden, batch)) {}
};

// Padded batch laid out time-major: element (t, b) lives at t * batch + b.
struct Batch {
  int steps = 0;
  int width = 0;
  std::vector<int> tokens;
  std::vector<double> prev, target, mask;

  std::size_t at(int t, int b) const { return static_cast<std::size_t>(t) * width + b; }
};

Batch make_batch(const std::vector<const Sequence*>& seqs) {
  Batch batch;
  batch.width = static_cast<int>(seqs.size());
  for (const auto* s : seqs) batch.steps = std::max(batch.steps, static_cast<int>(s->target.size()));
  const std::size_t n = static_cast<std::size_t>(batch.steps) * batch.width;
  batch.tokens.assign(n, 0);
  batch.prev.assign(n, 0.0);
  batch.target.assign(n, 0.0);
  batch.mask.assign(n, 0.0);
  for (int b = 0; b < batch.width; ++b) {
    const Sequence& s = *seqs[static_cast<std::size_t>(b)];
    for (int t = 0; t < static_cast<int>(s.target.size()); ++t) {
      const auto k = batch.at(t, b);
      batch.tokens[k] = s.tokens[static_cast<std::size_t>(t)];
      batch.prev[k] = s.prev[static_cast<std::size_t>(t)];
      batch.target[k] = s.target[static_cast<std::size_t>(t)];
      batch.mask[k] = 1.0;
    }
  }
  return batch;
}

template <typename Scalar>
class Network {
 public:
  using M = Mat<Scalar>;

  Network(const MdnLstmModel& model, const Scalar* base) : model_(model), cfg_(model.config()), base_(base) {}

  // Advances `state` by one step and returns the head output (3K x B).
  M step(const Batch& batch, int t, State<Scalar>& state, StepCache<Scalar>* cache) const {
    const auto& tensors = model_.tensors();
    const int E = cfg_.embed_dim;
    const int H = cfg_.hidden_units;
    const int B = batch.width;
    const auto emb = cmat(base_, tensors[embedding_index()]);

    M x(E + 1, B);
    for (int b = 0; b < B; ++b) {
      x.col(b).head(E) = emb.col(batch.tokens[batch.at(t, b)]);
      x(E, b) = static_cast<Scalar>(batch.prev[batch.at(t, b)]);
    }
    if (cache) cache->layers.resize(static_cast<std::size_t>(cfg_.layers));

    for (int l = 0; l < cfg_.layers; ++l) {
      const auto ul = static_cast<std::size_t>(l);
      const auto w = cmat(base_, tensors[weight_index(l)]);
      const auto bias = cmat(base_, tensors[bias_index(l)]);
      M z(x.rows() + H, B);
      z.topRows(x.rows()) = x;
      z.bottomRows(H) = state.h[ul];
      M a = w * z;
      a.colwise() += bias.col(0);
      M i = sigmoid<Scalar>(a.topRows(H));
      M f = sigmoid<Scalar>(a.middleRows(H, H));
      M g = a.middleRows(2 * H, H).array().tanh().matrix();
      M o = sigmoid<Scalar>(a.bottomRows(H));
      M c = (f.array() * state.c[ul].array() + i.array() * g.array()).matrix();
      M tanh_c = c.array().tanh().matrix();
      M h = (o.array() * tanh_c.array()).matrix();
      if (cache) {
        LayerCache<Scalar>& lc = cache->layers[ul];
        lc.z = std::move(z);
        lc.i = std::move(i);
        lc.f = std::move(f);
        lc.g = std::move(g);
        lc.o = std::move(o);
        lc.c_prev = state.c[ul];
        lc.tanh_c = std::move(tanh_c);
      }
      state.c[ul] = std::move(c);
      state.h[ul] = h;
      x = std::move(h);
    }

    const auto wo = cmat(base_, tensors[head_weight_index(cfg_.layers)]);
    const auto bo = cmat(base_, tensors[head_bias_index(cfg_.layers)]);
    M y = wo * x;
    y.colwise() += bo.col(0);
    if (cache) cache->top = std::move(x);
    return y;
  }

  // NLL of column b of the head output; writes d(NLL)/d(y) into dy when given.
  Scalar column_nll(const M& y, int b, Scalar target, Scalar* dy) const {
    using std::exp;
    using std::log;
    const int K = cfg_.mixture_components;
    const Scalar floor = static_cast<Scalar>(cfg_.sigma_floor);
    Scalar max_logit = -std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < K; ++k) max_logit = std::max(max_logit, y(k, b));
    Scalar z = 0;
    for (int k = 0; k < K; ++k) z += exp(y(k, b) - max_logit);
    const Scalar log_z = max_logit + log(z);

    Scalar terms[32];
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < K; ++k) {
      const Scalar sigma = floor + exp(y(2 * K + k, b));
      const Scalar u = (target - y(K + k, b)) / sigma;
      terms[k] = (y(k, b) - log_z) - static_cast<Scalar>(kHalfLog2Pi) - log(sigma) - Scalar(0.5) * u * u;
      best = std::max(best, terms[k]);
    }
    Scalar s = 0;
    for (int k = 0; k < K; ++k) s += exp(terms[k] - best);
    const Scalar lse = best + log(s);

    if (dy) {
      for (int k = 0; k < K; ++k) {
        const Scalar resp = exp(terms[k] - lse);
        const Scalar weight = exp(y(k, b) - log_z);
        const Scalar e_s = exp(y(2 * K + k, b));
        const Scalar sigma = floor + e_s;
        const Scalar u = (target - y(K + k, b)) / sigma;
        dy[k] = weight - resp;
        dy[K + k] = -resp * u / sigma;
        dy[2 * K + k] = resp * (Scalar(1) - u * u) * e_s / sigma;
      }
    }
    return -lse;
  }

  // Forward over steps [t0, t1) from `state`, optionally backpropagating
  // through the window. Gradients accumulate scaled by `grad_scale`.
  Scalar window(const Batch& batch, int t0, int t1, State<Scalar>& state, Scalar* grad, Scalar grad_scale,
                double& valid_steps) const {
    const int K = cfg_.mixture_components;
    const int B = batch.width;
    std::vector<StepCache<Scalar>> caches(grad ? static_cast<std::size_t>(t1 - t0) : 0);
    Scalar total = 0;
    std::vector<Scalar> dy(static_cast<std::size_t>(3 * K));
    for (int t = t0; t < t1; ++t) {
      StepCache<Scalar>* cache = grad ? &caches[static_cast<std::size_t>(t - t0)] : nullptr;
      M y = step(batch, t, state, cache);
      if (cache) cache->dy = M::Zero(3 * K, B);
      for (int b = 0; b < B; ++b) {
        const auto k = batch.at(t, b);
        if (batch.mask[k] == 0.0) continue;
        total += column_nll(y, b, static_cast<Scalar>(batch.target[k]), grad ? dy.data() : nullptr);
        valid_steps += 1.0;
        if (cache) {
          for (int r = 0; r < 3 * K; ++r) cache->dy(r, b) = grad_scale * dy[static_cast<std::size_t>(r)];
        }
      }
    }
    if (grad) backward(batch, t0, caches, grad);
    return total;
  }

 private:
  using MM = Eigen::Map<M>;

  static MM gmat(Scalar* base, const Tensor& t) {
    const int cols = t.shape.size() > 1 ? t.shape[1] : 1;
    return MM(base + t.offset, t.shape[0], cols);
  }

  void backward(const Batch& batch, int t0, const std::vector<StepCache<Scalar>>& caches, Scalar* grad) const {
    const auto& tensors = model_.tensors();
    const int L = cfg_.layers;
    const int E = cfg_.embed_dim;
    const int H = cfg_.hidden_units;
    const int B = batch.width;

    MM g_emb = gmat(grad, tensors[embedding_index()]);
    MM g_wo = gmat(grad, tensors[head_weight_index(L)]);
    MM g_bo = gmat(grad, tensors[head_bias_index(L)]);
    const auto wo = cmat(base_, tensors[head_weight_index(L)]);

    std::vector<M> dh_next(static_cast<std::size_t>(L), M::Zero(H, B));
    std::vector<M> dc_next(static_cast<std::size_t>(L), M::Zero(H, B));

    for (int s = static_cast<int>(caches.size()) - 1; s >= 0; --s) {
      const StepCache<Scalar>& sc = caches[static_cast<std::size_t>(s)];
      g_wo.noalias() += sc.dy * sc.top.transpose();
      g_bo.col(0) += sc.dy.rowwise().sum();
      M dh_above = wo.transpose() * sc.dy;

      for (int l = L - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        const LayerCache<Scalar>& lc = sc.layers[ul];
        const auto w = cmat(base_, tensors[weight_index(l)]);
        MM g_w = gmat(grad, tensors[weight_index(l)]);
        MM g_b = gmat(grad, tensors[bias_index(l)]);

        const M dh = dh_above + dh_next[ul];
        const auto i = lc.i.array();
        const auto f = lc.f.array();
        const auto g = lc.g.array();
        const auto o = lc.o.array();
        const auto tc = lc.tanh_c.array();
        using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
        const Arr dc = dh.array() * o * (Scalar(1) - tc * tc) + dc_next[ul].array();

        M da(4 * H, B);
        da.topRows(H) = (dc * g * i * (Scalar(1) - i)).matrix();
        da.middleRows(H, H) = (dc * lc.c_prev.array() * f * (Scalar(1) - f)).matrix();
        da.middleRows(2 * H, H) = (dc * i * (Scalar(1) - g * g)).matrix();
        da.bottomRows(H) = (dh.array() * tc * o * (Scalar(1) - o)).matrix();
        dc_next[ul] = (dc * f).matrix();

        g_w.noalias() += da * lc.z.transpose();
        g_b.col(0) += da.rowwise().sum();
        const M dz = w.transpose() * da;
        const auto in_rows = dz.rows() - H;
        dh_next[ul] = dz.bottomRows(H);
        if (l > 0) {
          dh_above = dz.topRows(in_rows);
        } else {
          for (int b = 0; b < B; ++b) {
            if (batch.mask[batch.at(t0 + s, b)] == 0.0) continue;
            g_emb.col(batch.tokens[batch.at(t0 + s, b)]) += dz.col(b).head(E);
          }
        }
      }
    }
  }

  const MdnLstmModel& model_;
  const MdnLstmConfig& cfg_;
  const Scalar* base_;
};

using FastNet = Network<double>;

FastNet fast_net(const MdnLstmModel& model) { return FastNet(model, model.parameters().data()); }

Batch batch_of(const std::vector<Sequence>& sequences) {
  std::vector<const Sequence*> group;
  for (const auto& s : sequences) group.push_back(&s);
  return make_batch(group);
}

// Extended-precision loss used as the finite-difference oracle.
long double extended_loss(const MdnLstmModel& model, const std::vector<long double>& params, const Batch& batch) {
  const Network<long double> net(model, params.data());
  State<long double> state(model.config().layers, model.config().hidden_units, batch.width);
  double steps = 0.0;
  const long double total = net.window(batch, 0, batch.steps, state, nullptr, 0.0L, steps);
  return total / static_cast<long double>(steps);
}

std::vector<Sequence> encode_all(const MdnLstmModel& model, const std::vector<Trace>& traces) {
  std::vector<Sequence> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(encode(model, t));
  return out;
}

// Mean NLL per step over `seqs` without gradients, in batches.
double evaluate(const MdnLstmModel& model, const std::vector<Sequence>& seqs) {
  const FastNet net = fast_net(model);
  const auto& cfg = model.config();
  double total = 0.0;
  double steps = 0.0;
  for (std::size_t start = 0; start < seqs.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    std::vector<const Sequence*> group;
    for (std::size_t i = start; i < std::min(seqs.size(), start + cfg.batch_size); ++i) group.push_back(&seqs[i]);
    const Batch batch = make_batch(group);
    State<double> state(cfg.layers, cfg.hidden_units, batch.width);
    total += net.window(batch, 0, batch.steps, state, nullptr, 0.0, steps);
  }
  return steps > 0.0 ? total / steps : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void MdnLstmConfig::validate() const {
  if (embed_dim <= 0 || hidden_units <= 0 || layers <= 0 || mixture_components <= 0 || epochs <= 0 ||
      batch_size <= 0 || bptt_window <= 0) {
    throw Error(ErrorKind::InvalidSpec, "MdnLstmConfig sizes must all be positive");
  }
  if (mixture_components > 21) throw Error(ErrorKind::InvalidSpec, "at most 21 mixture components");
  if (!(learning_rate > 0.0) || !(sigma_floor > 0.0)) {
    throw Error(ErrorKind::InvalidSpec, "learning_rate and sigma_floor must be positive");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw Error(ErrorKind::InvalidSpec, "val_fraction must lie in [0, 1)");
}

MixtureParams mixture_from_raw(std::span<const double> raw, int components, double sigma_floor, double temperature) {
  const auto K = static_cast<std::size_t>(components);
  if (raw.size() != 3 * K) throw Error(ErrorKind::InvalidSpec, "head output must hold 3 * components values");
  MixtureParams p;
  p.weights.resize(K);
  p.means.assign(raw.begin() + static_cast<long>(K), raw.begin() + static_cast<long>(2 * K));
  p.scales.resize(K);
  for (std::size_t k = 0; k < K; ++k) p.scales[k] = sigma_floor + std::exp(raw[2 * K + k]);
  if (temperature <= 0.0) {
    const auto best = std::max_element(raw.begin(), raw.begin() + static_cast<long>(K)) - raw.begin();
    std::fill(p.weights.begin(), p.weights.end(), 0.0);
    p.weights[static_cast<std::size_t>(best)] = 1.0;
    return p;
  }
  const double top = *std::max_element(raw.begin(), raw.begin() + static_cast<long>(K));
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) z += (p.weights[k] = std::exp((raw[k] - top) / temperature));
  for (double& w : p.weights) w /= z;
  return p;
}

double mdn_nll(const MixtureParams& params, double target) {
  const std::size_t K = params.weights.size();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double u = (target - params.means[k]) / params.scales[k];
    terms[k] = std::log(params.weights[k]) - kHalfLog2Pi - std::log(params.scales[k]) - 0.5 * u * u;
    best = std::max(best, terms[k]);
  }
  if (!std::isfinite(best)) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return -(best + std::log(s));
}

std::size_t Tensor::size() const noexcept {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

MdnLstmModel::MdnLstmModel(MdnLstmConfig config, std::vector<std::uint32_t> vocab)
    : config_(config), vocab_(std::move(vocab)) {
  std::sort(vocab_.begin(), vocab_.end());
  vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
  config_.vocab_size = static_cast<int>(vocab_.size()) + 1;
  config_.validate();
  build_layout();

  Rng rng = make_stream(config_.seed, 0, stream::kInit);
  for (const Tensor& t : tensors_) {
    // Embedding rows act on one-hot inputs, so their fan-in is 1.
    double fan_in = 1.0;
    if (t.name != "embedding") {
      const Tensor& weight = t.shape.size() == 2 ? t : tensors_[&t - tensors_.data() - 1];
      fan_in = static_cast<double>(weight.shape[1]);
    }
    std::uniform_real_distribution<double> init(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) params_[t.offset + i] = init(rng);
  }
}

void MdnLstmModel::build_layout() {
  tensors_.clear();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    Tensor t{std::move(name), std::move(shape), offset};
    offset += t.size();
    tensors_.push_back(std::move(t));
  };
  const int H = config_.hidden_units;
  add("embedding", {config_.embed_dim, config_.vocab_size});
  for (int l = 0; l < config_.layers; ++l) {
    const int in = (l == 0 ? config_.embed_dim + 1 : H);
    add("lstm" + std::to_string(l) + ".weight", {4 * H, in + H});
    add("lstm" + std::to_string(l) + ".bias", {4 * H});
  }
  add("mdn.weight", {3 * config_.mixture_components, H});
  add("mdn.bias", {3 * config_.mixture_components});
  params_.assign(offset, 0.0);
}

const Tensor& MdnLstmModel::tensor(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error(ErrorKind::InvalidSpec, "no tensor named '" + std::string(name) + "'");
}

int MdnLstmModel::vocab_index(std::uint32_t key) const noexcept {
  const auto it = std::lower_bound(vocab_.begin(), vocab_.end(), key);
  if (it == vocab_.end() || *it != key) return 0;
  return static_cast<int>(it - vocab_.begin()) + 1;
}

void MdnLstmModel::set_normalization(double mean, double stddev) {
  norm_mean_ = mean;
  norm_std_ = stddev > 1e-12 ? stddev : 1.0;
}

void MdnLstmModel::mark_trained(int epochs_run, double final_nll) {
  trained_ = true;
  epochs_run_ = epochs_run;
  final_nll_ = final_nll;
}

std::string MdnLstmModel::to_json() const {
  nlohmann::ordered_json doc;
  doc["format"] = "keyforge.mdn_lstm";
  doc["version"] = kFormatVersion;
  doc["config"] = {{"embed_dim", config_.embed_dim},
                   {"hidden_units", config_.hidden_units},
                   {"layers", config_.layers},
                   {"mixture_components", config_.mixture_components},
                   {"learning_rate", config_.learning_rate},
                   {"epochs", config_.epochs},
                   {"batch_size", config_.batch_size},
                   {"seed", config_.seed},
                   {"vocab_size", config_.vocab_size},
                   {"bptt_window", config_.bptt_window},
                   {"sigma_floor", config_.sigma_floor},
                   {"val_fraction", config_.val_fraction}};
  doc["vocab"] = vocab_;
  doc["normalization"] = {{"mean", norm_mean_}, {"std", norm_std_}};
  doc["training"] = {{"trained", trained_}, {"epochs_run", epochs_run_}, {"final_nll", final_nll_}};
  auto tensors = nlohmann::ordered_json::array();
  for (const auto& t : tensors_) {
    tensors.push_back({{"name", t.name},
                       {"shape", t.shape},
                       {"data", std::vector<double>(params_.begin() + static_cast<long>(t.offset),
                                                    params_.begin() + static_cast<long>(t.offset + t.size()))}});
  }
  doc["tensors"] = std::move(tensors);
  return doc.dump();
}

MdnLstmModel MdnLstmModel::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, e.what());
  }
  try {
    if (doc.at("format") != "keyforge.mdn_lstm") throw SchemaError(1, "format", "not an MDN-LSTM model file");
    if (doc.at("version").get<int>() != kFormatVersion) throw SchemaError(1, "version", "unsupported version");
    const auto& c = doc.at("config");
    MdnLstmModel m;
    m.config_.embed_dim = c.at("embed_dim");
    m.config_.hidden_units = c.at("hidden_units");
    m.config_.layers = c.at("layers");
    m.config_.mixture_components = c.at("mixture_components");
    m.config_.learning_rate = c.at("learning_rate");
    m.config_.epochs = c.at("epochs");
    m.config_.batch_size = c.at("batch_size");
    m.config_.seed = c.at("seed");
    m.config_.vocab_size = c.at("vocab_size");
    m.config_.bptt_window = c.at("bptt_window");
    m.config_.sigma_floor = c.at("sigma_floor");
    m.config_.val_fraction = c.at("val_fraction");
    m.config_.validate();
    m.vocab_ = doc.at("vocab").get<std::vector<std::uint32_t>>();
    if (static_cast<int>(m.vocab_.size()) + 1 != m.config_.vocab_size) {
      throw SchemaError(1, "vocab", "size disagrees with config.vocab_size");
    }
    m.norm_mean_ = doc.at("normalization").at("mean");
    m.norm_std_ = doc.at("normalization").at("std");
    m.trained_ = doc.at("training").at("trained");
    m.epochs_run_ = doc.at("training").at("epochs_run");
    m.final_nll_ = doc.at("training").at("final_nll");
    m.build_layout();
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != m.tensors_.size()) throw SchemaError(1, "tensors", "unexpected tensor count");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const Tensor& t = m.tensors_[i];
      if (tensors[i].at("name") != t.name) throw SchemaError(1, "tensors", "expected tensor '" + t.name + "'");
      if (tensors[i].at("shape").get<std::vector<int>>() != t.shape) {
        throw SchemaError(1, "tensors", "shape mismatch for '" + t.name + "'");
      }
      const auto data = tensors[i].at("data").get<std::vector<double>>();
      if (data.size() != t.size()) throw SchemaError(1, "tensors", "data size mismatch for '" + t.name + "'");
      std::copy(data.begin(), data.end(), m.params_.begin() + static_cast<long>(t.offset));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(1, "model", e.what());
  }
}

void MdnLstmModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << to_json() << '\n';
}

MdnLstmModel MdnLstmModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

Sequence encode(const MdnLstmModel& model, const Trace& trace) {
  const AlignedIkis ikis = extract_aligned_ikis(trace);
  Sequence s;
  const std::size_t n = ikis.values.size();
  s.tokens.resize(n);
  s.prev.resize(n);
  s.target.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s.tokens[j] = model.vocab_index(ikis.keys[j]);
    s.target[j] = (ikis.values[j] - model.norm_mean()) / model.norm_std();
    s.prev[j] = j == 0 ? 0.0 : s.target[j - 1];
  }
  return s;
}

double loss_and_gradient(const MdnLstmModel& model, const std::vector<Sequence>& sequences, std::vector<double>* grad) {
  if (sequences.empty()) throw Error(ErrorKind::EmptyCorpus, "no sequences");
  std::vector<const Sequence*> group;
  double steps = 0.0;
  for (const auto& s : sequences) {
    group.push_back(&s);
    steps += static_cast<double>(s.target.size());
  }
  if (steps == 0.0) throw Error(ErrorKind::EmptyCorpus, "sequences hold no steps");
  const Batch batch = make_batch(group);
  const FastNet net = fast_net(model);
  State<double> state(model.config().layers, model.config().hidden_units, batch.width);
  if (grad) grad->assign(model.parameters().size(), 0.0);
  double counted = 0.0;
  const double total = net.window(batch, 0, batch.steps, state, grad ? grad->data() : nullptr, 1.0 / steps, counted);
  return total / steps;
}

TrainResult train(MdnLstmConfig config, const std::vector<Trace>& corpus) {
  config.validate();
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "training corpus is empty");

  std::vector<AlignedIkis> aligned;
  aligned.reserve(corpus.size());
  for (const auto& t : corpus) {
    aligned.push_back(extract_aligned_ikis(t));
    if (aligned.back().values.size() < 2) {
      throw Error(ErrorKind::InsufficientData, "session '" + t.session_id + "' has fewer than 2 IKIs");
    }
  }

  // Session-level split with a seeded shuffle.
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = make_stream(config.seed, 0, stream::kSplit);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(corpus.size())));
  if (n_val == 0 && corpus.size() >= 2 && config.val_fraction > 0.0) n_val = 1;
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  const std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());

  std::set<std::uint32_t> keys;
  double sum = 0.0;
  double sum_sq = 0.0;
  double count = 0.0;
  for (std::size_t i : train_idx) {
    for (std::uint32_t k : aligned[i].keys) keys.insert(k);
    for (double v : aligned[i].values) {
      sum += v;
      sum_sq += v * v;
      count += 1.0;
    }
  }
  const double mean = sum / count;
  const double var = std::max(0.0, sum_sq / count - mean * mean);

  MdnLstmModel model(config, std::vector<std::uint32_t>(keys.begin(), keys.end()));
  model.set_normalization(mean, std::sqrt(var));
  const auto& cfg = model.config();

  std::vector<Sequence> train_seqs;
  std::vector<Sequence> val_seqs;
  for (std::size_t i : train_idx) train_seqs.push_back(encode(model, corpus[i]));
  for (std::size_t i : val_idx) val_seqs.push_back(encode(model, corpus[i]));

  Adam adam(cfg.learning_rate);
  std::vector<double> grad(model.parameters().size());
  std::vector<TrainRecord> history;
  long update = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> perm(train_seqs.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(epoch), stream::kShuffle);
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);

    double epoch_nll = 0.0;
    double epoch_steps = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const Sequence*> group;
      for (std::size_t i = start; i < std::min(perm.size(), start + cfg.batch_size); ++i) {
        group.push_back(&train_seqs[perm[i]]);
      }
      const Batch batch = make_batch(group);
      State<double> state(cfg.layers, cfg.hidden_units, batch.width);

      for (int t0 = 0; t0 < batch.steps; t0 += cfg.bptt_window) {
        const int t1 = std::min(batch.steps, t0 + cfg.bptt_window);
        double valid = 0.0;
        for (int t = t0; t < t1; ++t) {
          for (int b = 0; b < batch.width; ++b) valid += batch.mask[batch.at(t, b)];
        }
        if (valid == 0.0) break;

        std::fill(grad.begin(), grad.end(), 0.0);
        const FastNet net = fast_net(model);
        double counted = 0.0;
        const double window_nll = net.window(batch, t0, t1, state, grad.data(), 1.0 / valid, counted);
        ++update;
        if (!std::isfinite(window_nll) ||
            !std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); })) {
          throw Error(ErrorKind::NonFiniteLoss,
                      "epoch " + std::to_string(epoch) + ", update " + std::to_string(update) + ", step " +
                          std::to_string(t0));
        }
        epoch_nll += window_nll;
        epoch_steps += counted;
        adam.step(model.parameters(), grad);
      }
    }

    TrainRecord rec;
    rec.epoch = epoch;
    rec.train_nll = epoch_nll / epoch_steps;
    rec.val_nll = val_seqs.empty() ? evaluate(model, train_seqs) : evaluate(model, val_seqs);
    if (!std::isfinite(rec.val_nll)) {
      throw Error(ErrorKind::NonFiniteLoss, "validation NLL at epoch " + std::to_string(epoch));
    }
    history.push_back(rec);
  }

  model.mark_trained(cfg.epochs, history.back().val_nll);
  return {std::move(model), std::move(history)};
}

IkiSequence sample(const MdnLstmModel& model, std::u32string_view text, double temperature, Rng& rng) {
  const auto& cfg = model.config();
  IkiSequence out;
  if (text.size() < 2) return out;
  const FastNet net = fast_net(model);
  State<double> state(cfg.layers, cfg.hidden_units, 1);
  Batch batch;
  batch.steps = 1;
  batch.width = 1;
  batch.tokens = {0};
  batch.prev = {0.0};
  batch.target = {0.0};
  batch.mask = {1.0};

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  out.values.reserve(text.size() - 1);
  double prev = 0.0;
  for (std::size_t j = 1; j < text.size(); ++j) {
    batch.tokens[0] = model.vocab_index(static_cast<std::uint32_t>(text[j]));
    batch.prev[0] = prev;
    const MatrixXd y = net.step(batch, 0, state, nullptr);
    const MixtureParams mix = mixture_from_raw(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                                               cfg.mixture_components, cfg.sigma_floor, temperature);
    // Always consume both variates so the stream layout is temperature independent.
    const double u = unit(rng);
    const double eps = normal(rng);
    std::size_t k = 0;
    double acc = mix.weights[0];
    while (k + 1 < mix.weights.size() && u >= acc) acc += mix.weights[++k];
    const double z = temperature <= 0.0 ? mix.means[k] : mix.means[k] + mix.scales[k] * eps;
    const double ms = std::clamp(model.norm_mean() + model.norm_std() * z, kSampleMinMs, kSampleMaxMs);
    out.values.push_back(ms);
    prev = (ms - model.norm_mean()) / model.norm_std();
  }
  return out;
}

IkiSequence sample(const MdnLstmModel& model, std::u32string_view text, double temperature, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0, stream::kSession);
  return sample(model, text, temperature, rng);
}

double finite_diff_check(const MdnLstmModel& model, const std::vector<Trace>& corpus_slice, std::size_t n_params,
                         std::uint64_t seed) {
  if (corpus_slice.empty()) throw Error(ErrorKind::EmptyCorpus, "finite_diff_check needs at least one sequence");
  MdnLstmModel probe = model;
  if (!probe.trained()) {
    // Untrained models carry identity normalization; borrow the slice's scale.
    double sum = 0.0, sum_sq = 0.0, n = 0.0;
    for (const auto& t : corpus_slice) {
      for (double v : extract_ikis(t).values) {
        sum += v;
        sum_sq += v * v;
        n += 1.0;
      }
    }
    const double mean = sum / n;
    probe.set_normalization(mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean)));
  }
  const std::vector<Sequence> seqs = encode_all(probe, corpus_slice);

  std::vector<double> analytic;
  loss_and_gradient(probe, seqs, &analytic);

  // The numeric side runs in extended precision: at h = 1e-4 double-precision
  // roundoff alone would reach ~1e-4 relative on the smallest gradients.
  const Batch batch = batch_of(seqs);
  std::vector<long double> wide(probe.parameters().begin(), probe.parameters().end());
  const long double h = 1e-4L;
  Rng rng = make_stream(seed, 0, stream::kGradCheck);
  std::uniform_int_distribution<std::size_t> pick(0, wide.size() - 1);
  double worst = 0.0;
  for (std::size_t n = 0; n < n_params; ++n) {
    const std::size_t i = pick(rng);
    const long double saved = wide[i];
    wide[i] = saved + h;
    const long double up = extended_loss(probe, wide, batch);
    wide[i] = saved - h;
    const long double down = extended_loss(probe, wide, batch);
    wide[i] = saved;
    const double numeric = static_cast<double>((up - down) / (2.0L * h));
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace keyforge::seqmodel
