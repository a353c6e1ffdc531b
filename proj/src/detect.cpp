#include "keyforge/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "keyforge/error.hpp"
#include "keyforge/format.hpp"
#include "keyforge/optim.hpp"
#include "keyforge/random.hpp"

namespace keyforge::detect {

namespace {

using Matrix = std::vector<std::vector<double>>;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy on the logit, stable for large |z|.
double bce(double z, int y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z))); }

void require_classes(const Dataset& data) {
  if (data.rows() == 0) throw Error(ErrorKind::EmptySample, "training set is empty");
  const auto pos = std::count(data.labels.begin(), data.labels.end(), 1);
  if (pos == 0 || pos == static_cast<long>(data.rows())) {
    throw Error(ErrorKind::SingleClass, "training labels contain a single class");
  }
}

Matrix standardized(const Standardizer& s, const Dataset& data) {
  Matrix x;
  x.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) x.push_back(s.apply(data.row(i)));
  return x;
}

double frac_above(const std::vector<double>& sorted, double t) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t mlp_param_count(const std::vector<int>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l] + 1);
  }
  return n;
}

// Forward pass keeping every layer's activations; returns the output logit.
double mlp_forward(const std::vector<int>& sizes, const std::vector<double>& params, std::span<const double> x,
                   Matrix* acts) {
  std::vector<double> a(x.begin(), x.end());
  if (acts) acts->assign(1, a);
  std::size_t off = 0;
  const std::size_t layers = sizes.size() - 1;
  double logit = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(sizes[l]);
    const auto out = static_cast<std::size_t>(sizes[l + 1]);
    const double* w = params.data() + off;
    const double* b = w + out * in;
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += w[o * in + i] * a[i];
      z[o] = s;
    }
    off += out * (in + 1);
    if (l + 1 == layers) {
      logit = z[0];
    } else {
      for (double& v : z) v = std::tanh(v);
      a = std::move(z);
      if (acts) acts->push_back(a);
    }
  }
  return logit;
}

void check_finite(double loss, const std::vector<double>& params, const std::string& where) {
  if (!std::isfinite(loss)) throw Error(ErrorKind::NonFiniteLoss, where + ": loss is not finite");
  for (double p : params) {
    if (!std::isfinite(p)) throw Error(ErrorKind::NonFiniteLoss, where + ": parameters are not finite");
  }
}

nlohmann::json standardizer_json(const Standardizer& s) {
  return {{"kept", s.kept}, {"dropped", s.dropped}, {"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from(const nlohmann::json& j) {
  Standardizer s;
  s.kept = j.at("kept").get<std::vector<std::size_t>>();
  s.dropped = j.at("dropped").get<std::vector<std::size_t>>();
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.kept.size() || s.scale.size() != s.kept.size()) {
    throw Error(ErrorKind::SchemaError, "standardizer arrays disagree in length");
  }
  for (double v : s.scale) {
    if (!(v > 0.0)) throw Error(ErrorKind::SchemaError, "standardizer scales must be > 0");
  }
  return s;
}

void check_header(const nlohmann::json& doc, const char* format) {
  if (!doc.is_object() || doc.value("format", "") != format) {
    throw Error(ErrorKind::SchemaError, std::string("expected a ") + format + " document");
  }
  if (doc.value("version", 0) != 1) throw Error(ErrorKind::SchemaError, "unsupported model version");
}

}  // namespace

void Dataset::add(std::span<const double> features, int label) {
  if (labels.empty() && cols == 0) cols = features.size();
  if (features.size() != cols) throw Error(ErrorKind::InvalidSpec, "feature row width mismatch");
  if (label != 0 && label != 1) throw Error(ErrorKind::InvalidSpec, "labels must be 0 or 1");
  values.insert(values.end(), features.begin(), features.end());
  labels.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.cols = cols;
  for (std::size_t r : rows) out.add(row(r), labels[r]);
  return out;
}

std::vector<double> detector_row(const features::FeatureVector& f) {
  const auto arr = f.detector_features();
  return {arr.begin(), arr.end()};
}

Dataset detector_dataset(const std::vector<Trace>& positives, const std::vector<Trace>& negatives) {
  Dataset data;
  data.cols = features::FeatureVector::kDetectorCount;
  for (const auto& t : positives) data.add(detector_row(features::feature_vector(t)), 1);
  for (const auto& t : negatives) data.add(detector_row(features::feature_vector(t)), 0);
  return data;
}

ThresholdResult fit_eer_threshold(std::span<const double> human, std::span<const double> automated) {
  if (human.empty() || automated.empty()) throw Error(ErrorKind::EmptySample, "EER fit needs both samples");
  const auto h = sorted_copy(human);
  const auto a = sorted_copy(automated);
  std::vector<double> pooled(h);
  pooled.insert(pooled.end(), a.begin(), a.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  auto evaluate = [&](double t) {
    return ThresholdResult{t, frac_above(a, t), 1.0 - frac_above(h, t)};
  };
  if (pooled.size() == 1) return evaluate(pooled[0]);

  ThresholdResult best = evaluate(0.5 * (pooled[0] + pooled[1]));
  for (std::size_t i = 2; i < pooled.size(); ++i) {
    const ThresholdResult r = evaluate(0.5 * (pooled[i - 1] + pooled[i]));
    const double gap = std::fabs(r.far - r.frr);
    const double best_gap = std::fabs(best.far - best.frr);
    if (gap < best_gap || (gap == best_gap && r.far + r.frr < best.far + best.frr)) best = r;
  }
  return best;
}

double auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw Error(ErrorKind::EmptySample, "AUC needs both samples");
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(positives.size() + negatives.size());
  for (double v : positives) pooled.emplace_back(v, 1);
  for (double v : negatives) pooled.emplace_back(v, 0);
  std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  // Sum of (average) ranks of the positives, kept in half-units so it stays exact.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second == 1) rank_sum += avg_rank;
    }
    i = j;
  }
  const auto np = static_cast<double>(positives.size());
  const auto nn = static_cast<double>(negatives.size());
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

RocCurve roc_auc(std::span<const double> positives, std::span<const double> negatives) {
  RocCurve curve;
  curve.auc = auc(positives, negatives);
  const auto p = sorted_copy(positives);
  const auto n = sorted_copy(negatives);
  std::vector<double> cuts(p);
  cuts.insert(cuts.end(), n.begin(), n.end());
  std::sort(cuts.begin(), cuts.end(), std::greater<>());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto at_least = [](const std::vector<double>& sorted, double t) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
  };
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  for (double t : cuts) curve.points.push_back({at_least(n, t), at_least(p, t), t});
  return curve;
}

Standardizer Standardizer::fit(const Dataset& data) {
  if (data.rows() == 0) throw Error(ErrorKind::EmptySample, "cannot standardize an empty set");
  Standardizer s;
  const double n = static_cast<double>(data.rows());
  for (std::size_t c = 0; c < data.cols; ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) m += data.row(r)[c];
    m /= n;
    double ss = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) ss += (data.row(r)[c] - m) * (data.row(r)[c] - m);
    const double sd = std::sqrt(ss / n);
    if (sd > 1e-12 * std::max(1.0, std::fabs(m))) {
      s.kept.push_back(c);
      s.mean.push_back(m);
      s.scale.push_back(sd);
    } else {
      s.dropped.push_back(c);
    }
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  std::vector<double> out(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) out[i] = (row[kept[i]] - mean[i]) / scale[i];
  return out;
}

double logistic_objective(const std::vector<double>& weights, double bias, const Matrix& x, const std::vector<int>& y,
                          double l2, std::vector<double>* grad) {
  const std::size_t d = weights.size();
  const double n = static_cast<double>(x.size());
  if (grad) grad->assign(d + 1, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = bias;
    for (std::size_t j = 0; j < d; ++j) z += weights[j] * x[i][j];
    loss += bce(z, y[i]);
    if (grad) {
      const double r = sigmoid(z) - y[i];
      for (std::size_t j = 0; j < d; ++j) (*grad)[j] += r * x[i][j];
      (*grad)[d] += r;
    }
  }
  loss /= n;
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  loss += 0.5 * l2 * sq;
  if (grad) {
    for (std::size_t j = 0; j <= d; ++j) (*grad)[j] /= n;
    for (std::size_t j = 0; j < d; ++j) (*grad)[j] += l2 * weights[j];
  }
  return loss;
}

double LogisticModel::predict_proba(std::span<const double> row) const {
  const auto x = standardizer.apply(row);
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
  return sigmoid(z);
}

LogisticModel train_logistic(const Dataset& data, const LogisticConfig& config) {
  require_classes(data);
  if (!(config.c > 0.0)) throw Error(ErrorKind::InvalidSpec, "logistic C must be > 0");
  LogisticModel model;
  model.standardizer = Standardizer::fit(data);
  const Matrix x = standardized(model.standardizer, data);
  const std::size_t d = model.standardizer.kept.size();
  const double l2 = 1.0 / (config.c * static_cast<double>(data.rows()));
  model.weights.assign(d, 0.0);

  // Lipschitz bound of the gradient: 1/4 of the trace of the (bias-augmented) Gram matrix / n.
  double trace = 1.0;
  for (const auto& row : x) {
    for (double v : row) trace += v * v / static_cast<double>(x.size());
  }
  const double step = 1.0 / (0.25 * trace + l2);

  std::vector<double> grad;
  for (model.iterations = 0; model.iterations < config.max_iterations; ++model.iterations) {
    const double loss = logistic_objective(model.weights, model.bias, x, data.labels, l2, &grad);
    check_finite(loss, model.weights, "train_logistic");
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    model.gradient_norm = std::sqrt(norm);
    if (model.gradient_norm < config.tolerance) break;
    for (std::size_t j = 0; j < d; ++j) model.weights[j] -= step * grad[j];
    model.bias -= step * grad[d];
  }
  return model;
}

std::vector<double> mlp_init(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2 || sizes.back() != 1) throw Error(ErrorKind::InvalidSpec, "MLP must end in one output unit");
  for (int s : sizes) {
    if (s < 1) throw Error(ErrorKind::InvalidSpec, "MLP layer sizes must be >= 1");
  }
  std::vector<double> params(mlp_param_count(sizes), 0.0);
  Rng rng = make_stream(seed, 0, stream::kInit);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<std::size_t>(sizes[l]);
    const auto out = static_cast<std::size_t>(sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < out * in; ++i) params[off + i] = u(rng);
    off += out * (in + 1);
  }
  return params;
}

double mlp_objective(const std::vector<int>& sizes, const std::vector<double>& params, const Matrix& x,
                     const std::vector<int>& y, double l2, std::vector<double>* grad) {
  const std::size_t layers = sizes.size() - 1;
  const double n = static_cast<double>(x.size());
  if (grad) grad->assign(params.size(), 0.0);
  std::vector<std::size_t> offsets(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l] + 1);
  }
  double loss = 0.0;
  Matrix acts;
  for (std::size_t s = 0; s < x.size(); ++s) {
    const double logit = mlp_forward(sizes, params, x[s], grad ? &acts : nullptr);
    loss += bce(logit, y[s]);
    if (!grad) continue;
    std::vector<double> dz{sigmoid(logit) - y[s]};
    for (std::size_t l = layers; l-- > 0;) {
      const auto in = static_cast<std::size_t>(sizes[l]);
      const auto out = static_cast<std::size_t>(sizes[l + 1]);
      const double* w = params.data() + offsets[l];
      double* gw = grad->data() + offsets[l];
      double* gb = gw + out * in;
      const auto& a = acts[l];
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += dz[o] * a[i];
        gb[o] += dz[o];
      }
      if (l == 0) break;
      std::vector<double> da(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) da[i] += w[o * in + i] * dz[o];
      }
      for (std::size_t i = 0; i < in; ++i) da[i] *= 1.0 - a[i] * a[i];
      dz = std::move(da);
    }
  }
  loss /= n;
  if (grad) {
    for (double& g : *grad) g /= n;
  }
  double sq = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t count = static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l]);
    for (std::size_t i = 0; i < count; ++i) {
      const double w = params[offsets[l] + i];
      sq += w * w;
      if (grad) (*grad)[offsets[l] + i] += l2 * w;
    }
  }
  return loss + 0.5 * l2 * sq;
}

double MlpModel::predict_proba(std::span<const double> row) const {
  return sigmoid(mlp_forward(sizes, params, standardizer.apply(row), nullptr));
}

MlpModel train_mlp(const Dataset& data, const MlpConfig& config) {
  require_classes(data);
  if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0) || !(config.l2 >= 0.0)) {
    throw Error(ErrorKind::InvalidSpec, "MLP needs epochs, batch size, learning rate > 0 and l2 >= 0");
  }
  MlpModel model;
  model.standardizer = Standardizer::fit(data);
  const Matrix x = standardized(model.standardizer, data);
  model.sizes.push_back(static_cast<int>(model.standardizer.kept.size()));
  model.sizes.insert(model.sizes.end(), config.hidden.begin(), config.hidden.end());
  model.sizes.push_back(1);
  model.params = mlp_init(model.sizes, config.seed);

  Adam adam(config.learning_rate);
  std::vector<std::size_t> order(x.size());
  std::vector<double> grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(epoch), stream::kShuffle);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Matrix bx;
      std::vector<int> by;
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(x[order[i]]);
        by.push_back(data.labels[order[i]]);
      }
      const double loss = mlp_objective(model.sizes, model.params, bx, by, config.l2, &grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::NonFiniteLoss, "train_mlp: loss is not finite at epoch " + std::to_string(epoch));
      }
      adam.step(model.params, grad);
    }
  }
  model.final_loss = mlp_objective(model.sizes, model.params, x, data.labels, config.l2, nullptr);
  check_finite(model.final_loss, model.params, "train_mlp");
  return model;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidSpec, "need at least 2 folds");
  std::vector<int> fold(labels.size(), 0);
  // The deal continues across classes so fold sizes differ by at most one.
  std::size_t offset = 0;
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    if (idx.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorKind::InsufficientData, "class " + std::to_string(cls) + " has fewer rows than folds");
    }
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(cls), stream::kFold);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      fold[idx[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    }
    offset += idx.size();
  }
  return fold;
}

CvReport cross_validate(const Dataset& data, ClassifierKind kind, int k, std::uint64_t seed) {
  require_classes(data);
  const auto fold = stratified_folds(data.labels, k, seed);
  CvReport report;
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? test_rows : train_rows).push_back(i);
    const Dataset train = data.subset(train_rows);
    std::vector<double> proba;
    if (kind == ClassifierKind::Logistic) {
      const auto m = train_logistic(train);
      for (std::size_t r : test_rows) proba.push_back(m.predict_proba(data.row(r)));
    } else {
      MlpConfig config;
      config.seed = seed;
      const auto m = train_mlp(train, config);
      for (std::size_t r : test_rows) proba.push_back(m.predict_proba(data.row(r)));
    }
    std::vector<double> pos;
    std::vector<double> neg;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      const int y = data.labels[test_rows[i]];
      (y == 1 ? pos : neg).push_back(proba[i]);
      if ((proba[i] > 0.5 ? 1 : 0) == y) ++correct;
    }
    report.fold_auc.push_back(auc(pos, neg));
    report.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test_rows.size()));
  }
  report.mean_auc = std::accumulate(report.fold_auc.begin(), report.fold_auc.end(), 0.0) / k;
  report.mean_accuracy = std::accumulate(report.fold_accuracy.begin(), report.fold_accuracy.end(), 0.0) / k;
  return report;
}

namespace {

template <typename Score>
AttackEvaluation evaluate_with(const std::string& name, const std::vector<Trace>& corpus, Score score) {
  AttackEvaluation e;
  e.name = name;
  e.n = corpus.size();
  if (corpus.empty()) return e;
  std::size_t human = 0;
  double conf = 0.0;
  for (const auto& t : corpus) {
    const auto [is_human, c] = score(features::feature_vector(t));
    human += is_human ? 1 : 0;
    conf += c;
  }
  e.apr = static_cast<double>(human) / static_cast<double>(corpus.size());
  e.mean_confidence = conf / static_cast<double>(corpus.size());
  return e;
}

}  // namespace

AttackEvaluation evaluate_attack(const ThresholdDetector& detector, const std::string& name,
                                 const std::vector<Trace>& corpus) {
  return evaluate_with(name, corpus, [&](const features::FeatureVector& f) {
    const bool human = detector.is_human(f.delta);
    return std::pair{human, human ? 1.0 : 0.0};
  });
}

AttackEvaluation evaluate_attack(const LogisticModel& model, const std::string& name,
                                 const std::vector<Trace>& corpus) {
  return evaluate_with(name, corpus, [&](const features::FeatureVector& f) {
    const double p = model.predict_proba(detector_row(f));
    return std::pair{p > 0.5, p};
  });
}

AttackEvaluation evaluate_attack(const MlpModel& model, const std::string& name, const std::vector<Trace>& corpus) {
  return evaluate_with(name, corpus, [&](const features::FeatureVector& f) {
    const double p = model.predict_proba(detector_row(f));
    return std::pair{p > 0.5, p};
  });
}

OperatingTable operating_sweep(std::span<const double> human_deltas,
                               const std::map<std::string, std::vector<double>>& attack_deltas,
                               std::span<const double> thresholds) {
  if (human_deltas.empty()) throw Error(ErrorKind::EmptySample, "operating sweep needs human deltas");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorKind::OutOfRange, "thresholds must be sorted ascending");
  }
  const auto h = sorted_copy(human_deltas);
  std::map<std::string, std::vector<double>> attacks;
  for (const auto& [name, d] : attack_deltas) {
    if (d.empty()) throw Error(ErrorKind::EmptySample, "attack '" + name + "' has no sessions");
    attacks[name] = sorted_copy(d);
  }
  OperatingTable table;
  for (double t : thresholds) {
    OperatingRow row;
    row.threshold = t;
    row.frr = 1.0 - frac_above(h, t);
    for (const auto& [name, d] : attacks) row.apr[name] = frac_above(d, t);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_operating_csv(const OperatingTable& table, std::ostream& out) {
  out << "threshold,frr";
  for (const auto& c : kSweepAttackColumns) out << ",apr_" << c;
  out << '\n';
  for (const auto& row : table.rows) {
    out << format_double(row.threshold) << ',' << format_double(row.frr);
    for (const auto& c : kSweepAttackColumns) {
      out << ',';
      const auto it = row.apr.find(c);
      if (it != row.apr.end()) out << format_double(it->second);
    }
    out << '\n';
  }
}

nlohmann::json to_json(const LogisticModel& model) {
  return {{"format", "keyforge.logistic"}, {"version", 1}, {"standardizer", standardizer_json(model.standardizer)},
          {"weights", model.weights}, {"bias", model.bias}, {"iterations", model.iterations},
          {"gradient_norm", model.gradient_norm}};
}

nlohmann::json to_json(const MlpModel& model) {
  return {{"format", "keyforge.mlp"}, {"version", 1}, {"standardizer", standardizer_json(model.standardizer)},
          {"sizes", model.sizes}, {"params", model.params}, {"final_loss", model.final_loss}};
}

nlohmann::json to_json(const CvReport& report) {
  return {{"fold_auc", report.fold_auc}, {"fold_accuracy", report.fold_accuracy}, {"mean_auc", report.mean_auc},
          {"mean_accuracy", report.mean_accuracy}};
}

LogisticModel logistic_from_json(const nlohmann::json& doc) {
  check_header(doc, "keyforge.logistic");
  try {
    LogisticModel m;
    m.standardizer = standardizer_from(doc.at("standardizer"));
    m.weights = doc.at("weights").get<std::vector<double>>();
    m.bias = doc.at("bias").get<double>();
    m.iterations = doc.value("iterations", 0);
    m.gradient_norm = doc.value("gradient_norm", 0.0);
    if (m.weights.size() != m.standardizer.kept.size()) {
      throw Error(ErrorKind::SchemaError, "weight count does not match standardized features");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("logistic model: ") + e.what());
  }
}

MlpModel mlp_from_json(const nlohmann::json& doc) {
  check_header(doc, "keyforge.mlp");
  try {
    MlpModel m;
    m.standardizer = standardizer_from(doc.at("standardizer"));
    m.sizes = doc.at("sizes").get<std::vector<int>>();
    m.params = doc.at("params").get<std::vector<double>>();
    m.final_loss = doc.value("final_loss", 0.0);
    if (m.sizes.size() < 2 || m.sizes.front() != static_cast<int>(m.standardizer.kept.size()) ||
        m.sizes.back() != 1 || m.params.size() != mlp_param_count(m.sizes)) {
      throw Error(ErrorKind::SchemaError, "MLP layer sizes do not match parameters");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("mlp model: ") + e.what());
  }
}

}  // namespace keyforge::detect
