#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "keyforge/attacks.hpp"
#include "keyforge/detect.hpp"
#include "keyforge/error.hpp"
#include "keyforge/features.hpp"
#include "keyforge/synth.hpp"

using namespace keyforge;
using namespace keyforge::detect;
using synth::GeneratorKind;
using synth::GeneratorSpec;

namespace {

using V = std::vector<double>;

std::vector<Trace> humans(int n, std::uint64_t seed) {
  return synth::gen_human(synth::default_human_model(), GeneratorSpec::fixed(GeneratorKind::Human, n, 300, seed));
}

std::vector<Trace> automated(int n, std::uint64_t seed) {
  return synth::gen_automated(GeneratorSpec::fixed(GeneratorKind::Automated, n, 300, seed));
}

// Direct count over all pairs.
double brute_auc(const V& pos, const V& neg) {
  double s = 0.0;
  for (double p : pos) {
    for (double q : neg) s += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  }
  return s / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

Dataset random_dataset(std::size_t n, std::size_t d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset data;
  data.cols = d;
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : row) v = g(rng);
    data.add(row, static_cast<int>(i % 2));
  }
  return data;
}

std::vector<std::vector<double>> rows_of(const Dataset& data) {
  std::vector<std::vector<double>> x;
  for (std::size_t i = 0; i < data.rows(); ++i) x.emplace_back(data.row(i).begin(), data.row(i).end());
  return x;
}

// Max relative error of `grad` against central differences of `f`.
template <class F>
double fd_error(F&& f, std::vector<double> params, const std::vector<double>& grad, double h) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f(params);
    params[i] = saved - h;
    const double down = f(params);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-8}));
  }
  return worst;
}

}  // namespace

TEST(Eer, SeparableCase) {
  const auto r = fit_eer_threshold(V{0.9, 1.0}, V{0.1, 0.2});
  EXPECT_DOUBLE_EQ(r.threshold, 0.55);
  EXPECT_EQ(r.far, 0.0);
  EXPECT_EQ(r.frr, 0.0);
}

TEST(Eer, IdenticalSamples) {
  const V s{0.3, 0.5, 0.7, 0.9};
  const auto r = fit_eer_threshold(s, s);
  EXPECT_DOUBLE_EQ(r.far, 0.5);
  EXPECT_DOUBLE_EQ(r.frr, 0.5);
  EXPECT_DOUBLE_EQ(r.threshold, 0.6);
}

TEST(Eer, EmptySample) {
  EXPECT_EQ(kind_of([] { (void)fit_eer_threshold(V{}, V{1}); }), ErrorKind::EmptySample);
}

TEST(Eer, CalibratedCorporaSeparateCompletely) {
  const auto h = features::deltas(humans(500, 42));
  const auto a = features::deltas(automated(500, 42));
  const auto r = fit_eer_threshold(h, a);
  EXPECT_GT(r.threshold, *std::max_element(a.begin(), a.end()));
  EXPECT_LT(r.threshold, *std::min_element(h.begin(), h.end()));
  EXPECT_EQ(r.far, 0.0);
  EXPECT_EQ(r.frr, 0.0);
}

TEST(Auc, Examples) {
  EXPECT_NEAR(auc(V{1, 2, 3}, V{2, 3, 4}), 2.0 / 9.0, 1e-15);
  EXPECT_DOUBLE_EQ(auc(V{5, 6}, V{1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(auc(V{1, 2, 3}, V{1, 2, 3}), 0.5);
  EXPECT_EQ(kind_of([] { (void)auc(V{}, V{1}); }), ErrorKind::EmptySample);
}

TEST(Auc, MatchesPairCountingExactly) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t np = 1 + rng() % 100;
    const std::size_t nn = 1 + rng() % 100;
    // Coarse integer scores create many ties.
    const int levels = 1 + static_cast<int>(rng() % 20);
    V pos(np);
    V neg(nn);
    for (double& v : pos) v = static_cast<double>(rng() % levels);
    for (double& v : neg) v = static_cast<double>(rng() % levels) + (trial % 3 == 0 ? 0.5 : 0.0);
    EXPECT_EQ(auc(pos, neg), brute_auc(pos, neg));
    EXPECT_EQ(roc_auc(pos, neg).auc, brute_auc(pos, neg));
  }
}

TEST(Roc, CurveIsMonotone) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  V pos(150);
  V neg(120);
  for (double& v : pos) v = g(rng) + 0.8;
  for (double& v : neg) v = g(rng);
  const auto curve = roc_auc(pos, neg);
  ASSERT_GE(curve.points.size(), 2u);
  EXPECT_EQ(curve.points.front().fpr, 0.0);
  EXPECT_EQ(curve.points.front().tpr, 0.0);
  EXPECT_EQ(curve.points.back().fpr, 1.0);
  EXPECT_EQ(curve.points.back().tpr, 1.0);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    EXPECT_GE(curve.points[i].fpr, curve.points[i - 1].fpr);
    EXPECT_GE(curve.points[i].tpr, curve.points[i - 1].tpr);
  }
  EXPECT_GE(curve.auc, 0.0);
  EXPECT_LE(curve.auc, 1.0);
}

TEST(ThresholdDetector, IncreasingDeltaNeverFlipsToAi) {
  const ThresholdDetector det;
  EXPECT_DOUBLE_EQ(det.threshold, 0.269);
  EXPECT_FALSE(det.is_human(0.269));
  for (double d = 0.0; d < 2.0; d += 0.001) {
    if (det.is_human(d)) EXPECT_TRUE(det.is_human(d + 0.001));
  }
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  const auto data = random_dataset(40, 5, 3);
  const auto x = rows_of(data);
  std::vector<double> theta{0.3, -0.2, 0.5, 0.1, -0.4, 0.2};
  const double l2 = 0.05;
  auto f = [&](const std::vector<double>& p) {
    return logistic_objective(std::vector<double>(p.begin(), p.end() - 1), p.back(), x, data.labels, l2, nullptr);
  };
  std::vector<double> grad;
  logistic_objective(std::vector<double>(theta.begin(), theta.end() - 1), theta.back(), x, data.labels, l2, &grad);
  ASSERT_EQ(grad.size(), theta.size());
  EXPECT_LT(fd_error(f, theta, grad, 1e-5), 1e-6);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  const auto data = random_dataset(30, 7, 4);
  const auto x = rows_of(data);
  const std::vector<int> sizes{7, 64, 32, 1};
  const auto params = mlp_init(sizes, 42);
  auto f = [&](const std::vector<double>& p) { return mlp_objective(sizes, p, x, data.labels, 1e-4, nullptr); };
  std::vector<double> grad;
  mlp_objective(sizes, params, x, data.labels, 1e-4, &grad);
  ASSERT_EQ(grad.size(), params.size());
  EXPECT_LT(fd_error(f, params, grad, 1e-5), 1e-4);
}

TEST(Training, SeparableTwoPointSet) {
  Dataset data;
  data.cols = 2;
  data.add(V{1.0, 0.0}, 1);
  data.add(V{-1.0, 0.5}, 0);
  const auto lm = train_logistic(data);
  EXPECT_GT(lm.predict_proba(data.row(0)), 0.5);
  EXPECT_LT(lm.predict_proba(data.row(1)), 0.5);
  const auto mm = train_mlp(data);
  EXPECT_GT(mm.predict_proba(data.row(0)), 0.5);
  EXPECT_LT(mm.predict_proba(data.row(1)), 0.5);
}

TEST(Training, SingleClassIsRejected) {
  Dataset data;
  data.cols = 1;
  data.add(V{1.0}, 1);
  data.add(V{2.0}, 1);
  EXPECT_EQ(kind_of([&] { (void)train_logistic(data); }), ErrorKind::SingleClass);
  EXPECT_EQ(kind_of([&] { (void)train_mlp(data); }), ErrorKind::SingleClass);
}

TEST(Training, DeterministicGivenSeed) {
  const auto data = random_dataset(100, 4, 8);
  EXPECT_EQ(train_mlp(data).params, train_mlp(data).params);
  const auto a = train_logistic(data);
  EXPECT_EQ(a.weights, train_logistic(data).weights);
}

TEST(Standardizer, DropsConstantColumns) {
  Dataset data;
  data.cols = 3;
  data.add(V{1.0, 5.0, 2.0}, 1);
  data.add(V{3.0, 5.0, 4.0}, 0);
  const auto s = Standardizer::fit(data);
  EXPECT_EQ(s.kept, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(s.dropped, (std::vector<std::size_t>{1}));
  EXPECT_EQ(s.apply(data.row(0)), (V{-1.0, -1.0}));
}

TEST(CrossValidation, FoldsAreStratified) {
  std::vector<int> labels(103, 0);
  std::fill(labels.begin(), labels.begin() + 41, 1);
  const auto folds = stratified_folds(labels, 5, 42);
  for (int f = 0; f < 5; ++f) {
    int pos = 0;
    int total = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (folds[i] != f) continue;
      ++total;
      pos += labels[i];
    }
    EXPECT_GE(pos, 8);
    EXPECT_LE(pos, 9);
    EXPECT_GE(total, 20);
    EXPECT_LE(total, 21);
  }
  EXPECT_EQ(folds, stratified_folds(labels, 5, 42));
  EXPECT_EQ(kind_of([] { (void)stratified_folds({1, 1, 0, 0, 0}, 3, 1); }), ErrorKind::InsufficientData);
}

TEST(CrossValidation, FoldConstantsComeFromTrainingRowsOnly) {
  const auto data = detector_dataset(humans(60, 5), automated(60, 5));
  const auto folds = stratified_folds(data.labels, 5, 42);
  const auto report = cross_validate(data, ClassifierKind::Logistic, 5, 42);
  for (int f = 0; f < 5; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
    const auto train = data.subset(train_rows);
    const auto model = train_logistic(train);
    for (std::size_t c = 0; c < model.standardizer.kept.size(); ++c) {
      const std::size_t col = model.standardizer.kept[c];
      double m = 0.0;
      for (std::size_t r : train_rows) m += data.row(r)[col];
      m /= static_cast<double>(train_rows.size());
      EXPECT_NEAR(model.standardizer.mean[c], m, 1e-9 * std::max(1.0, std::abs(m)));
    }
    V pos;
    V neg;
    for (std::size_t r : test_rows) (data.labels[r] == 1 ? pos : neg).push_back(model.predict_proba(data.row(r)));
    EXPECT_EQ(report.fold_auc[static_cast<std::size_t>(f)], auc(pos, neg));
  }
}

TEST(CrossValidation, PermutedLabelsGiveChanceAuc) {
  auto data = detector_dataset(humans(200, 6), humans(200, 7));
  std::mt19937_64 rng(1);
  std::shuffle(data.labels.begin(), data.labels.end(), rng);
  const auto lr = cross_validate(data, ClassifierKind::Logistic);
  EXPECT_GE(lr.mean_auc, 0.4);
  EXPECT_LE(lr.mean_auc, 0.6);
  const auto mlp = cross_validate(data, ClassifierKind::Mlp);
  EXPECT_GE(mlp.mean_auc, 0.4);
  EXPECT_LE(mlp.mean_auc, 0.6);
}

TEST(CrossValidation, HumanVersusAutomatedIsPerfect) {
  const auto data = detector_dataset(humans(200, 42), automated(200, 42));
  for (auto kind : {ClassifierKind::Logistic, ClassifierKind::Mlp}) {
    const auto r = cross_validate(data, kind);
    EXPECT_EQ(r.mean_auc, 1.0);
    for (double a : r.fold_accuracy) EXPECT_EQ(a, 1.0);
  }
}

TEST(Evaluate, ThresholdControlsAndConfidence) {
  const auto fitted = fit_eer_threshold(features::deltas(humans(300, 42)), features::deltas(automated(300, 42)));
  const ThresholdDetector det{fitted.threshold};
  const auto autos = evaluate_attack(det, "automated", automated(200, 3));
  EXPECT_EQ(autos.apr, 0.0);
  EXPECT_EQ(autos.mean_confidence, 0.0);
  const auto h = evaluate_attack(det, "human", humans(200, 3));
  EXPECT_EQ(h.apr, 1.0);
  EXPECT_EQ(h.mean_confidence, 1.0);
  EXPECT_EQ(h.n, 200u);
}

TEST(Evaluate, DefaultThresholdAgainstSyntheticAttacks) {
  const ThresholdDetector det;
  const auto human = humans(500, 42);
  const auto hist = attacks::attack_histogram(attacks::build_cdf(human),
                                              GeneratorSpec::fixed(GeneratorKind::Histogram, 300, 300, 7));
  const auto stat = attacks::attack_statistical(attacks::fit_stat_params(human),
                                                GeneratorSpec::fixed(GeneratorKind::Statistical, 300, 300, 7));
  for (const auto& e : evaluate_attacks(det, {{"histogram", hist}, {"statistical", stat}})) EXPECT_EQ(e.apr, 1.0);
  // Uniform(30, 80) has CV 0.2624, just under 0.269, so a minority of
  // automated sessions clear the default threshold.
  const double apr = evaluate_attack(det, "automated", automated(1000, 42)).apr;
  EXPECT_GT(apr, 0.0);
  EXPECT_LT(apr, 0.25);
}

TEST(Evaluate, LogisticAppliedToAttacks) {
  const auto human = humans(400, 42);
  const auto model = train_logistic(detector_dataset(human, automated(400, 42)));
  const auto cdf = attacks::build_cdf(human);
  const auto hist = attacks::attack_histogram(cdf, GeneratorSpec::fixed(GeneratorKind::Histogram, 300, 300, 7));
  const auto params = attacks::fit_stat_params(human);
  const auto stat = attacks::attack_statistical(params, GeneratorSpec::fixed(GeneratorKind::Statistical, 300, 300, 7));
  for (const auto& e : evaluate_attacks(model, {{"histogram", hist}, {"statistical", stat}})) {
    EXPECT_GE(e.apr, 0.99) << e.name;
    EXPECT_GE(e.mean_confidence, 0.97) << e.name;
  }
  EXPECT_LT(evaluate_attack(model, "automated", automated(200, 9)).apr, 0.01);
}

TEST(OperatingSweep, MonotoneAndCopyTypeIdentity) {
  const auto model = synth::default_human_model();
  const auto h = features::deltas(humans(2000, 42));
  const auto copy = features::deltas(
      synth::gen_copy_type(model, GeneratorSpec::fixed(GeneratorKind::CopyType, 2000, 300, 43)));
  const auto cdf = attacks::build_cdf(humans(500, 42));
  const auto hist = features::deltas(
      attacks::attack_histogram(cdf, GeneratorSpec::fixed(GeneratorKind::Histogram, 500, 300, 7)));
  const V thresholds{0.27, 0.5, 0.7, 0.9};
  const auto table = operating_sweep(h, {{"histogram", hist}, {"copytype", copy}}, thresholds);
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_NEAR(table.rows[0].frr, 0.0, 0.005);
  EXPECT_EQ(table.rows[0].apr.at("histogram"), 1.0);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    EXPECT_NEAR(table.rows[i].apr.at("copytype"), 1.0 - table.rows[i].frr, 0.03);
    if (i == 0) continue;
    EXPECT_GE(table.rows[i].frr, table.rows[i - 1].frr);
    for (const auto& [name, apr] : table.rows[i].apr) EXPECT_LE(apr, table.rows[i - 1].apr.at(name));
  }
}

TEST(OperatingSweep, CsvAndErrors) {
  const auto table = operating_sweep(V{0.5, 1.0}, {{"lstm", V{0.2, 0.8}}}, V{0.3, 0.9});
  std::ostringstream out;
  write_operating_csv(table, out);
  EXPECT_EQ(out.str(),
            "threshold,frr,apr_histogram,apr_statistical,apr_lstm,apr_copytype\n"
            "0.3,0,,,0.5,\n"
            "0.9,0.5,,,0,\n");
  EXPECT_EQ(kind_of([] { (void)operating_sweep(V{1}, {}, V{0.5, 0.3}); }), ErrorKind::OutOfRange);
  EXPECT_EQ(kind_of([] { (void)operating_sweep(V{}, {}, V{0.5}); }), ErrorKind::EmptySample);
  EXPECT_EQ(kind_of([] { (void)operating_sweep(V{1}, {{"lstm", V{}}}, V{0.5}); }), ErrorKind::EmptySample);
}

TEST(ModelJson, RoundTrip) {
  const auto data = detector_dataset(humans(40, 1), automated(40, 1));
  const auto lm = train_logistic(data);
  const auto lm2 = logistic_from_json(nlohmann::json::parse(to_json(lm).dump()));
  EXPECT_EQ(lm2.weights, lm.weights);
  EXPECT_EQ(lm2.bias, lm.bias);
  EXPECT_EQ(lm2.standardizer.mean, lm.standardizer.mean);
  MlpConfig c;
  c.epochs = 3;
  const auto mm = train_mlp(data, c);
  const auto mm2 = mlp_from_json(nlohmann::json::parse(to_json(mm).dump()));
  EXPECT_EQ(mm2.params, mm.params);
  EXPECT_EQ(mm2.sizes, mm.sizes);
  for (std::size_t i = 0; i < data.rows(); ++i) EXPECT_EQ(mm2.predict_proba(data.row(i)), mm.predict_proba(data.row(i)));
  EXPECT_EQ(kind_of([&] { (void)mlp_from_json(to_json(lm)); }), ErrorKind::SchemaError);
}
