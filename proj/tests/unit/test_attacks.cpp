#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "keyforge/attacks.hpp"
#include "keyforge/error.hpp"
#include "keyforge/features.hpp"
#include "keyforge/stats.hpp"
#include "keyforge/synth.hpp"

using namespace keyforge;
using namespace keyforge::attacks;
using synth::GeneratorKind;
using synth::GeneratorSpec;

namespace {

std::vector<Trace> human_corpus(int n, int len, std::uint64_t seed, std::u32string_view text = {}) {
  return synth::gen_human(synth::default_human_model(), GeneratorSpec::fixed(GeneratorKind::Human, n, len, seed),
                          text);
}

Trace constant_trace(const std::string& id, std::size_t ikis, double value) {
  return make_trace(id, ProvenanceLabel::HumanComposed, synth::session_keys({}, ikis + 1),
                    std::vector<double>(ikis, value));
}

std::vector<double> pooled_ikis(const std::vector<Trace>& corpus) {
  std::vector<double> out;
  for (const auto& t : corpus) {
    const auto v = extract_ikis(t).values;
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
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

const seqmodel::MdnLstmModel& small_model() {
  static const seqmodel::MdnLstmModel m = [] {
    seqmodel::MdnLstmConfig c;
    c.embed_dim = 4;
    c.hidden_units = 8;
    c.mixture_components = 2;
    c.epochs = 2;
    c.batch_size = 16;
    return seqmodel::train(c, human_corpus(60, 100, 12)).model;
  }();
  return m;
}

}  // namespace

TEST(EmpiricalCdf, ConstantPool) {
  const auto cdf = build_cdf({constant_trace("c", 150, 200.0)});
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(cdf.draw(rng), 200.0);
}

TEST(EmpiricalCdf, TwoValuePool) {
  std::vector<double> pool(50, 100.0);
  pool.insert(pool.end(), 50, 300.0);
  const EmpiricalCdf cdf(pool);
  EXPECT_EQ(cdf.quantile(0.5), 100.0);
  EXPECT_EQ(cdf.quantile(0.5000001), 300.0);
  EXPECT_EQ(cdf.quantile(1.0), 300.0);
  Rng rng(2);
  int low = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double v = cdf.draw(rng);
    ASSERT_TRUE(v == 100.0 || v == 300.0);
    low += v == 100.0 ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(low) / n, 0.5, 0.05);
}

TEST(EmpiricalCdf, ResamplingReproducesPool) {
  const auto cdf = build_cdf(human_corpus(100, 300, 5));
  EXPECT_TRUE(std::is_sorted(cdf.values().begin(), cdf.values().end()));
  Rng rng(3);
  std::vector<double> draws(100000);
  for (double& v : draws) v = cdf.draw(rng);
  const std::vector<double> pool(cdf.values().begin(), cdf.values().end());
  EXPECT_LT(stats::ks_statistic(pool, draws), 0.01);
}

TEST(EmpiricalCdf, TooFewSamples) {
  EXPECT_EQ(kind_of([] { (void)build_cdf({constant_trace("c", 99, 200.0)}); }), ErrorKind::InsufficientData);
}

TEST(HistogramAttack, SingleSessionPoolMatchesThatSession) {
  const auto source = human_corpus(1, 300, 8);
  const auto cdf = build_cdf(source);
  const auto attack = attack_histogram(cdf, GeneratorSpec::fixed(GeneratorKind::Histogram, 20, 300, 9));
  EXPECT_LT(stats::ks_statistic(pooled_ikis(source), pooled_ikis(attack)), 0.05);
}

TEST(HistogramAttack, MarginalMatchesPoolAtTenThousand) {
  const auto source = human_corpus(34, 300, 10);
  const auto pool = pooled_ikis(source);
  ASSERT_GE(pool.size(), 10000u);
  const auto attack = attack_histogram(build_cdf(source), GeneratorSpec::fixed(GeneratorKind::Histogram, 34, 300, 11));
  auto draws = pooled_ikis(attack);
  draws.resize(10000);
  EXPECT_LT(stats::ks_statistic(std::vector<double>(pool.begin(), pool.begin() + 10000), draws), 0.02);
}

TEST(HistogramAttack, BypassesThresholdWithoutCorrelation) {
  const auto cdf = build_cdf(human_corpus(1000, 300, 42));
  const auto attack = attack_histogram(cdf, GeneratorSpec::fixed(GeneratorKind::Histogram, 500, 300, 7));
  ASSERT_EQ(attack.size(), 500u);
  std::vector<double> rho;
  for (const auto& t : attack) {
    EXPECT_EQ(t.label, ProvenanceLabel::AttackHistogram);
    const auto f = features::feature_vector(t);
    EXPECT_GT(f.delta, 0.269);
    rho.push_back(f.autocorr1);
  }
  EXPECT_NEAR(mean_of(rho), 0.0, 0.06);
  EXPECT_EQ(attack, attack_histogram(cdf, GeneratorSpec::fixed(GeneratorKind::Histogram, 500, 300, 7)));
}

TEST(HistogramAttack, KindIsChecked) {
  const auto cdf = build_cdf({constant_trace("c", 150, 200.0)});
  EXPECT_EQ(kind_of([&] { (void)attack_histogram(cdf, GeneratorSpec::fixed(GeneratorKind::Human, 1, 300, 1)); }),
            ErrorKind::InvalidSpec);
}

TEST(StatisticalAttack, GaussianMoments) {
  StatImpersonationParams p{200.0, 100.0, {}};
  const auto attack = attack_statistical(p, GeneratorSpec::fixed(GeneratorKind::Statistical, 200, 501, 3));
  std::vector<double> all;
  for (const auto& t : attack) {
    EXPECT_EQ(t.label, ProvenanceLabel::AttackStatistical);
    const auto ikis = extract_ikis(t).values;
    for (double v : ikis) EXPECT_GE(v, kStatisticalFloorMs);
    all.insert(all.end(), ikis.begin(), ikis.end());
  }
  EXPECT_NEAR(mean_of(all), 200.0, 3.0);
  EXPECT_NEAR(sd_of(all), 100.0, 3.0);
  EXPECT_NEAR(features::delta(all), 0.5, 0.03);
}

TEST(StatisticalAttack, ZeroSigmaIsConstant) {
  StatImpersonationParams p{200.0, 0.0, {}};
  for (const auto& t : attack_statistical(p, GeneratorSpec::fixed(GeneratorKind::Statistical, 3, 100, 1))) {
    EXPECT_EQ(features::feature_vector(t).delta, 0.0);
  }
}

TEST(StatisticalAttack, CenteredDigraphsKeepTheMean) {
  std::map<DigraphTable::Key, double> table;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 30.0);
  const auto alphabet = synth::printable_alphabet();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < alphabet.size(); ++i) {
    const double c = n(rng);
    table[{alphabet[i], alphabet[i + 1]}] = c;
    total += c;
  }
  const double shift = total / static_cast<double>(table.size());
  double check = 0.0;
  for (auto& [k, c] : table) {
    c -= shift;
    check += c;
  }
  ASSERT_NEAR(check, 0.0, 1e-9);
  StatImpersonationParams p{200.0, 60.0, DigraphTable(table)};
  const auto attack = attack_statistical(p, GeneratorSpec::fixed(GeneratorKind::Statistical, 200, 300, 5));
  EXPECT_NEAR(mean_of(pooled_ikis(attack)), 200.0, 3.0);
}

TEST(StatisticalAttack, BypassesThreshold) {
  const auto params = fit_stat_params(human_corpus(1000, 300, 42));
  const auto attack = attack_statistical(params, GeneratorSpec::fixed(GeneratorKind::Statistical, 500, 300, 7));
  for (const auto& t : attack) EXPECT_GT(features::feature_vector(t).delta, 0.269);
  EXPECT_EQ(attack, attack_statistical(params, GeneratorSpec::fixed(GeneratorKind::Statistical, 500, 300, 7)));
}

TEST(FitStatParams, ConstantCorpusIsRejected) {
  EXPECT_EQ(kind_of([] { (void)fit_stat_params({constant_trace("a", 100, 200.0), constant_trace("b", 100, 200.0)}); }),
            ErrorKind::InvalidSpec);
  EXPECT_EQ(kind_of([] { (void)fit_stat_params({}); }), ErrorKind::InsufficientData);
}

TEST(FitStatParams, RecoversPlantedDigraphOffset) {
  const std::u32string text = U"the quick brown fox jumps over the lazy dog ";
  auto corpus = human_corpus(400, 300, 21, text);
  // Slow every transition except t->h by 50 ms, so t->h is 50 ms faster.
  for (auto& t : corpus) {
    std::vector<std::uint32_t> keys;
    std::vector<double> gaps;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      keys.push_back(t.events[i].key);
      if (i == 0) continue;
      double g = static_cast<double>(t.events[i].t_us - t.events[i - 1].t_us) / 1000.0;
      if (!(t.events[i - 1].key == 't' && t.events[i].key == 'h')) g += 50.0;
      gaps.push_back(g);
    }
    t = make_trace(t.session_id, t.label, keys, gaps);
  }
  const auto p = fit_stat_params(corpus);
  EXPECT_NEAR(p.digraphs.correction('t', 'h'), -50.0, 5.0);
  EXPECT_EQ(p.digraphs.correction('#', '@'), 0.0);
  double sum = 0.0;
  for (const auto& [k, c] : p.digraphs.entries()) sum += c;
  EXPECT_NEAR(sum, 0.0, 1e-6);
}

TEST(FitStatParams, SplitHalvesAgree) {
  const auto corpus = human_corpus(1000, 300, 42);
  const std::vector<Trace> a(corpus.begin(), corpus.begin() + 500);
  const std::vector<Trace> b(corpus.begin() + 500, corpus.end());
  // Sessions are the independent units, so the standard error comes from session means.
  auto se_of_mean = [](const std::vector<Trace>& half) {
    std::vector<double> means;
    for (const auto& t : half) means.push_back(mean_of(extract_ikis(t).values));
    return sd_of(means) / std::sqrt(static_cast<double>(means.size()));
  };
  const auto pa = fit_stat_params(a);
  const auto pb = fit_stat_params(b);
  const double se = std::hypot(se_of_mean(a), se_of_mean(b));
  EXPECT_LE(std::abs(pa.mu_human - pb.mu_human), 2.0 * se);
  EXPECT_NEAR(pa.sigma_human / pb.sigma_human, 1.0, 0.05);
}

TEST(LstmAttack, ClipLabelsAndDeterminism) {
  const auto spec = GeneratorSpec::fixed(GeneratorKind::Lstm, 20, 150, 3);
  const auto attack = attack_lstm(small_model(), spec);
  ASSERT_EQ(attack.size(), 20u);
  for (const auto& t : attack) {
    EXPECT_EQ(t.label, ProvenanceLabel::AttackLstm);
    EXPECT_EQ(t.events.size(), 150u);
    for (std::size_t i = 1; i < t.events.size(); ++i) {
      const double g = static_cast<double>(t.events[i].t_us - t.events[i - 1].t_us) / 1000.0;
      EXPECT_GE(g, seqmodel::kSampleMinMs - 1e-3);
      EXPECT_LE(g, seqmodel::kSampleMaxMs + 1e-3);
    }
  }
  EXPECT_EQ(attack, attack_lstm(small_model(), spec));
}

TEST(LstmAttack, UntrainedModelIsRejected) {
  const seqmodel::MdnLstmModel fresh(seqmodel::MdnLstmConfig{}, {'a'});
  EXPECT_EQ(kind_of([&] { (void)attack_lstm(fresh, GeneratorSpec::fixed(GeneratorKind::Lstm, 1, 100, 1)); }),
            ErrorKind::UntrainedModel);
  EXPECT_EQ(kind_of([&] { (void)attack_lstm(small_model(), GeneratorSpec::fixed(GeneratorKind::Human, 1, 100, 1)); }),
            ErrorKind::InvalidSpec);
}

TEST(Ar1Patch, ZeroAlphaIsIdentity) {
  IkiSequence s{{100, 250, 90, 600, 130}, 2};
  const auto out = ar1_patch(s, 0.0);
  EXPECT_EQ(out.values, s.values);
  EXPECT_EQ(out.trimmed_count, 2u);
}

TEST(Ar1Patch, ImposesCorrelationAndKeepsMoments) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(200.0, 40.0);
  IkiSequence s;
  for (int i = 0; i < 100000; ++i) s.values.push_back(n(rng));
  const auto out = ar1_patch(s, 0.3);
  const double rho = features::autocorr1(out.values);
  EXPECT_GE(rho, 0.22);
  EXPECT_LE(rho, 0.38);
  EXPECT_NEAR(mean_of(out.values) / mean_of(s.values), 1.0, 0.02);
  EXPECT_NEAR(sd_of(out.values) / sd_of(s.values), 1.0, 0.02);
  EXPECT_NEAR(features::autocorr1(s.values), 0.0, 0.02);
}

TEST(Ar1Patch, OutputsRespectFloor) {
  IkiSequence s{{1, 1, 1, 1, 1000, 1, 1, 1, 1000, 1}, 0};
  for (double v : ar1_patch(s, 0.9).values) EXPECT_GE(v, 1.0);
}

TEST(Ar1Patch, PatchedHistogramCorpusRegainsCorrelation) {
  const auto cdf = build_cdf(human_corpus(200, 300, 42));
  const auto attack = attack_histogram(cdf, GeneratorSpec::fixed(GeneratorKind::Histogram, 200, 300, 7));
  const auto patched = ar1_patch_corpus(attack, 0.3);
  ASSERT_EQ(patched.size(), attack.size());
  std::vector<double> before;
  std::vector<double> after;
  for (std::size_t i = 0; i < attack.size(); ++i) {
    EXPECT_EQ(patched[i].label, attack[i].label);
    before.push_back(features::feature_vector(attack[i]).autocorr1);
    after.push_back(features::feature_vector(patched[i]).autocorr1);
  }
  EXPECT_LT(std::abs(median_of(before)), 0.06);
  EXPECT_GT(median_of(after), 0.15);
}

TEST(Ar1Patch, Errors) {
  EXPECT_EQ(kind_of([] { (void)ar1_patch(IkiSequence{{1, 2}, 0}, 0.3); }), ErrorKind::TooShort);
  EXPECT_EQ(kind_of([] { (void)ar1_patch(IkiSequence{{1, 2, 3}, 0}, 1.0); }), ErrorKind::OutOfRange);
  EXPECT_EQ(kind_of([] { (void)ar1_patch(IkiSequence{{1, 2, 3}, 0}, -0.1); }), ErrorKind::OutOfRange);
}
