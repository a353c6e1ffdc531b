#include "keyforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "keyforge/detect.hpp"
#include "keyforge/error.hpp"
#include "keyforge/features.hpp"

namespace keyforge::stats {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance
};

Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, ss / (n - 1.0)};
}

void require_two(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorKind::TooShort, std::string(what) + " needs >= 2 observations per sample");
  }
}

void require_counts(std::int64_t k, std::int64_t n) {
  if (n < 1 || k < 0 || k > n) {
    throw Error(ErrorKind::InvalidCounts,
                "need 0 <= k <= n and n >= 1, got k=" + std::to_string(k) + " n=" + std::to_string(n));
  }
}

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

std::vector<double> histogram(std::span<const double> x, double lo, double hi, int bins) {
  std::vector<double> p(static_cast<std::size_t>(bins), 0.0);
  const double width = hi - lo;
  for (double v : x) {
    int idx = 0;
    if (width > 0.0) idx = static_cast<int>(std::floor((v - lo) / width * bins));
    idx = std::clamp(idx, 0, bins - 1);
    p[static_cast<std::size_t>(idx)] += 1.0;
  }
  for (double& v : p) v /= static_cast<double>(x.size());
  return p;
}

double kl2(const std::vector<double>& p, const std::vector<double>& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log2(p[i] / m[i]);
  }
  return s;
}

}  // namespace

EffectSize cohens_d(std::span<const double> a, std::span<const double> b) {
  require_two(a, b, "cohens_d");
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double pooled = ((n1 - 1.0) * ma.var + (n2 - 1.0) * mb.var) / (n1 + n2 - 2.0);
  if (!(pooled > 0.0)) throw Error(ErrorKind::ZeroPooledVariance, "cohens_d: pooled variance is zero");
  EffectSize e;
  e.n1 = a.size();
  e.n2 = b.size();
  e.d = (ma.mean - mb.mean) / std::sqrt(pooled);
  const double se = std::sqrt((n1 + n2) / (n1 * n2) + e.d * e.d / (2.0 * (n1 + n2)));
  e.ci_low = e.d - 1.96 * se;
  e.ci_high = e.d + 1.96 * se;
  return e;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorKind::OutOfRange, "incomplete_beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::OutOfRange, "incomplete_beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double beta_quantile(double p, double a, double b) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::OutOfRange, "beta_quantile needs p in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (incomplete_beta(a, b, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::OutOfRange, "student_t_two_sided needs df > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  require_two(a, b, "welch_t");
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double va = ma.var / n1;
  const double vb = mb.var / n2;
  WelchResult r;
  const double diff = ma.mean - mb.mean;
  if (!(va + vb > 0.0)) {
    r.df = n1 + n2 - 2.0;
    if (diff == 0.0) return r;
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = kPValueFloor;
    return r;
  }
  r.t = diff / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (n1 - 1.0) + vb * vb / (n2 - 1.0));
  const double p = r.df > kWelchNormalDf ? std::erfc(std::fabs(r.t) / std::sqrt(2.0)) : student_t_two_sided(r.t, r.df);
  r.p = std::clamp(p, kPValueFloor, 1.0);
  return r;
}

Interval clopper_pearson(std::int64_t successes, std::int64_t trials, double level) {
  require_counts(successes, trials);
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::OutOfRange, "confidence level must lie in (0, 1)");
  const double alpha = 1.0 - level;
  const auto k = static_cast<double>(successes);
  const auto n = static_cast<double>(trials);
  Interval ci;
  ci.low = successes == 0 ? 0.0 : beta_quantile(alpha / 2.0, k, n - k + 1.0);
  ci.high = successes == trials ? 1.0 : beta_quantile(1.0 - alpha / 2.0, k + 1.0, n - k);
  return ci;
}

double binomial_test_vs_half(std::int64_t successes, std::int64_t trials) {
  if (trials < 0 || successes < 0 || successes > trials) {
    throw Error(ErrorKind::InvalidCounts, "need 0 <= k <= n");
  }
  if (trials == 0) return 1.0;
  const auto n = static_cast<double>(trials);
  auto log_pmf = [&](std::int64_t i) {
    const auto x = static_cast<double>(i);
    return std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) - n * std::log(2.0);
  };
  // Symmetric null: outcomes no more likely than k are the two tails beyond min(k, n-k).
  const std::int64_t lo = std::min(successes, trials - successes);
  if (2 * lo == trials) return 1.0;
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(lo) + 1);
  for (std::int64_t i = 0; i <= lo; ++i) {
    terms.push_back(log_pmf(i));
    max_term = std::max(max_term, terms.back());
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_term);
  const double log_p = std::log(2.0) + max_term + std::log(s);
  if (log_p < std::log(kPValueFloor)) return kPValueFloor;
  return std::min(1.0, std::exp(log_p));
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySample, "ks_statistic needs non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    best = std::max(best, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return best;
}

DistanceReport distances(std::span<const double> a, std::span<const double> b, int bins) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySample, "distances needs non-empty samples");
  if (bins < 1) throw Error(ErrorKind::OutOfRange, "bin count must be >= 1");
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  DistanceReport r;
  r.bin_count = bins;
  r.bin_low = std::min(*amin, *bmin);
  r.bin_high = std::max(*amax, *bmax);
  const auto p = histogram(a, r.bin_low, r.bin_high, bins);
  const auto q = histogram(b, r.bin_low, r.bin_high, bins);
  std::vector<double> m(p.size());
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = 0.5 * (p[i] + q[i]);
    tv += std::fabs(p[i] - q[i]);
  }
  r.tv = std::min(1.0, 0.5 * tv);
  r.js = std::clamp(0.5 * kl2(p, m) + 0.5 * kl2(q, m), 0.0, 1.0);
  r.ks = ks_statistic(a, b);
  return r;
}

double bayes_error_from_d(double d) {
  if (!(d >= 0.0)) throw Error(ErrorKind::OutOfRange, "bayes_error_from_d needs d >= 0");
  return normal_cdf(-d / 2.0);
}

double dpi_lower_bound(double tv) {
  if (!(tv >= 0.0 && tv <= 1.0)) throw Error(ErrorKind::OutOfRange, "total variation must lie in [0, 1]");
  return 0.5 * (1.0 - tv);
}

NonidentResult nonident_harness(const synth::HumanMotorModel& model, std::size_t n, std::uint64_t seed,
                                const synth::HumanMotorModel* copy_model, int keystrokes) {
  if (n < 200) throw Error(ErrorKind::InvalidSpec, "nonident_harness needs n >= 200 per arm");
  model.validate();
  const synth::HumanMotorModel& other = copy_model ? *copy_model : model;
  other.validate();

  const auto spec = synth::GeneratorSpec::fixed(synth::GeneratorKind::Human, static_cast<int>(n), keystrokes, seed);
  auto copy_spec = spec;
  copy_spec.kind = synth::GeneratorKind::CopyType;
  copy_spec.seed = seed + 1;
  const auto composed = synth::gen_human(model, spec);
  const auto copied = synth::gen_copy_type(other, copy_spec);

  const auto fa = features::extract_all(composed);
  const auto fb = features::extract_all(copied);

  NonidentResult r;
  r.n_per_arm = n;
  double best_gap = -1.0;
  for (std::size_t f = 0; f < features::FeatureVector::kDetectorCount; ++f) {
    std::vector<double> xa;
    std::vector<double> xb;
    for (const auto& s : fa) xa.push_back(s.features.detector_features()[f]);
    for (const auto& s : fb) xb.push_back(s.features.detector_features()[f]);
    const double auc = detect::auc(xa, xb);
    if (std::fabs(auc - 0.5) > best_gap) {
      best_gap = std::fabs(auc - 0.5);
      r.best_feature_auc = auc;
      r.best_feature = std::string(features::kFeatureNames[f]);
    }
  }

  const detect::Dataset data = detect::detector_dataset(composed, copied);
  r.logistic_cv_auc = detect::cross_validate(data, detect::ClassifierKind::Logistic, 5, seed).mean_auc;

  std::vector<double> da;
  std::vector<double> db;
  for (const auto& s : fa) da.push_back(s.features.delta);
  for (const auto& s : fb) db.push_back(s.features.delta);
  r.delta_effect = cohens_d(da, db);
  return r;
}

nlohmann::json to_json(const EffectSize& e) {
  return {{"d", e.d}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"n1", e.n1}, {"n2", e.n2},
          {"ci_method", "normal_approximation"}, {"ci_level", 0.95}};
}

nlohmann::json to_json(const WelchResult& w) {
  return {{"t", w.t}, {"df", w.df}, {"p", w.p}, {"p_floor", kPValueFloor},
          {"p_method", w.df > kWelchNormalDf ? "normal_approximation" : "student_t"}};
}

nlohmann::json to_json(const DistanceReport& r) {
  return {{"js", r.js}, {"tv", r.tv}, {"ks", r.ks}, {"bin_count", r.bin_count},
          {"bin_low", r.bin_low}, {"bin_high", r.bin_high}, {"js_log_base", 2}};
}

nlohmann::json to_json(const NonidentResult& r) {
  return {{"best_feature", r.best_feature}, {"best_feature_auc", r.best_feature_auc},
          {"logistic_cv_auc", r.logistic_cv_auc}, {"delta_effect", to_json(r.delta_effect)},
          {"n_per_arm", r.n_per_arm}};
}

}  // namespace keyforge::stats
