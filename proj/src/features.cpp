#include "keyforge/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "keyforge/error.hpp"
#include "keyforge/format.hpp"

namespace keyforge::features {

namespace {

void require_size(std::span<const double> x, std::size_t n, const char* what) {
  if (x.size() < n) {
    throw Error(ErrorKind::TooShort, std::string(what) + " needs >= " + std::to_string(n) +
                                         " values, got " + std::to_string(x.size()));
  }
}

double raw_mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Population central moment of the given order.
double central_moment(std::span<const double> x, double mean, int order) {
  double acc = 0.0;
  for (double v : x) acc += std::pow(v - mean, order);
  return acc / static_cast<double>(x.size());
}

double population_variance(std::span<const double> x) {
  const double m = raw_mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

}  // namespace

double mean_iki(std::span<const double> ikis) {
  require_size(ikis, 1, "mean_iki");
  return raw_mean(ikis);
}

double var_iki(std::span<const double> ikis) {
  require_size(ikis, 2, "var_iki");
  return population_variance(ikis);
}

double delta(std::span<const double> ikis) {
  require_size(ikis, 2, "delta");
  const double m = raw_mean(ikis);
  if (!(m > 0.0)) throw Error(ErrorKind::ZeroMean, "delta undefined for non-positive mean");
  return std::sqrt(population_variance(ikis)) / m;
}

double pause_density(std::span<const double> ikis) {
  require_size(ikis, 1, "pause_density");
  const auto pauses = std::count_if(ikis.begin(), ikis.end(), [](double v) { return v > kPauseThresholdMs; });
  return static_cast<double>(pauses) / static_cast<double>(ikis.size());
}

double burst_length(std::span<const double> ikis) {
  std::size_t runs = 0;
  std::size_t members = 0;
  bool in_run = false;
  for (double v : ikis) {
    if (v < kBurstThresholdMs) {
      ++members;
      if (!in_run) ++runs;
      in_run = true;
    } else {
      in_run = false;
    }
  }
  return runs == 0 ? 0.0 : static_cast<double>(members) / static_cast<double>(runs);
}

double iki_entropy(std::span<const double> ikis) {
  if (ikis.empty()) return 0.0;
  std::array<std::size_t, kEntropyBins> counts{};
  const double width = kEntropyRangeMs / kEntropyBins;
  for (double v : ikis) {
    auto bin = static_cast<long>(std::floor(v / width));
    bin = std::clamp<long>(bin, 0, kEntropyBins - 1);
    ++counts[static_cast<std::size_t>(bin)];
  }
  const double total = static_cast<double>(ikis.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

double digraph_var(std::span<const double> ikis) {
  require_size(ikis, 3, "digraph_var");
  std::vector<double> diffs(ikis.size() - 1);
  for (std::size_t j = 0; j + 1 < ikis.size(); ++j) diffs[j] = ikis[j + 1] - ikis[j];
  return std::sqrt(population_variance(diffs));
}

double autocorr1(std::span<const double> ikis) {
  require_size(ikis, 3, "autocorr1");
  const double m = raw_mean(ikis);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < ikis.size(); ++j) {
    const double d = ikis[j] - m;
    den += d * d;
    if (j + 1 < ikis.size()) num += d * (ikis[j + 1] - m);
  }
  if (!(den > 0.0)) throw Error(ErrorKind::ZeroVariance, "autocorr1 of a constant sequence");
  return num / den;
}

double skewness(std::span<const double> ikis) {
  require_size(ikis, 2, "skewness");
  const double m = raw_mean(ikis);
  const double m2 = central_moment(ikis, m, 2);
  if (!(m2 > 0.0)) throw Error(ErrorKind::ZeroVariance, "skewness of a constant sequence");
  return central_moment(ikis, m, 3) / std::pow(m2, 1.5);
}

double kurtosis(std::span<const double> ikis) {
  require_size(ikis, 2, "kurtosis");
  const double m = raw_mean(ikis);
  const double m2 = central_moment(ikis, m, 2);
  if (!(m2 > 0.0)) throw Error(ErrorKind::ZeroVariance, "kurtosis of a constant sequence");
  return central_moment(ikis, m, 4) / (m2 * m2) - 3.0;
}

std::array<double, FeatureVector::kCount> FeatureVector::as_array() const noexcept {
  return {delta, mean_iki, var_iki, pause_density, burst_length,
          entropy, digraph_var, autocorr1, skewness, kurtosis};
}

std::array<double, FeatureVector::kDetectorCount> FeatureVector::detector_features() const noexcept {
  return {delta, mean_iki, var_iki, pause_density, burst_length, entropy, digraph_var};
}

FeatureVector from_ikis(std::span<const double> ikis) {
  FeatureVector f;
  f.delta = features::delta(ikis);
  f.mean_iki = features::mean_iki(ikis);
  f.var_iki = features::var_iki(ikis);
  f.pause_density = features::pause_density(ikis);
  f.burst_length = features::burst_length(ikis);
  f.entropy = features::iki_entropy(ikis);
  f.digraph_var = features::digraph_var(ikis);
  if (f.var_iki > 0.0) {
    f.autocorr1 = features::autocorr1(ikis);
    f.skewness = features::skewness(ikis);
    f.kurtosis = features::kurtosis(ikis);
  }
  return f;
}

FeatureVector feature_vector(const Trace& trace) {
  const IkiSequence ikis = extract_ikis(trace);
  return from_ikis(ikis.values);
}

std::vector<SessionFeatures> extract_all(const std::vector<Trace>& traces) {
  std::vector<SessionFeatures> rows;
  rows.reserve(traces.size());
  for (const auto& t : traces) rows.push_back({t.session_id, t.label, feature_vector(t)});
  return rows;
}

std::vector<double> deltas(const std::vector<Trace>& traces) {
  std::vector<double> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(delta(extract_ikis(t).values));
  return out;
}

void write_feature_csv(const std::vector<SessionFeatures>& rows, std::ostream& out) {
  out << "session_id,label";
  for (auto name : kFeatureNames) out << ',' << name;
  out << '\n';
  for (const auto& row : rows) {
    out << row.session_id << ',' << to_string(row.label);
    for (double v : row.features.as_array()) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace keyforge::features
