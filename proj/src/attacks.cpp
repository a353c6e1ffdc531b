#include "keyforge/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keyforge/error.hpp"

namespace keyforge::attacks {

namespace {

// Raw successive gaps of a trace in milliseconds.
std::vector<double> raw_intervals(const Trace& trace) {
  std::vector<double> out;
  out.reserve(trace.events.size());
  for (std::size_t i = 1; i < trace.events.size(); ++i) {
    out.push_back(static_cast<double>(trace.events[i].t_us - trace.events[i - 1].t_us) / 1000.0);
  }
  return out;
}

std::vector<std::uint32_t> keys_of(const Trace& trace) {
  std::vector<std::uint32_t> keys;
  keys.reserve(trace.events.size());
  for (const auto& e : trace.events) keys.push_back(e.key);
  return keys;
}

}  // namespace

EmpiricalCdf::EmpiricalCdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.size() < kMinSamples) {
    throw Error(ErrorKind::InsufficientData, "empirical CDF needs >= 100 IKIs, got " + std::to_string(sorted_.size()));
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::quantile(double u) const noexcept {
  const double n = static_cast<double>(sorted_.size());
  auto rank = static_cast<std::size_t>(std::ceil(u * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted_.size());
  return sorted_[rank - 1];
}

double EmpiricalCdf::draw(Rng& rng) const {
  // uniform_real_distribution yields [0, 1); 1 - u maps it onto (0, 1].
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return quantile(1.0 - unit(rng));
}

EmpiricalCdf build_cdf(const std::vector<Trace>& corpus) {
  std::vector<double> pool;
  for (const auto& t : corpus) {
    const auto ikis = extract_ikis(t);
    pool.insert(pool.end(), ikis.values.begin(), ikis.values.end());
  }
  return EmpiricalCdf(std::move(pool));
}

DigraphTable::DigraphTable(std::map<Key, double> corrections) : corrections_(std::move(corrections)) {
  for (const auto& [key, c] : corrections_) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidSpec, "digraph corrections must be finite");
  }
}

double DigraphTable::correction(std::uint32_t from, std::uint32_t to) const noexcept {
  const auto it = corrections_.find({from, to});
  return it == corrections_.end() ? 0.0 : it->second;
}

void StatImpersonationParams::validate() const {
  if (!std::isfinite(mu_human)) throw Error(ErrorKind::InvalidSpec, "mu_human must be finite");
  if (!(sigma_human > 0.0) || !std::isfinite(sigma_human)) {
    throw Error(ErrorKind::InvalidSpec, "sigma_human must be > 0 (corpus IKIs have no spread)");
  }
}

StatImpersonationParams fit_stat_params(const std::vector<Trace>& corpus) {
  if (corpus.empty()) throw Error(ErrorKind::InsufficientData, "fit_stat_params needs at least one session");

  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<DigraphTable::Key, Acc> per_digraph;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& t : corpus) {
    const AlignedIkis ikis = extract_aligned_ikis(t);
    for (std::size_t j = 0; j < ikis.values.size(); ++j) {
      const double v = ikis.values[j];
      sum += v;
      sum_sq += v * v;
      ++n;
      Acc& acc = per_digraph[{ikis.prev_keys[j], ikis.keys[j]}];
      acc.sum += v;
      ++acc.n;
    }
  }
  StatImpersonationParams params;
  params.mu_human = sum / static_cast<double>(n);
  params.sigma_human = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - params.mu_human * params.mu_human));

  std::map<DigraphTable::Key, double> corrections;
  for (const auto& [key, acc] : per_digraph) {
    if (acc.n < kMinDigraphObservations) continue;
    corrections[key] = acc.sum / static_cast<double>(acc.n) - params.mu_human;
  }
  if (!corrections.empty()) {
    double centre = 0.0;
    for (const auto& [key, c] : corrections) centre += c;
    centre /= static_cast<double>(corrections.size());
    for (auto& [key, c] : corrections) c -= centre;
  }
  params.digraphs = DigraphTable(std::move(corrections));
  params.validate();
  return params;
}

std::vector<Trace> attack_histogram(const EmpiricalCdf& cdf, const synth::GeneratorSpec& spec,
                                    std::u32string_view text) {
  spec.validate(synth::GeneratorKind::Histogram);
  std::vector<Trace> out;
  out.reserve(static_cast<std::size_t>(spec.n_sessions));
  for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_sessions); ++i) {
    const std::size_t n = synth::session_length(spec, i);
    Rng rng = make_stream(spec.seed, i, stream::kSession);
    std::vector<double> intervals(n - 1);
    for (double& v : intervals) v = cdf.draw(rng);
    out.push_back(make_trace(synth::session_id("hist", i), ProvenanceLabel::AttackHistogram,
                             synth::session_keys(text, n), intervals));
  }
  return out;
}

std::vector<Trace> attack_statistical(const StatImpersonationParams& params, const synth::GeneratorSpec& spec,
                                      std::u32string_view text) {
  spec.validate(synth::GeneratorKind::Statistical);
  // sigma = 0 is allowed here (degenerate constant attack); only fitted params
  // carry the sigma > 0 invariant.
  if (!(params.sigma_human >= 0.0)) throw Error(ErrorKind::InvalidSpec, "sigma_human must be >= 0");
  std::vector<Trace> out;
  out.reserve(static_cast<std::size_t>(spec.n_sessions));
  for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_sessions); ++i) {
    const std::size_t n = synth::session_length(spec, i);
    Rng rng = make_stream(spec.seed, i, stream::kSession);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto keys = synth::session_keys(text, n);
    std::vector<double> intervals(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double v = params.mu_human + params.sigma_human * normal(rng) +
                       params.digraphs.correction(keys[j], keys[j + 1]);
      intervals[j] = std::max(v, kStatisticalFloorMs);
    }
    out.push_back(make_trace(synth::session_id("stat", i), ProvenanceLabel::AttackStatistical, keys, intervals));
  }
  return out;
}

std::vector<Trace> attack_lstm(const seqmodel::MdnLstmModel& model, const synth::GeneratorSpec& spec,
                               std::u32string_view text) {
  spec.validate(synth::GeneratorKind::Lstm);
  if (!model.trained()) throw Error(ErrorKind::UntrainedModel, "attack_lstm needs a trained model");
  std::vector<Trace> out;
  out.reserve(static_cast<std::size_t>(spec.n_sessions));
  for (std::size_t i = 0; i < static_cast<std::size_t>(spec.n_sessions); ++i) {
    const std::size_t n = synth::session_length(spec, i);
    Rng rng = make_stream(spec.seed, i, stream::kSession);
    const auto keys = synth::session_keys(text, n);
    const std::u32string session_text(keys.begin(), keys.end());
    IkiSequence ikis = seqmodel::sample(model, session_text, spec.temperature, rng);
    out.push_back(make_trace(synth::session_id("lstm", i), ProvenanceLabel::AttackLstm, keys, ikis.values));
  }
  return out;
}

IkiSequence ar1_patch(const IkiSequence& ikis, double alpha) {
  const auto& x = ikis.values;
  if (x.size() < 3) throw Error(ErrorKind::TooShort, "ar1_patch needs >= 3 values");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorKind::OutOfRange, "alpha must lie in [0, 1)");
  if (alpha == 0.0) return ikis;

  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double s = std::sqrt(ss / n);
  if (!(s > 0.0)) return ikis;

  const double innovation = std::sqrt(1.0 - alpha * alpha);
  IkiSequence out;
  out.trimmed_count = ikis.trimmed_count;
  out.values.resize(x.size());
  double prev = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double e = (x[j] - m) / s;
    const double patched = j == 0 ? e : alpha * prev + innovation * e;
    prev = patched;
    out.values[j] = std::max(m + s * patched, kStatisticalFloorMs);
  }
  return out;
}

std::vector<Trace> ar1_patch_corpus(const std::vector<Trace>& corpus, double alpha) {
  std::vector<Trace> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) {
    const IkiSequence patched = ar1_patch(IkiSequence{raw_intervals(t), 0}, alpha);
    out.push_back(make_trace(t.session_id, t.label, keys_of(t), patched.values));
  }
  return out;
}

}  // namespace keyforge::attacks
