#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "keyforge/random.hpp"
#include "keyforge/seqmodel.hpp"
#include "keyforge/synth.hpp"
#include "keyforge/trace.hpp"

namespace keyforge::attacks {

// Pooled, trimmed human IKIs in ascending order.
class EmpiricalCdf {
 public:
  static constexpr std::size_t kMinSamples = 100;

  explicit EmpiricalCdf(std::vector<double> values);

  // Inverse-CDF draw: the order statistic at 1-based rank ceil(u * n), u in (0, 1].
  double quantile(double u) const noexcept;
  double draw(Rng& rng) const;

  std::span<const double> values() const noexcept { return sorted_; }
  std::size_t size() const noexcept { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

EmpiricalCdf build_cdf(const std::vector<Trace>& corpus);

// Additive per-digraph timing corrections (ms); unseen pairs fall back to 0.
class DigraphTable {
 public:
  using Key = std::pair<std::uint32_t, std::uint32_t>;

  DigraphTable() = default;
  explicit DigraphTable(std::map<Key, double> corrections);

  double correction(std::uint32_t from, std::uint32_t to) const noexcept;
  const std::map<Key, double>& entries() const noexcept { return corrections_; }

 private:
  std::map<Key, double> corrections_;
};

struct StatImpersonationParams {
  double mu_human = 0.0;
  double sigma_human = 0.0;
  DigraphTable digraphs;

  void validate() const;
};

// Minimum observations before a digraph gets its own correction.
inline constexpr std::size_t kMinDigraphObservations = 20;
// Positivity floor for Gaussian draws (ms).
inline constexpr double kStatisticalFloorMs = 1.0;

StatImpersonationParams fit_stat_params(const std::vector<Trace>& corpus);

std::vector<Trace> attack_histogram(const EmpiricalCdf& cdf, const synth::GeneratorSpec& spec,
                                    std::u32string_view text = {});
std::vector<Trace> attack_statistical(const StatImpersonationParams& params, const synth::GeneratorSpec& spec,
                                      std::u32string_view text = {});
std::vector<Trace> attack_lstm(const seqmodel::MdnLstmModel& model, const synth::GeneratorSpec& spec,
                               std::u32string_view text = {});

// Re-imposes lag-1 correlation `alpha` on the standardized sequence while
// keeping its mean and scale; outputs are floored at 1 ms.
IkiSequence ar1_patch(const IkiSequence& ikis, double alpha);

// Applies ar1_patch to every session's intervals and rebuilds the traces.
std::vector<Trace> ar1_patch_corpus(const std::vector<Trace>& corpus, double alpha);

}  // namespace keyforge::attacks
