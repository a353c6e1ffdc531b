#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace keyforge {

enum class ProvenanceLabel {
  HumanComposed,
  HumanTranscribed,
  Automated,
  AttackHistogram,
  AttackStatistical,
  AttackLstm,
};

std::string_view to_string(ProvenanceLabel label) noexcept;
std::optional<ProvenanceLabel> parse_label(std::string_view text) noexcept;

// One key-down event. Timestamps are kept as integer microseconds so corpora
// round-trip exactly; t_ms() is the derived millisecond view.
struct KeyEvent {
  std::uint32_t key = 0;
  std::int64_t t_us = 0;

  double t_ms() const noexcept { return static_cast<double>(t_us) / 1000.0; }
  bool operator==(const KeyEvent&) const = default;
};

struct Trace {
  std::string session_id;
  std::vector<KeyEvent> events;
  ProvenanceLabel label = ProvenanceLabel::HumanComposed;

  bool operator==(const Trace&) const = default;
};

// Build a trace from per-key millisecond intervals. `intervals_ms[j]` separates
// keys[j] and keys[j + 1], so keys must be one longer than the intervals.
Trace make_trace(std::string session_id, ProvenanceLabel label, const std::vector<std::uint32_t>& keys,
                 const std::vector<double>& intervals_ms);

struct IkiSequence {
  std::vector<double> values;
  std::size_t trimmed_count = 0;
};

// Trimmed IKIs together with the key that ends each interval. Used by the
// sequence model and the digraph estimator, which need key alignment.
struct AlignedIkis {
  std::vector<std::uint32_t> prev_keys;
  std::vector<std::uint32_t> keys;
  std::vector<double> values;
  std::size_t trimmed_count = 0;
};

// Outlier rule: drop zero gaps, then drop every IKI above this multiple of the
// pre-trim mean in one pass.
inline constexpr double kOutlierTrimFactor = 10.0;

IkiSequence extract_ikis(const Trace& trace);
AlignedIkis extract_aligned_ikis(const Trace& trace);

bool validate_session(const Trace& trace, std::size_t min_keystrokes);

inline constexpr std::size_t kMinSessionKeystrokes = 50;

std::vector<Trace> read_corpus(std::istream& in);
std::vector<Trace> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::vector<Trace>& traces, std::ostream& out);
void write_corpus(const std::vector<Trace>& traces, const std::filesystem::path& path);

}  // namespace keyforge
