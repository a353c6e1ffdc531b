#include "keyforge/trace.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "keyforge/error.hpp"

namespace keyforge {

namespace {

constexpr std::pair<ProvenanceLabel, std::string_view> kLabelNames[] = {
    {ProvenanceLabel::HumanComposed, "HUMAN_COMPOSED"},
    {ProvenanceLabel::HumanTranscribed, "HUMAN_TRANSCRIBED"},
    {ProvenanceLabel::Automated, "AUTOMATED"},
    {ProvenanceLabel::AttackHistogram, "ATTACK_HISTOGRAM"},
    {ProvenanceLabel::AttackStatistical, "ATTACK_STATISTICAL"},
    {ProvenanceLabel::AttackLstm, "ATTACK_LSTM"},
};

void require_ordered(const Trace& trace) {
  if (trace.events.size() < 2) {
    throw Error(ErrorKind::TooShort, "trace '" + trace.session_id + "' has " +
                                         std::to_string(trace.events.size()) + " events, need >= 2");
  }
  for (std::size_t i = 1; i < trace.events.size(); ++i) {
    if (trace.events[i].t_us < trace.events[i - 1].t_us) {
      throw Error(ErrorKind::Unordered, "trace '" + trace.session_id + "' decreases at event " +
                                            std::to_string(i));
    }
  }
}

}  // namespace

std::string_view to_string(ProvenanceLabel label) noexcept {
  for (const auto& [value, name] : kLabelNames) {
    if (value == label) return name;
  }
  return "UNKNOWN";
}

std::optional<ProvenanceLabel> parse_label(std::string_view text) noexcept {
  for (const auto& [value, name] : kLabelNames) {
    if (name == text) return value;
  }
  return std::nullopt;
}

Trace make_trace(std::string session_id, ProvenanceLabel label, const std::vector<std::uint32_t>& keys,
                 const std::vector<double>& intervals_ms) {
  if (keys.size() != intervals_ms.size() + 1) {
    throw Error(ErrorKind::InvalidSpec, "make_trace needs keys.size() == intervals.size() + 1");
  }
  Trace trace{std::move(session_id), {}, label};
  trace.events.reserve(keys.size());
  // Round the running sum, not each interval, so rounding error never accumulates.
  double elapsed_ms = 0.0;
  trace.events.push_back({keys[0], 0});
  for (std::size_t j = 0; j < intervals_ms.size(); ++j) {
    elapsed_ms += intervals_ms[j];
    trace.events.push_back({keys[j + 1], std::llround(elapsed_ms * 1000.0)});
  }
  return trace;
}

AlignedIkis extract_aligned_ikis(const Trace& trace) {
  require_ordered(trace);
  const auto& ev = trace.events;
  const std::size_t raw = ev.size() - 1;

  AlignedIkis positive;
  positive.values.reserve(raw);
  for (std::size_t i = 1; i < ev.size(); ++i) {
    const std::int64_t gap = ev[i].t_us - ev[i - 1].t_us;
    if (gap <= 0) continue;
    positive.prev_keys.push_back(ev[i - 1].key);
    positive.keys.push_back(ev[i].key);
    positive.values.push_back(static_cast<double>(gap) / 1000.0);
  }
  if (positive.values.empty()) {
    throw Error(ErrorKind::AllTrimmed, "trace '" + trace.session_id + "' has no positive IKIs");
  }

  const double mean = std::accumulate(positive.values.begin(), positive.values.end(), 0.0) /
                      static_cast<double>(positive.values.size());
  const double cutoff = kOutlierTrimFactor * mean;

  AlignedIkis out;
  out.values.reserve(positive.values.size());
  for (std::size_t j = 0; j < positive.values.size(); ++j) {
    if (positive.values[j] > cutoff) continue;
    out.prev_keys.push_back(positive.prev_keys[j]);
    out.keys.push_back(positive.keys[j]);
    out.values.push_back(positive.values[j]);
  }
  if (out.values.empty()) {
    throw Error(ErrorKind::AllTrimmed, "trace '" + trace.session_id + "' lost every IKI to trimming");
  }
  out.trimmed_count = raw - out.values.size();
  return out;
}

IkiSequence extract_ikis(const Trace& trace) {
  AlignedIkis aligned = extract_aligned_ikis(trace);
  return {std::move(aligned.values), aligned.trimmed_count};
}

bool validate_session(const Trace& trace, std::size_t min_keystrokes) {
  if (trace.events.size() < min_keystrokes) return false;
  for (std::size_t i = 1; i < trace.events.size(); ++i) {
    if (trace.events[i].t_us < trace.events[i - 1].t_us) return false;
  }
  return true;
}

std::vector<Trace> read_corpus(std::istream& in) {
  using nlohmann::json;
  std::vector<Trace> traces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!doc.is_object()) throw ParseError(line_no, "expected a JSON object");

    for (const char* field : {"session_id", "label", "keys", "t_us"}) {
      if (!doc.contains(field)) throw SchemaError(line_no, field, "missing");
    }
    const auto& sid = doc["session_id"];
    const auto& label = doc["label"];
    const auto& keys = doc["keys"];
    const auto& times = doc["t_us"];
    if (!sid.is_string()) throw SchemaError(line_no, "session_id", "must be a string");
    if (!label.is_string()) throw SchemaError(line_no, "label", "must be a string");
    if (!keys.is_array()) throw SchemaError(line_no, "keys", "must be an array");
    if (!times.is_array()) throw SchemaError(line_no, "t_us", "must be an array");
    if (keys.size() != times.size()) {
      throw SchemaError(line_no, "t_us", "length differs from keys");
    }
    const auto parsed_label = parse_label(label.get<std::string>());
    if (!parsed_label) throw SchemaError(line_no, "label", "unknown label '" + label.get<std::string>() + "'");

    Trace trace{sid.get<std::string>(), {}, *parsed_label};
    trace.events.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (!keys[i].is_number_unsigned()) throw SchemaError(line_no, "keys", "entries must be non-negative integers");
      if (!times[i].is_number_integer()) throw SchemaError(line_no, "t_us", "entries must be integers");
      const auto t = times[i].get<std::int64_t>();
      if (t < 0) throw SchemaError(line_no, "t_us", "negative timestamp");
      if (i > 0 && t < trace.events.back().t_us) {
        throw SchemaError(line_no, "t_us", "timestamps decrease at index " + std::to_string(i));
      }
      trace.events.push_back({keys[i].get<std::uint32_t>(), t});
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

std::vector<Trace> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  return read_corpus(in);
}

void write_corpus(const std::vector<Trace>& traces, std::ostream& out) {
  for (const auto& trace : traces) {
    nlohmann::ordered_json doc;
    doc["session_id"] = trace.session_id;
    doc["label"] = std::string(to_string(trace.label));
    auto keys = nlohmann::ordered_json::array();
    auto times = nlohmann::ordered_json::array();
    for (const auto& e : trace.events) {
      keys.push_back(e.key);
      times.push_back(e.t_us);
    }
    doc["keys"] = std::move(keys);
    doc["t_us"] = std::move(times);
    out << doc.dump() << '\n';
  }
}

void write_corpus(const std::vector<Trace>& traces, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  write_corpus(traces, out);
}

}  // namespace keyforge
