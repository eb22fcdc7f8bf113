#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/stage.hpp"

namespace mrnet::edf {

// EDF/EDF+ fixed layout: a 256-byte main header followed by 256 bytes of
// per-signal fields, all space-padded ASCII; data records hold 16-bit
// little-endian two's-complement samples, interleaved signal by signal.

inline constexpr std::size_t kMainHeaderBytes = 256;
inline constexpr std::size_t kPerSignalHeaderBytes = 256;
inline constexpr char kTalDuration = '\x15';
inline constexpr char kTalText = '\x14';

struct EdfSignalHeader {
  std::string label;                // 16 bytes
  std::string transducer;           // 80
  std::string physical_dimension;   // 8
  double physical_min = 0.0;        // 8
  double physical_max = 0.0;        // 8
  int digital_min = 0;              // 8
  int digital_max = 0;              // 8
  std::string prefiltering;         // 80
  int samples_per_record = 0;       // 8
  std::string reserved;             // 32

  bool is_annotation_channel() const { return label == "EDF Annotations"; }

  double physical_of(int digital) const {
    return (static_cast<double>(digital) - digital_min) *
               (physical_max - physical_min) /
               (static_cast<double>(digital_max) - digital_min) +
           physical_min;
  }
};

struct EdfHeader {
  std::string version;       // 8 bytes, "0" for EDF
  std::string patient_id;    // 80
  std::string recording_id;  // 80
  std::string start_date;    // 8, dd.mm.yy
  std::string start_time;    // 8, hh.mm.ss
  int header_bytes = 0;      // 8
  std::string reserved;      // 44, "EDF+C" prefix marks EDF+
  int num_records = 0;       // 8
  double record_duration_seconds = 0.0;  // 8
  int num_signals = 0;       // 4
  std::vector<EdfSignalHeader> signals;
};

/// Parsed file: header plus the raw byte payload of each signal,
/// concatenated in record order (2 bytes per stored sample).
struct EdfFile {
  EdfHeader header;
  std::vector<std::vector<std::uint8_t>> signal_bytes;

  std::vector<std::int16_t> digital(std::size_t signal) const {
    const auto& raw = signal_bytes.at(signal);
    std::vector<std::int16_t> out(raw.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<std::int16_t>(
          static_cast<std::uint16_t>(raw[2 * i]) |
          (static_cast<std::uint16_t>(raw[2 * i + 1]) << 8));
    }
    return out;
  }
};

struct Annotation {
  double onset_seconds = 0.0;
  double duration_seconds = 0.0;
  std::string text;

  bool operator==(const Annotation&) const = default;
};

namespace detail {

inline std::string trim(std::string_view raw) {
  std::size_t b = 0, e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  return std::string(raw.substr(b, e - b));
}

inline std::string_view field(std::span<const std::uint8_t> bytes, std::size_t offset,
                              std::size_t width) {
  return std::string_view(reinterpret_cast<const char*>(bytes.data()) + offset, width);
}

inline double parse_number(std::string_view raw, const std::string& what) {
  const std::string s = trim(raw);
  if (s.empty()) throw ContractError("EDF header: empty numeric field " + what);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ContractError("EDF header: non-numeric field " + what + ": '" + s + "'");
  }
}

inline int parse_int(std::string_view raw, const std::string& what) {
  const double v = parse_number(raw, what);
  if (v != std::floor(v)) {
    throw ContractError("EDF header: expected integer field " + what);
  }
  return static_cast<int>(v);
}

/// Space-pad (never truncate) a value into a fixed-width ASCII slot.
inline void put_field(std::string& out, const std::string& value, std::size_t width,
                      const std::string& what) {
  if (value.size() > width) {
    throw ContractError("EDF writer: field " + what + " ('" + value + "') overflows " +
                        std::to_string(width) + " bytes");
  }
  out += value;
  out.append(width - value.size(), ' ');
}

inline std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e7) {
    return std::to_string(static_cast<long long>(v));
  }
  std::string s = std::to_string(v);  // %f with 6 decimals
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace detail

inline EdfHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMainHeaderBytes) {
    throw ContractError("EDF: truncated main header, need bytes [0, 256), have " +
                        std::to_string(bytes.size()));
  }
  using detail::field;
  EdfHeader h;
  h.version = detail::trim(field(bytes, 0, 8));
  h.patient_id = detail::trim(field(bytes, 8, 80));
  h.recording_id = detail::trim(field(bytes, 88, 80));
  h.start_date = detail::trim(field(bytes, 168, 8));
  h.start_time = detail::trim(field(bytes, 176, 8));
  h.header_bytes = detail::parse_int(field(bytes, 184, 8), "header_bytes");
  h.reserved = detail::trim(field(bytes, 192, 44));
  h.num_records = detail::parse_int(field(bytes, 236, 8), "num_records");
  h.record_duration_seconds =
      detail::parse_number(field(bytes, 244, 8), "record_duration");
  h.num_signals = detail::parse_int(field(bytes, 252, 4), "num_signals");

  if (h.num_signals < 1) throw ContractError("EDF: num_signals must be >= 1");
  if (h.num_records < 0) throw ContractError("EDF: negative num_records");
  const std::size_t want =
      kMainHeaderBytes + kPerSignalHeaderBytes * static_cast<std::size_t>(h.num_signals);
  if (static_cast<std::size_t>(h.header_bytes) != want) {
    throw ContractError("EDF: header_bytes " + std::to_string(h.header_bytes) +
                        " != 256*(1+ns) = " + std::to_string(want));
  }
  if (bytes.size() < want) {
    throw ContractError("EDF: truncated signal headers, need bytes [256, " +
                        std::to_string(want) + "), have " + std::to_string(bytes.size()));
  }

  const std::size_t ns = static_cast<std::size_t>(h.num_signals);
  h.signals.resize(ns);
  std::size_t off = kMainHeaderBytes;
  auto each = [&](std::size_t width, auto&& assign) {
    for (std::size_t s = 0; s < ns; ++s) {
      assign(h.signals[s], field(bytes, off, width), s);
      off += width;
    }
  };
  each(16, [](auto& sig, auto f, std::size_t) { sig.label = detail::trim(f); });
  each(80, [](auto& sig, auto f, std::size_t) { sig.transducer = detail::trim(f); });
  each(8, [](auto& sig, auto f, std::size_t) { sig.physical_dimension = detail::trim(f); });
  each(8, [](auto& sig, auto f, std::size_t s) {
    sig.physical_min = detail::parse_number(f, "physical_min[" + std::to_string(s) + "]");
  });
  each(8, [](auto& sig, auto f, std::size_t s) {
    sig.physical_max = detail::parse_number(f, "physical_max[" + std::to_string(s) + "]");
  });
  each(8, [](auto& sig, auto f, std::size_t s) {
    sig.digital_min = detail::parse_int(f, "digital_min[" + std::to_string(s) + "]");
  });
  each(8, [](auto& sig, auto f, std::size_t s) {
    sig.digital_max = detail::parse_int(f, "digital_max[" + std::to_string(s) + "]");
  });
  each(80, [](auto& sig, auto f, std::size_t) { sig.prefiltering = detail::trim(f); });
  each(8, [](auto& sig, auto f, std::size_t s) {
    sig.samples_per_record =
        detail::parse_int(f, "samples_per_record[" + std::to_string(s) + "]");
  });
  each(32, [](auto& sig, auto f, std::size_t) { sig.reserved = detail::trim(f); });

  for (std::size_t s = 0; s < ns; ++s) {
    const auto& sig = h.signals[s];
    if (sig.digital_max <= sig.digital_min) {
      throw ContractError("EDF: signal " + std::to_string(s) +
                          " digital_max must exceed digital_min");
    }
    if (sig.physical_max == sig.physical_min) {
      throw ContractError("EDF: signal " + std::to_string(s) +
                          " physical range is empty");
    }
    if (sig.samples_per_record < 1) {
      throw ContractError("EDF: signal " + std::to_string(s) +
                          " samples_per_record must be >= 1");
    }
  }
  return h;
}

inline EdfFile parse_edf(std::span<const std::uint8_t> bytes) {
  EdfFile file;
  file.header = parse_header(bytes);
  const auto& h = file.header;

  std::size_t record_bytes = 0;
  for (const auto& sig : h.signals) {
    record_bytes += 2 * static_cast<std::size_t>(sig.samples_per_record);
  }
  const std::size_t want =
      static_cast<std::size_t>(h.header_bytes) +
      record_bytes * static_cast<std::size_t>(h.num_records);
  if (bytes.size() < want) {
    throw ContractError("EDF: record payload shorter than declared: need " +
                        std::to_string(want) + " bytes, have " +
                        std::to_string(bytes.size()));
  }

  file.signal_bytes.resize(h.signals.size());
  for (std::size_t s = 0; s < h.signals.size(); ++s) {
    file.signal_bytes[s].reserve(static_cast<std::size_t>(h.num_records) * 2 *
                                 h.signals[s].samples_per_record);
  }
  std::size_t off = static_cast<std::size_t>(h.header_bytes);
  for (int r = 0; r < h.num_records; ++r) {
    for (std::size_t s = 0; s < h.signals.size(); ++s) {
      const std::size_t n = 2 * static_cast<std::size_t>(h.signals[s].samples_per_record);
      file.signal_bytes[s].insert(file.signal_bytes[s].end(), bytes.begin() + off,
                                  bytes.begin() + off + n);
      off += n;
    }
  }
  return file;
}

/// Digital samples scaled to physical units through the affine header map.
inline std::vector<double> read_signal(const EdfFile& file, std::size_t signal) {
  if (signal >= file.header.signals.size()) {
    throw ContractError("read_signal: index " + std::to_string(signal) + " out of range");
  }
  const auto& sig = file.header.signals[signal];
  const auto digital = file.digital(signal);
  std::vector<double> physical(digital.size());
  for (std::size_t i = 0; i < digital.size(); ++i) {
    physical[i] = sig.physical_of(digital[i]);
  }
  return physical;
}

namespace detail {

inline double parse_tal_number(std::string_view s, const std::string& what) {
  const std::string t = trim(s);
  if (t.empty()) throw ContractError("EDF+ TAL: empty " + what);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ContractError("EDF+ TAL: malformed " + what + ": '" + t + "'");
  }
}

/// One TAL chunk: "+onset[\x15duration]\x14text\x14[text\x14...]".
inline void parse_tal(std::string_view tal, std::vector<Annotation>& out) {
  if (tal.empty()) return;
  if (tal[0] != '+' && tal[0] != '-') {
    throw ContractError("EDF+ TAL: must start with '+' or '-'");
  }
  const std::size_t onset_end = tal.find_first_of("\x14\x15");
  if (onset_end == std::string_view::npos) {
    throw ContractError("EDF+ TAL: missing 0x14 separator");
  }
  const double onset = parse_tal_number(tal.substr(0, onset_end), "onset");
  double duration = 0.0;
  std::size_t pos = onset_end;
  if (tal[pos] == kTalDuration) {
    const std::size_t dur_end = tal.find(kTalText, pos + 1);
    if (dur_end == std::string_view::npos) {
      throw ContractError("EDF+ TAL: duration not terminated by 0x14");
    }
    duration = parse_tal_number(tal.substr(pos + 1, dur_end - pos - 1), "duration");
    pos = dur_end;
  }
  // pos sits on the 0x14 that opens the text list; the TAL must close with 0x14.
  if (tal.back() != kTalText) {
    throw ContractError("EDF+ TAL: annotation list not terminated by 0x14");
  }
  ++pos;
  while (pos < tal.size()) {
    const std::size_t text_end = tal.find(kTalText, pos);
    if (text_end == std::string_view::npos) {
      throw ContractError("EDF+ TAL: unterminated annotation text");
    }
    const std::string_view text = tal.substr(pos, text_end - pos);
    if (!text.empty()) {
      out.push_back(Annotation{onset, duration, std::string(text)});
    }
    pos = text_end + 1;
  }
}

}  // namespace detail

/// All annotations of an EDF+ annotation signal, ordered by onset.
/// Timekeeping TALs (empty text) are consumed and dropped.
inline std::vector<Annotation> parse_annotations(std::span<const std::uint8_t> payload) {
  std::vector<Annotation> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= payload.size(); ++i) {
    if (i == payload.size() || payload[i] == 0) {
      if (i > start) {
        detail::parse_tal(
            std::string_view(reinterpret_cast<const char*>(payload.data()) + start,
                             i - start),
            out);
      }
      start = i + 1;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Annotation& a, const Annotation& b) {
    return a.onset_seconds < b.onset_seconds;
  });
  return out;
}

inline std::vector<Annotation> parse_annotations(const EdfFile& file, std::size_t signal) {
  if (signal >= file.header.signals.size()) {
    throw ContractError("parse_annotations: index out of range");
  }
  return parse_annotations(file.signal_bytes[signal]);
}

inline std::optional<std::size_t> find_annotation_signal(const EdfHeader& h) {
  for (std::size_t s = 0; s < h.signals.size(); ++s) {
    if (h.signals[s].is_annotation_channel()) return s;
  }
  return std::nullopt;
}

/// R&K-to-AASM mapping; stages 3 and 4 merge into N3. Unknown or unusable
/// texts map to nullopt (excluded from scoring).
inline std::optional<Stage> map_stage(std::string_view text) {
  if (text == "Sleep stage W") return Stage::Wake;
  if (text == "Sleep stage 1") return Stage::N1;
  if (text == "Sleep stage 2") return Stage::N2;
  if (text == "Sleep stage 3") return Stage::N3;
  if (text == "Sleep stage 4") return Stage::N3;
  if (text == "Sleep stage R") return Stage::Rem;
  return std::nullopt;  // "Sleep stage ?", "Movement time", anything else
}

inline bool is_known_stage_text(std::string_view text) {
  return map_stage(text).has_value() || text == "Sleep stage ?" || text == "Movement time";
}

/// One labelled 30 s epoch in physical units.
struct EpochRecord {
  std::string channel;
  double sample_rate_hz = 0.0;
  std::vector<float> samples;  // 30 s * rate, physical units
  Stage stage = Stage::Wake;
  double onset_seconds = 0.0;
};

inline constexpr int kEpochSeconds = 30;
inline constexpr std::size_t kPaddedLength = 3072;

enum class PadMode { Tail, Center };

/// 3000 -> 3072 with zeros, at the tail by default.
inline std::vector<float> pad_epoch(std::span<const float> samples,
                                    std::size_t target = kPaddedLength,
                                    PadMode mode = PadMode::Tail) {
  if (samples.size() > target) {
    throw ContractError("pad_epoch: epoch longer than pad target");
  }
  std::vector<float> out(target, 0.0f);
  const std::size_t lead =
      mode == PadMode::Tail ? 0 : (target - samples.size()) / 2;
  std::copy(samples.begin(), samples.end(), out.begin() + lead);
  return out;
}

struct EpochingResult {
  std::vector<EpochRecord> epochs;
  std::vector<std::string> warnings;
  std::size_t excluded = 0;
};

/// Slices the signal into annotated 30 s epochs. Excluded stages are
/// dropped; a trailing epoch without full signal coverage is dropped with
/// a warning; order follows annotation onsets.
inline EpochingResult epoch_and_pad(std::span<const double> signal, double sample_rate_hz,
                                    std::span<const Annotation> annotations,
                                    const std::string& channel) {
  const std::size_t epoch_samples =
      static_cast<std::size_t>(std::llround(kEpochSeconds * sample_rate_hz));
  if (epoch_samples == 0) throw ContractError("epoch_and_pad: zero sample rate");

  EpochingResult result;
  for (const auto& ann : annotations) {
    if (!is_known_stage_text(ann.text)) {
      result.warnings.push_back("unknown annotation text '" + ann.text + "' at " +
                                std::to_string(ann.onset_seconds) + "s; excluded");
    }
    const auto stage = map_stage(ann.text);
    const long long n_epochs =
        static_cast<long long>(std::floor(ann.duration_seconds / kEpochSeconds));
    for (long long k = 0; k < n_epochs; ++k) {
      const double onset = ann.onset_seconds + static_cast<double>(k) * kEpochSeconds;
      if (!stage) {
        ++result.excluded;
        continue;
      }
      const auto start =
          static_cast<std::size_t>(std::llround(onset * sample_rate_hz));
      if (start + epoch_samples > signal.size()) {
        result.warnings.push_back("epoch at " + std::to_string(onset) +
                                  "s extends past the signal; dropped");
        continue;
      }
      EpochRecord rec;
      rec.channel = channel;
      rec.sample_rate_hz = sample_rate_hz;
      rec.stage = *stage;
      rec.onset_seconds = onset;
      rec.samples.resize(epoch_samples);
      for (std::size_t i = 0; i < epoch_samples; ++i) {
        rec.samples[i] = static_cast<float>(signal[start + i]);
      }
      result.epochs.push_back(std::move(rec));
    }
  }
  return result;
}

/// Byte-exact EDF/EDF+ serialization of an in-memory file.
inline std::vector<std::uint8_t> write_edf(const EdfFile& file) {
  const auto& h = file.header;
  const std::size_t ns = h.signals.size();
  if (ns == 0) throw ContractError("write_edf: no signals");
  if (static_cast<std::size_t>(h.num_signals) != ns) {
    throw ContractError("write_edf: num_signals does not match signal list");
  }

  std::string out;
  using detail::put_field;
  put_field(out, h.version.empty() ? "0" : h.version, 8, "version");
  put_field(out, h.patient_id, 80, "patient_id");
  put_field(out, h.recording_id, 80, "recording_id");
  put_field(out, h.start_date, 8, "start_date");
  put_field(out, h.start_time, 8, "start_time");
  put_field(out, std::to_string(kMainHeaderBytes + kPerSignalHeaderBytes * ns), 8,
            "header_bytes");
  put_field(out, h.reserved, 44, "reserved");
  put_field(out, std::to_string(h.num_records), 8, "num_records");
  put_field(out, detail::format_number(h.record_duration_seconds), 8, "record_duration");
  put_field(out, std::to_string(ns), 4, "num_signals");

  auto each = [&](std::size_t width, auto&& value, const char* what) {
    for (std::size_t s = 0; s < ns; ++s) {
      put_field(out, value(h.signals[s]), width, what);
    }
  };
  each(16, [](const auto& s) { return s.label; }, "label");
  each(80, [](const auto& s) { return s.transducer; }, "transducer");
  each(8, [](const auto& s) { return s.physical_dimension; }, "physical_dimension");
  each(8, [](const auto& s) { return detail::format_number(s.physical_min); },
       "physical_min");
  each(8, [](const auto& s) { return detail::format_number(s.physical_max); },
       "physical_max");
  each(8, [](const auto& s) { return std::to_string(s.digital_min); }, "digital_min");
  each(8, [](const auto& s) { return std::to_string(s.digital_max); }, "digital_max");
  each(80, [](const auto& s) { return s.prefiltering; }, "prefiltering");
  each(8, [](const auto& s) { return std::to_string(s.samples_per_record); },
       "samples_per_record");
  each(32, [](const auto& s) { return s.reserved; }, "reserved");

  std::vector<std::uint8_t> bytes(out.begin(), out.end());
  for (std::size_t s = 0; s < ns; ++s) {
    const std::size_t want = static_cast<std::size_t>(h.num_records) * 2 *
                             static_cast<std::size_t>(h.signals[s].samples_per_record);
    if (file.signal_bytes[s].size() != want) {
      throw ContractError("write_edf: signal " + std::to_string(s) + " payload is " +
                          std::to_string(file.signal_bytes[s].size()) + " bytes, want " +
                          std::to_string(want));
    }
  }
  for (int r = 0; r < h.num_records; ++r) {
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t n = 2 * static_cast<std::size_t>(h.signals[s].samples_per_record);
      const auto& src = file.signal_bytes[s];
      bytes.insert(bytes.end(), src.begin() + static_cast<std::ptrdiff_t>(r * n),
                   src.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
    }
  }
  return bytes;
}

inline std::vector<std::uint8_t> int16_bytes(std::span<const std::int16_t> samples) {
  std::vector<std::uint8_t> out(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(samples[i]);
    out[2 * i] = static_cast<std::uint8_t>(u & 0xff);
    out[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
  }
  return out;
}

/// TAL byte stream for one data record: timekeeping TAL plus annotations.
inline std::vector<std::uint8_t> make_tal_record(double record_onset,
                                                 std::span<const Annotation> annotations,
                                                 std::size_t record_capacity_bytes) {
  std::string s;
  s += "+" + detail::format_number(record_onset);
  s += kTalText;
  s += kTalText;
  s += '\0';
  for (const auto& ann : annotations) {
    std::string tal = "+" + detail::format_number(ann.onset_seconds);
    tal += kTalDuration;
    tal += detail::format_number(ann.duration_seconds);
    tal += kTalText;
    tal += ann.text;
    tal += kTalText;
    tal += '\0';
    s += tal;
  }
  if (s.size() > record_capacity_bytes) {
    throw ContractError("make_tal_record: annotations exceed record capacity (" +
                        std::to_string(s.size()) + " > " +
                        std::to_string(record_capacity_bytes) + " bytes)");
  }
  std::vector<std::uint8_t> out(s.begin(), s.end());
  out.resize(record_capacity_bytes, 0);
  return out;
}

}  // namespace mrnet::edf
