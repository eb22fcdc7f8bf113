// Shared EDF fixture builders for tests.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mrnet/edf.hpp"

namespace fixtures {

using mrnet::edf::Annotation;
using mrnet::edf::EdfFile;
using mrnet::edf::EdfHeader;
using mrnet::edf::EdfSignalHeader;

inline EdfSignalHeader eeg_signal(const std::string& label, int samples_per_record) {
  EdfSignalHeader sig;
  sig.label = label;
  sig.transducer = "AgAgCl electrode";
  sig.physical_dimension = "uV";
  sig.physical_min = -200.0;
  sig.physical_max = 200.0;
  sig.digital_min = -2048;
  sig.digital_max = 2047;
  sig.prefiltering = "HP:0.5Hz LP:40Hz";
  sig.samples_per_record = samples_per_record;
  return sig;
}

/// Two-channel PSG: 100 Hz, 30 s records. Channel 0 is a ramp, channel 1
/// a square-ish wave, both inside the digital range.
inline EdfFile make_psg(int num_records, int sample_rate = 100) {
  const int spr = 30 * sample_rate;
  EdfFile file;
  file.header.version = "0";
  file.header.patient_id = "X F X fixture";
  file.header.recording_id = "Startdate 01-JAN-2000 X X X";
  file.header.start_date = "01.01.00";
  file.header.start_time = "22.00.00";
  file.header.reserved = "";
  file.header.num_records = num_records;
  file.header.record_duration_seconds = 30.0;
  file.header.num_signals = 2;
  file.header.signals = {eeg_signal("EEG Fpz-Cz", spr), eeg_signal("EEG Pz-Oz", spr)};
  file.header.header_bytes = 256 * 3;

  std::vector<std::int16_t> a(static_cast<std::size_t>(num_records) * spr);
  std::vector<std::int16_t> b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<std::int16_t>((i % 4001) - 2000);
    b[i] = static_cast<std::int16_t>(((i / 50) % 2) ? 1000 : -1000);
  }
  file.signal_bytes = {mrnet::edf::int16_bytes(a), mrnet::edf::int16_bytes(b)};
  return file;
}

/// EDF+ hypnogram: a single annotation channel carrying the given stage
/// annotations in one data record.
inline EdfFile make_hypnogram(const std::vector<Annotation>& annotations,
                              double record_duration_seconds) {
  std::size_t need = 32;
  for (const auto& a : annotations) need += a.text.size() + 32;
  const int spr = static_cast<int>((need + 1) / 2);

  EdfFile file;
  file.header.version = "0";
  file.header.patient_id = "X F X fixture";
  file.header.recording_id = "Startdate 01-JAN-2000 X X X";
  file.header.start_date = "01.01.00";
  file.header.start_time = "22.00.00";
  file.header.reserved = "EDF+C";
  file.header.num_records = 1;
  file.header.record_duration_seconds = record_duration_seconds;
  file.header.num_signals = 1;
  EdfSignalHeader sig;
  sig.label = "EDF Annotations";
  sig.physical_dimension = "";
  sig.physical_min = -1.0;
  sig.physical_max = 1.0;
  sig.digital_min = -32768;
  sig.digital_max = 32767;
  sig.samples_per_record = spr;
  file.header.signals = {sig};
  file.header.header_bytes = 256 * 2;
  file.signal_bytes = {mrnet::edf::make_tal_record(0.0, annotations,
                                                   static_cast<std::size_t>(spr) * 2)};
  return file;
}

}  // namespace fixtures
