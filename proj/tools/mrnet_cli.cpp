// mrnet: EDF ingestion, training, prediction, sequential correction,
// evaluation, synthetic benchmarking, and hypnogram plotting.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrnet/checkpoint.hpp"
#include "mrnet/config.hpp"
#include "mrnet/csv.hpp"
#include "mrnet/edf.hpp"
#include "mrnet/epoch_store.hpp"
#include "mrnet/errors.hpp"
#include "mrnet/metrics.hpp"
#include "mrnet/msc.hpp"
#include "mrnet/network.hpp"
#include "mrnet/plot.hpp"
#include "mrnet/stage.hpp"
#include "mrnet/synthgen.hpp"
#include "mrnet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitContract = 2;
constexpr int kExitNumeric = 3;

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mrnet::ContractError("cannot open " + path.string());
  return std::vector<std::uint8_t>{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw mrnet::ContractError("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// ingest

struct EdfPair {
  fs::path psg;
  fs::path hypnogram;
  std::string name;
};

std::vector<EdfPair> pair_edf_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw mrnet::ContractError(dir.string() + " is not a directory");
  }
  std::vector<fs::path> psg, hyp;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.ends_with("-PSG.edf")) psg.push_back(entry.path());
    if (name.ends_with("-Hypnogram.edf")) hyp.push_back(entry.path());
  }
  std::sort(psg.begin(), psg.end());

  std::vector<EdfPair> pairs;
  for (const auto& p : psg) {
    const std::string base = p.filename().string();
    const std::string stem = base.substr(0, base.size() - std::string("-PSG.edf").size());
    const fs::path* match = nullptr;
    for (const auto& h : hyp) {
      const std::string hbase = h.filename().string();
      const std::string hstem =
          hbase.substr(0, hbase.size() - std::string("-Hypnogram.edf").size());
      // Exact stem match, else the Sleep-EDF convention where the last stem
      // character differs (SC4001E0-PSG vs SC4001EC-Hypnogram).
      if (hstem == stem ||
          (stem.size() >= 7 && hstem.size() >= 7 && hstem.substr(0, 7) == stem.substr(0, 7))) {
        match = &h;
        break;
      }
    }
    if (!match) {
      throw mrnet::ContractError("no hypnogram found for " + p.filename().string());
    }
    pairs.push_back(EdfPair{p, *match, stem});
  }
  return pairs;
}

std::size_t find_channel(const mrnet::edf::EdfHeader& header, const std::string& label) {
  std::string available;
  for (std::size_t s = 0; s < header.signals.size(); ++s) {
    if (header.signals[s].label == label) return s;
    if (!header.signals[s].is_annotation_channel()) {
      if (!available.empty()) available += ", ";
      available += "\"" + header.signals[s].label + "\"";
    }
  }
  throw mrnet::ContractError("channel \"" + label + "\" not present; available: " +
                             available);
}

void trim_wake_epochs(std::vector<mrnet::edf::EpochRecord>& epochs, int trim_minutes) {
  if (trim_minutes <= 0) return;
  const std::size_t margin = static_cast<std::size_t>(trim_minutes) * 2;  // 30 s epochs
  std::size_t first = epochs.size(), last = 0;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i].stage != mrnet::Stage::Wake) {
      first = std::min(first, i);
      last = std::max(last, i);
    }
  }
  if (first == epochs.size()) return;  // all wake, nothing to anchor on
  const std::size_t begin = first > margin ? first - margin : 0;
  const std::size_t end = std::min(epochs.size(), last + margin + 1);
  epochs.assign(epochs.begin() + begin, epochs.begin() + end);
}

int cmd_ingest(const mrnet::RunConfig& cfg, const fs::path& edf_dir, const fs::path& out) {
  const std::string channel = cfg.get_string("ingest.channel");
  const std::string pad_mode_name = cfg.get_string("ingest.pad_mode");
  mrnet::edf::PadMode pad_mode;
  if (pad_mode_name == "tail") {
    pad_mode = mrnet::edf::PadMode::Tail;
  } else if (pad_mode_name == "center") {
    pad_mode = mrnet::edf::PadMode::Center;
  } else {
    throw mrnet::ContractError("ingest.pad_mode must be tail | center, got '" +
                               pad_mode_name + "'");
  }
  const int trim_minutes = static_cast<int>(cfg.get_int("ingest.trim_wake"));

  const auto pairs = pair_edf_files(edf_dir);
  if (pairs.empty()) {
    throw mrnet::ContractError("no *-PSG.edf / *-Hypnogram.edf pairs under " +
                               edf_dir.string());
  }

  json summary;
  summary["records"] = json::array();
  for (const auto& pair : pairs) {
    const auto psg = mrnet::edf::parse_edf(read_file(pair.psg));
    const std::size_t sig_idx = find_channel(psg.header, channel);
    const auto& sig = psg.header.signals[sig_idx];
    const double rate = static_cast<double>(sig.samples_per_record) /
                        psg.header.record_duration_seconds;
    const auto signal = mrnet::edf::read_signal(psg, sig_idx);

    const auto hyp = mrnet::edf::parse_edf(read_file(pair.hypnogram));
    const auto ann_idx = mrnet::edf::find_annotation_signal(hyp.header);
    if (!ann_idx) {
      throw mrnet::ContractError(pair.hypnogram.string() +
                                 ": no 'EDF Annotations' signal");
    }
    const auto annotations = mrnet::edf::parse_annotations(hyp, *ann_idx);

    auto epoched = mrnet::edf::epoch_and_pad(signal, rate, annotations, channel);
    for (const auto& w : epoched.warnings) {
      std::cerr << pair.name << ": warning: " << w << "\n";
    }
    trim_wake_epochs(epoched.epochs, trim_minutes);

    mrnet::store::EpochStore store;
    std::array<std::int64_t, mrnet::kNumStages> histogram{};
    for (const auto& e : epoched.epochs) {
      store.epochs.push_back(mrnet::edf::pad_epoch(e.samples, mrnet::edf::kPaddedLength,
                                                   pad_mode));
      store.labels.push_back(e.stage);
      ++histogram[static_cast<int>(e.stage)];
    }
    mrnet::store::write_store(out / pair.name, store);

    json rec;
    rec["name"] = pair.name;
    rec["epochs"] = store.labels.size();
    rec["excluded"] = epoched.excluded;
    for (int s = 0; s < mrnet::kNumStages; ++s) {
      rec["stage_counts"][std::string(mrnet::stage_name(static_cast<mrnet::Stage>(s)))] =
          histogram[s];
    }
    summary["records"].push_back(rec);
    std::cout << pair.name << ": " << store.labels.size() << " epochs ("
              << epoched.excluded << " excluded)\n";
  }
  write_text(out / "ingest_summary.json", summary.dump(2) + "\n");
  cfg.write_echo(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const mrnet::RunConfig& cfg, const fs::path& out, bool jitter_preds) {
  auto synth_cfg = cfg.synth_config();
  const int records = static_cast<int>(cfg.get_int("synth.records"));
  const double jitter_rate = cfg.get_real("synth.jitter_rate");
  const double margin = cfg.get_real("synth.confidence_margin");

  for (int r = 0; r < records; ++r) {
    mrnet::synth::Rng rng(mrnet::synth::record_seed(synth_cfg.seed, r));
    const auto truth = mrnet::synth::sample_hypnogram(
        synth_cfg, static_cast<std::size_t>(synth_cfg.epochs_per_record), rng);

    mrnet::store::EpochStore store;
    store.labels = truth;
    for (mrnet::Stage stage : truth) {
      const auto samples = mrnet::synth::synth_epoch(stage, synth_cfg, rng);
      store.epochs.push_back(mrnet::edf::pad_epoch(samples));
    }
    char name[32];
    std::snprintf(name, sizeof name, "synth-%03d", r);
    mrnet::store::write_store(out / name, store);

    if (jitter_preds) {
      const auto preds = mrnet::synth::inject_jitter(truth, jitter_rate, margin,
                                                     synth_cfg, rng);
      mrnet::csv::write_predictions(out / name / "predictions.csv", preds.probs);
    }
    std::cout << name << ": " << truth.size() << " epochs\n";
  }
  cfg.write_echo(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train / predict

struct LoadedRecord {
  std::string name;
  mrnet::store::EpochStore store;
};

std::vector<LoadedRecord> load_records(const fs::path& data_dir) {
  std::vector<LoadedRecord> records;
  for (const auto& dir : mrnet::store::list_records(data_dir)) {
    records.push_back(LoadedRecord{dir.filename().string(), mrnet::store::read_store(dir)});
  }
  if (records.empty()) {
    throw mrnet::ContractError("no epoch stores under " + data_dir.string());
  }
  return records;
}

mrnet::Grid<float> tensor_from_epoch(const std::vector<float>& epoch, int input_length) {
  if (static_cast<std::size_t>(input_length) > epoch.size()) {
    throw mrnet::ContractError("network.input_length " + std::to_string(input_length) +
                               " exceeds stored epoch length " +
                               std::to_string(epoch.size()));
  }
  std::vector<float> slice(epoch.begin(), epoch.begin() + input_length);
  return mrnet::Grid<float>(static_cast<std::size_t>(input_length), 1, std::move(slice));
}

int cmd_train(const mrnet::RunConfig& cfg, const fs::path& data_dir, const fs::path& out,
              std::optional<int> fold) {
  const auto records = load_records(data_dir);
  const auto model_cfg = cfg.model_config();
  const auto train_cfg = cfg.train_config();
  const int input_length = model_cfg.backbone.input_length;

  std::vector<mrnet::Sample<float>> train_set, val_set;
  if (fold) {
    const int k = static_cast<int>(cfg.get_int("train.folds"));
    if (*fold < 0 || *fold >= k) {
      throw mrnet::ContractError("--fold must be in 0.." + std::to_string(k - 1));
    }
    std::vector<std::size_t> lengths;
    for (const auto& r : records) lengths.push_back(r.store.labels.size());
    const auto plans = mrnet::make_folds(lengths, k)[*fold];
    for (std::size_t r = 0; r < records.size(); ++r) {
      const auto& store = records[r].store;
      for (std::size_t e = 0; e < store.labels.size(); ++e) {
        mrnet::Sample<float> s{tensor_from_epoch(store.epochs[e], input_length),
                               store.labels[e]};
        const bool in_test = e >= plans[r].test_begin && e < plans[r].test_end;
        (in_test ? val_set : train_set).push_back(std::move(s));
      }
    }
  } else {
    for (const auto& r : records) {
      for (std::size_t e = 0; e < r.store.labels.size(); ++e) {
        train_set.push_back(mrnet::Sample<float>{
            tensor_from_epoch(r.store.epochs[e], input_length), r.store.labels[e]});
      }
    }
  }

  mrnet::Model<float> model(model_cfg, train_cfg.seed);
  std::cout << "training on " << train_set.size() << " epochs ("
            << model.parameter_count() << " parameters)\n";

  fs::create_directories(out);
  std::ofstream log_stream(out / "train_log.jsonl", std::ios::trunc);
  const auto logs = mrnet::train<float>(model, train_set, val_set, train_cfg, &log_stream);

  mrnet::ckpt::save(out / "model.mrn1", model, cfg.as_json());
  cfg.write_echo(out);
  if (!logs.empty()) {
    std::cout << "final train_acc " << logs.back().train_acc;
    if (logs.back().val_acc) std::cout << ", val_acc " << *logs.back().val_acc;
    std::cout << "\n";
  }
  return kExitOk;
}

mrnet::Model<float> model_from_checkpoint(const fs::path& path) {
  auto ckpt = mrnet::ckpt::load(path);
  mrnet::RunConfig stored;
  if (ckpt.manifest.contains("config")) {
    for (const auto& [key, value] : ckpt.manifest["config"].items()) {
      if (key.starts_with("network.")) stored.set(key, value.get<std::string>());
    }
  }
  mrnet::Model<float> model(stored.model_config(), 0);
  mrnet::ckpt::load_into(ckpt, model);
  return model;
}

int cmd_predict(const fs::path& model_path, const fs::path& data_dir, const fs::path& out,
                const mrnet::RunConfig& cfg) {
  auto model = model_from_checkpoint(model_path);
  const int input_length = model.config().backbone.input_length;
  const auto records = load_records(data_dir);

  for (const auto& rec : records) {
    std::vector<std::array<double, mrnet::kNumStages>> probs;
    probs.reserve(rec.store.epochs.size());
    // Batched eval-mode forward; per-sample results are independent.
    constexpr std::size_t kChunk = 16;
    for (std::size_t base = 0; base < rec.store.epochs.size(); base += kChunk) {
      const std::size_t take = std::min(kChunk, rec.store.epochs.size() - base);
      std::vector<mrnet::Grid<float>> batch;
      batch.reserve(take);
      for (std::size_t i = 0; i < take; ++i) {
        batch.push_back(tensor_from_epoch(rec.store.epochs[base + i], input_length));
      }
      mrnet::Tape<float> tape;
      mrnet::ops::Rng rng(0);
      auto in = tape.leaf(std::move(batch));
      auto f = model.forward(tape, in, /*training=*/false, rng);
      for (std::size_t i = 0; i < take; ++i) {
        const auto p = mrnet::ops::softmax(tape.value(f.logits)[i]);
        std::array<double, mrnet::kNumStages> row{};
        for (int c = 0; c < mrnet::kNumStages; ++c) row[c] = p(c, 0);
        probs.push_back(row);
      }
    }
    fs::create_directories(out / rec.name);
    mrnet::csv::write_predictions(out / rec.name / "predictions.csv", probs);
    std::cout << rec.name << ": " << probs.size() << " predictions\n";
  }
  cfg.write_echo(out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// correct / eval / plot

std::vector<mrnet::StageSeq> load_hypnograms(const fs::path& dir) {
  std::vector<mrnet::StageSeq> hyps;
  for (const auto& rec : mrnet::store::list_records(dir)) {
    hyps.push_back(mrnet::store::read_labels_csv(rec / mrnet::store::kLabelsFile));
  }
  if (hyps.empty()) {
    throw mrnet::ContractError("no labelled records under " + dir.string());
  }
  return hyps;
}

int cmd_correct(const mrnet::RunConfig& cfg, const fs::path& preds_dir,
                const fs::path& train_labels_dir, const fs::path& out) {
  const auto msc_cfg = cfg.msc_config();
  const auto train_hyps = load_hypnograms(train_labels_dir);
  const auto counts = mrnet::msc::count_transitions(train_hyps);
  const auto matrix =
      mrnet::msc::compress(counts, msc_cfg.g, msc_cfg.r, msc_cfg.laplace_smoothing);

  std::vector<fs::path> pred_files;
  if (fs::is_regular_file(preds_dir)) {
    pred_files.push_back(preds_dir);
  } else if (fs::is_directory(preds_dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(preds_dir)) {
      if (entry.is_regular_file() && entry.path().filename() == "predictions.csv") {
        pred_files.push_back(entry.path());
      }
    }
    std::sort(pred_files.begin(), pred_files.end());
  }
  if (pred_files.empty()) {
    throw mrnet::ContractError("no predictions.csv under " + preds_dir.string());
  }

  fs::create_directories(out);
  for (const auto& file : pred_files) {
    const auto preds = mrnet::csv::read_predictions(file);
    const auto corrected = mrnet::msc::msc_apply(preds, matrix, msc_cfg);
    const std::string record = fs::is_regular_file(preds_dir)
                                   ? file.stem().string()
                                   : file.parent_path().filename().string();
    fs::create_directories(out / record);
    mrnet::store::write_labels_csv(out / record / "corrected.csv", corrected);
    std::cout << record << ": "
              << mrnet::metrics::transition_count(preds.labels) << " -> "
              << mrnet::metrics::transition_count(corrected) << " transitions\n";
  }
  mrnet::csv::write_transition_matrix(out / "transition_matrix.csv", matrix);
  mrnet::csv::write_transition_counts(out / "transition_counts.csv", counts);
  cfg.write_echo(out);
  return kExitOk;
}

/// Labels from either contract: a labels CSV or a predictions CSV (argmax).
mrnet::StageSeq load_label_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw mrnet::ContractError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  in.close();
  if (header == mrnet::csv::kPredictionsHeader) {
    return mrnet::csv::read_predictions(path).labels;
  }
  return mrnet::store::read_labels_csv(path);
}

int cmd_eval(const fs::path& truth_path, const fs::path& pred_path,
             std::optional<fs::path> raw_path, std::optional<fs::path> out_path) {
  const auto truth = mrnet::store::read_labels_csv(truth_path);
  const auto pred = load_label_file(pred_path);
  if (truth.size() != pred.size()) {
    throw mrnet::ContractError("eval: truth has " + std::to_string(truth.size()) +
                               " epochs, predictions have " + std::to_string(pred.size()));
  }
  const auto raw = raw_path ? load_label_file(*raw_path) : pred;
  const auto cm = mrnet::metrics::confusion(truth, pred);
  const auto report = mrnet::metrics::evaluation_report(
      cm, mrnet::metrics::transition_count(raw), mrnet::metrics::transition_count(pred));
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (out_path) write_text(*out_path, text);
  return kExitOk;
}

int cmd_plot(const mrnet::RunConfig& cfg, const fs::path& truth_path,
             std::optional<fs::path> raw_path, std::optional<fs::path> corrected_path,
             const fs::path& out_svg) {
  std::vector<mrnet::plot::Lane> lanes;
  lanes.push_back(mrnet::plot::Lane{"truth", mrnet::store::read_labels_csv(truth_path),
                                    cfg.get_string("plot.color_truth")});
  if (raw_path) {
    lanes.push_back(mrnet::plot::Lane{"raw", load_label_file(*raw_path),
                                      cfg.get_string("plot.color_raw")});
  }
  if (corrected_path) {
    lanes.push_back(mrnet::plot::Lane{"corrected", load_label_file(*corrected_path),
                                      cfg.get_string("plot.color_corrected")});
  }
  write_text(out_svg, mrnet::plot::render_svg(lanes));
  fs::path txt = out_svg;
  txt.replace_extension(".txt");
  write_text(txt, mrnet::plot::render_text(lanes));
  std::cout << "wrote " << out_svg.string() << " and " << txt.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MRNet sleep-staging pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path,
                 "key=value config file (default: $MRNET_CONFIG if set)");
  app.add_option("--set", sets, "override a config key, e.g. --set msc.r=4.2");

  std::string edf_dir, data_dir, out_dir, model_path, preds_path, train_labels_dir;
  std::string truth_path, pred_path, channel_label;
  std::string raw_path, corrected_path;
  int trim_wake = -1;
  std::optional<int> fold;
  bool jitter_preds = false;

  auto* ingest = app.add_subcommand("ingest", "EDF pairs -> epoch stores");
  ingest->add_option("--edf", edf_dir, "directory of *-PSG.edf / *-Hypnogram.edf pairs")
      ->required();
  ingest->add_option("--channel", channel_label,
                     "EEG channel label (config ingest.channel)");
  ingest->add_option("--out", out_dir, "output directory")->required();
  ingest->add_option("--trim-wake", trim_wake,
                     "keep at most N minutes of wake around the sleep period");

  auto* synth = app.add_subcommand("synth", "generate synthetic epoch stores");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_flag("--jitter-preds", jitter_preds,
                  "also write jittered predictions.csv per record");

  auto* train = app.add_subcommand("train", "train a model on epoch stores");
  train->add_option("--data", data_dir, "directory of record stores")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  int fold_value = -1;
  train->add_option("--fold", fold_value, "hold out this cross-validation fold");

  auto* predict = app.add_subcommand("predict", "per-epoch confidences from a checkpoint");
  predict->add_option("--model", model_path, "MRN1 checkpoint")->required();
  predict->add_option("--data", data_dir, "directory of record stores")->required();
  predict->add_option("--out", out_dir, "output directory")->required();

  auto* correct = app.add_subcommand("correct", "sequential correction of predictions");
  correct->add_option("--preds", preds_path, "predictions.csv file or directory tree")
      ->required();
  correct->add_option("--train-labels", train_labels_dir,
                      "directory of labelled records for the transition model")
      ->required();
  correct->add_option("--out", out_dir, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "metrics report");
  eval->add_option("--truth", truth_path, "ground-truth labels.csv")->required();
  eval->add_option("--pred", pred_path, "labels.csv or predictions.csv")->required();
  eval->add_option("--raw", raw_path, "uncorrected labels/predictions for the jitter row");
  eval->add_option("--out", out_dir, "metrics JSON path");

  auto* plot = app.add_subcommand("plot", "hypnogram strip (SVG + text)");
  plot->add_option("--truth", truth_path, "ground-truth labels.csv")->required();
  plot->add_option("--raw", raw_path, "raw predictions lane");
  plot->add_option("--corrected", corrected_path, "corrected labels lane");
  plot->add_option("--out", out_dir, "output .svg path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    mrnet::RunConfig cfg;
    if (config_path.empty()) {
      if (const char* env = std::getenv("MRNET_CONFIG")) config_path = env;
    }
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& s : sets) cfg.set_from_cli(s);

    if (ingest->parsed()) {
      if (!channel_label.empty()) cfg.set("ingest.channel", channel_label);
      if (trim_wake >= 0) cfg.set("ingest.trim_wake", std::to_string(trim_wake));
      return cmd_ingest(cfg, edf_dir, out_dir);
    }
    if (synth->parsed()) return cmd_synth(cfg, out_dir, jitter_preds);
    if (train->parsed()) {
      if (fold_value >= 0) fold = fold_value;
      return cmd_train(cfg, data_dir, out_dir, fold);
    }
    if (predict->parsed()) return cmd_predict(model_path, data_dir, out_dir, cfg);
    if (correct->parsed()) return cmd_correct(cfg, preds_path, train_labels_dir, out_dir);
    if (eval->parsed()) {
      std::optional<fs::path> raw =
          raw_path.empty() ? std::nullopt : std::optional<fs::path>(raw_path);
      std::optional<fs::path> out =
          out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
      return cmd_eval(truth_path, pred_path, raw, out);
    }
    if (plot->parsed()) {
      std::optional<fs::path> raw =
          raw_path.empty() ? std::nullopt : std::optional<fs::path>(raw_path);
      std::optional<fs::path> corrected =
          corrected_path.empty() ? std::nullopt : std::optional<fs::path>(corrected_path);
      return cmd_plot(cfg, truth_path, raw, corrected, out_dir);
    }
  } catch (const mrnet::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const mrnet::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitContract;
  }
  return kExitOk;
}
