// Copyright 2026 The EEGTCAV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "concepts.hpp"
#include "dsp.hpp"
#include "edf.hpp"
#include "inverse.hpp"
#include "model.hpp"
#include "report.hpp"
#include "tcav.hpp"
#include "window.hpp"

namespace fs = std::filesystem;

namespace eegtcav::pipeline {
namespace {

std::string require_input_file(const config::Ini& cfg, const std::string& section,
                               const std::string& key) {
  const std::string path = cfg.require_string(section, key);
  if (!fs::exists(path)) {
    throw Error::config("config key '" + section + "." + key + "': path '" + path +
                        "' does not exist");
  }
  return path;
}

std::string require_input_dir(const config::Ini& cfg, const std::string& section,
                              const std::string& key) {
  const std::string path = require_input_file(cfg, section, key);
  if (!fs::is_directory(path)) {
    throw Error::config("config key '" + section + "." + key + "': '" + path +
                        "' is not a directory");
  }
  return path;
}

std::string output_dir(const config::Ini& cfg) {
  const std::string dir = cfg.get_string("paths", "output_dir", ".");
  fs::create_directories(dir);
  return dir;
}

// Seeds must be explicit: either --seed on the command line or a seed key in
// the relevant config section.
std::uint64_t require_seed(const config::Ini& cfg, const std::string& section,
                           const RunOverrides& ov) {
  if (ov.seed) return *ov.seed;
  if (cfg.has(section, "seed")) return cfg.require_u64(section, "seed");
  throw Error::config("no seed given: set '" + section + ".seed' or pass --seed");
}

int thread_count(const config::Ini& cfg, const RunOverrides& ov) {
  if (ov.threads) return *ov.threads;
  return cfg.get_int("run", "threads", 0);
}

std::vector<fs::path> list_edf_files(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = lower_copy(entry.path().extension().string());
    if (ext == ".edf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Side-car annotation table for an EDF file: `<stem>.csv`, either in the
// annotations directory from the config or next to the recording.
std::optional<fs::path> annotation_path_for(const config::Ini& cfg, const fs::path& edf) {
  fs::path candidate;
  if (cfg.has("paths", "annotation_dir")) {
    candidate = fs::path(cfg.require_string("paths", "annotation_dir")) /
                edf.filename().replace_extension(".csv");
  } else {
    candidate = fs::path(edf).replace_extension(".csv");
  }
  if (fs::exists(candidate)) return candidate;
  return std::nullopt;
}

edf::ScreeningCriteria screening_from(const config::Ini& cfg) {
  edf::ScreeningCriteria crit;
  crit.min_channels = cfg.get_int("preprocess", "min_channels", crit.min_channels);
  crit.min_duration_s = cfg.get_double("preprocess", "min_duration_s", crit.min_duration_s);
  crit.min_sampling_hz = cfg.get_double("preprocess", "min_sampling_hz", crit.min_sampling_hz);
  crit.max_abs_amplitude_uv =
      cfg.get_double("preprocess", "max_abs_uv", crit.max_abs_amplitude_uv);
  crit.scale_bounds.first =
      cfg.get_double("preprocess", "scale_min_uv", crit.scale_bounds.first);
  crit.scale_bounds.second =
      cfg.get_double("preprocess", "scale_max_uv", crit.scale_bounds.second);
  return crit;
}

dsp::PreprocessParams preprocess_from(const config::Ini& cfg) {
  dsp::PreprocessParams p;
  p.highpass_hz = cfg.get_double("preprocess", "highpass_hz", p.highpass_hz);
  p.lowpass_hz = cfg.get_double("preprocess", "lowpass_hz", p.lowpass_hz);
  p.notch_low_hz = cfg.get_double("preprocess", "notch_low_hz", p.notch_low_hz);
  p.notch_high_hz = cfg.get_double("preprocess", "notch_high_hz", p.notch_high_hz);
  p.target_rate_hz = cfg.get_double("preprocess", "target_rate_hz", p.target_rate_hz);
  return p;
}

model::LhbConfig model_from(const config::Ini& cfg) {
  model::LhbConfig c;
  c.in_channels = cfg.get_int("model", "in_channels", c.in_channels);
  c.encoder_dim = cfg.get_int("model", "encoder_dim", c.encoder_dim);
  const auto widths = cfg.get_list("model", "conv_widths");
  if (!widths.empty()) {
    c.conv_widths.clear();
    for (const auto& w : widths) {
      char* end = nullptr;
      const long v = std::strtol(w.c_str(), &end, 10);
      if (end == w.c_str() || *end != '\0') {
        throw Error::config("config key 'model.conv_widths': '" + w + "' is not an integer");
      }
      c.conv_widths.push_back(static_cast<int>(v));
    }
  }
  c.mask_rate = cfg.get_double("model", "mask_rate", c.mask_rate);
  c.channel_drop_rate = cfg.get_double("model", "channel_drop_rate", c.channel_drop_rate);
  c.contextualizer_kernel =
      cfg.get_int("model", "contextualizer_kernel", c.contextualizer_kernel);
  c.contextualizer_groups =
      cfg.get_int("model", "contextualizer_groups", c.contextualizer_groups);
  c.pool_segments = cfg.get_int("model", "pool_segments", c.pool_segments);
  c.hidden_dim = cfg.get_int("model", "hidden_dim", c.hidden_dim);
  c.num_classes = cfg.get_int("model", "num_classes", c.num_classes);
  c.dropout_rate = cfg.get_double("model", "dropout_rate", c.dropout_rate);
  c.validate();
  return c;
}

struct LoadedRecording {
  EegRecording recording;
  std::string file_name;
};

// Shared ingest path: parse, attach side-car annotations, screen on the raw
// montage, then map to the canonical 19 channels. Failures reject the file
// and the run continues.
std::vector<LoadedRecording> ingest_recordings(const config::Ini& cfg, std::ostream& log) {
  const std::string dir = require_input_dir(cfg, "paths", "edf_dir");
  const auto files = list_edf_files(dir);
  if (files.empty()) throw Error::data("no .edf files found in '" + dir + "'");
  const auto criteria = screening_from(cfg);

  std::vector<LoadedRecording> accepted;
  int rejected = 0;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    try {
      EegRecording rec = edf::parse_edf_file(f.string());
      if (const auto ann = annotation_path_for(cfg, f)) {
        const std::string text = report::read_text_file(ann->string());
        for (auto& span : edf::parse_annotation_table(text)) {
          rec.annotations.push_back(std::move(span));
        }
      }
      const auto screen = edf::screen_recording(rec, criteria);
      if (!screen.accepted) {
        std::string reasons;
        for (const auto& r : screen.reasons) {
          if (!reasons.empty()) reasons += "; ";
          reasons += r;
        }
        log << name << ": rejected (" << reasons << ")\n";
        ++rejected;
        continue;
      }
      rec = edf::map_channels(rec);
      if (rec.session_id.empty()) rec.session_id = f.stem().string();
      accepted.push_back({std::move(rec), name});
    } catch (const Error& e) {
      log << name << ": rejected (" << e.what() << ")\n";
      ++rejected;
    }
  }
  log << accepted.size() << " accepted / " << rejected << " rejected\n";
  return accepted;
}

// First annotation span covering the window's center sample, if any.
std::optional<std::string> label_at(const std::vector<AnnotationSpan>& spans, double center_s) {
  for (const auto& s : spans) {
    if (center_s >= s.onset_s && center_s < s.onset_s + s.duration_s) return s.label;
  }
  return std::nullopt;
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return out;
}

std::map<std::string, int> parse_label_map(const config::Ini& cfg) {
  std::map<std::string, int> out;
  for (const auto& item : cfg.get_list("finetune", "label_map")) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error::config("config key 'finetune.label_map': expected label=class, got '" + item +
                          "'");
    }
    const std::string label = trim_copy(item.substr(0, eq));
    char* end = nullptr;
    const std::string num = trim_copy(item.substr(eq + 1));
    const long cls = std::strtol(num.c_str(), &end, 10);
    if (label.empty() || end == num.c_str() || *end != '\0') {
      throw Error::config("config key 'finetune.label_map': bad entry '" + item + "'");
    }
    out[label] = static_cast<int>(cls);
  }
  if (out.empty()) throw Error::config("config is missing required key 'finetune.label_map'");
  return out;
}

// Random sets live in the concept directory as random-<i>.eegw, written by
// `build-concepts` with kind=random.
std::vector<concepts::ConceptDataset> load_random_sets(const std::string& concept_dir,
                                                       int limit) {
  std::vector<std::pair<int, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(concept_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string stem = entry.path().stem().string();
    if (entry.path().extension() != ".eegw" || stem.rfind("random-", 0) != 0) continue;
    char* end = nullptr;
    const std::string num = stem.substr(7);
    const long idx = std::strtol(num.c_str(), &end, 10);
    if (end == num.c_str() || *end != '\0') continue;
    found.emplace_back(static_cast<int>(idx), entry.path());
  }
  std::sort(found.begin(), found.end());
  if (limit > 0 && static_cast<int>(found.size()) < limit) {
    throw Error::config("tcav needs " + std::to_string(limit) + " random sets in '" +
                        concept_dir + "' but found " + std::to_string(found.size()) +
                        "; run build-concepts with kind=random first");
  }
  if (limit > 0) found.resize(static_cast<std::size_t>(limit));
  std::vector<concepts::ConceptDataset> sets;
  sets.reserve(found.size());
  for (const auto& [idx, path] : found) {
    concepts::ConceptDataset ds;
    ds.name = path.stem().string();
    ds.set = read_windows(path.string());
    sets.push_back(std::move(ds));
  }
  if (sets.size() < 2) {
    throw Error::config("tcav needs at least two random-<i>.eegw sets in '" + concept_dir +
                        "'; run build-concepts with kind=random first");
  }
  return sets;
}

}  // namespace

void cmd_preprocess(const config::Ini& cfg, const RunOverrides& /*ov*/, std::ostream& log) {
  const auto params = preprocess_from(cfg);
  const double window_len_s = cfg.get_double("preprocess", "window_len_s", 60.0);
  const double stride_s = cfg.get_double("preprocess", "stride_s", window_len_s);
  const double reference_uv =
      cfg.get_double("preprocess", "reference_uv", dsp::kDefaultReferenceUv);
  const std::string out_path = cfg.require_string("paths", "windows");

  WindowSet set;
  set.channel_names = window_channel_names();
  set.sampling_rate_hz = params.target_rate_hz;
  set.window_len_s = window_len_s;

  const auto loaded = ingest_recordings(cfg, log);
  int files_used = 0;
  for (const auto& item : loaded) {
    const auto outcome = dsp::preprocess(item.recording, params);
    if (outcome.skipped()) {
      log << item.file_name << ": skipped (" << outcome.skip_reason << ")\n";
      continue;
    }
    const EegRecording& rec = *outcome.recording;
    const double fs = rec.sampling_rate_hz;
    const auto len = static_cast<Eigen::Index>(std::llround(window_len_s * fs));
    const auto step = static_cast<Eigen::Index>(std::llround(stride_s * fs));
    Eigen::Index produced = 0;
    for (Eigen::Index start = 0; start + len <= rec.samples.cols(); start += step) {
      Window w = dsp::cut_window(rec, start, window_len_s, reference_uv);
      const double center_s = (static_cast<double>(start) + static_cast<double>(len) / 2.0) / fs;
      w.label = label_at(rec.annotations, center_s);
      set.windows.push_back(std::move(w));
      ++produced;
    }
    log << item.file_name << ": " << produced << " windows\n";
    if (produced > 0) ++files_used;
  }
  if (set.windows.empty()) throw Error::data("preprocessing produced zero windows");

  set.provenance = {{"kind", "preprocess"},
                    {"files", files_used},
                    {"window_len_s", window_len_s},
                    {"stride_s", stride_s},
                    {"target_rate_hz", params.target_rate_hz},
                    {"reference_uv", reference_uv}};
  if (const auto parent = fs::path(out_path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  write_windows(out_path, set);
  log << "wrote " << out_path << " (" << set.size() << " windows)\n";
}

void cmd_build_concepts(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log) {
  const std::string kind = lower_copy(cfg.require_string("concepts", "kind"));
  const std::string concept_dir = cfg.require_string("paths", "concept_dir");
  fs::create_directories(concept_dir);
  const double reference_uv =
      cfg.get_double("preprocess", "reference_uv", dsp::kDefaultReferenceUv);

  const auto write_one = [&](const concepts::ConceptDataset& ds) {
    const std::string path =
        (fs::path(concept_dir) / (sanitize_name(ds.name) + ".eegw")).string();
    write_windows(path, ds.set);
    log << "wrote " << path << " (" << ds.size() << " windows)\n";
  };

  if (kind == "labeled") {
    std::vector<std::string> labels = cfg.get_list("concepts", "labels");
    if (labels.empty() && cfg.has("concepts", "label")) {
      labels.push_back(cfg.require_string("concepts", "label"));
    }
    if (labels.empty()) {
      throw Error::config("config is missing required key 'concepts.labels'");
    }
    const double window_len_s = cfg.get_double("concepts", "window_len_s", 4.0);
    const auto loaded = ingest_recordings(cfg, log);
    std::vector<EegRecording> recs;
    recs.reserve(loaded.size());
    for (const auto& item : loaded) {
      const auto outcome = dsp::preprocess(item.recording, preprocess_from(cfg));
      if (outcome.skipped()) {
        log << item.file_name << ": skipped (" << outcome.skip_reason << ")\n";
        continue;
      }
      recs.push_back(*outcome.recording);
    }
    for (const auto& label : labels) {
      write_one(concepts::build_labeled_concepts(recs, label, window_len_s, reference_uv));
    }
    return;
  }

  if (kind == "random") {
    const WindowSet pool = read_windows(require_input_file(cfg, "paths", "windows"));
    const int n_sets = cfg.get_int("concepts", "n_sets", 50);
    const int max_examples = cfg.get_int("concepts", "max_examples", 40);
    const auto seed = require_seed(cfg, "concepts", ov);
    for (const auto& ds :
         concepts::sample_random_concept_sets(pool, n_sets, max_examples, seed)) {
      write_one(ds);
    }
    return;
  }

  if (kind == "anatomical") {
    const auto lf = inverse::load_lead_field(require_input_file(cfg, "paths", "lead_field"));
    concepts::AnatomicalOptions opt;
    if (cfg.has("concepts", "band")) {
      opt.band = inverse::band_from_name(cfg.require_string("concepts", "band"));
    }
    opt.window_len_s = cfg.get_double("concepts", "window_len_s", opt.window_len_s);
    opt.trim_s = cfg.get_double("concepts", "trim_s", opt.trim_s);
    opt.min_examples = cfg.get_int("concepts", "min_examples", opt.min_examples);
    opt.reference_uv = reference_uv;
    opt.eloreta_alpha = cfg.get_double("concepts", "eloreta_alpha", opt.eloreta_alpha);
    const std::string norm =
        lower_copy(cfg.get_string("concepts", "normalization", "zscore"));
    if (norm == "zscore") {
      opt.normalization = inverse::NormalizationMode::kZScore;
    } else if (norm == "subtract_mean") {
      opt.normalization = inverse::NormalizationMode::kSubtractMean;
    } else if (norm == "divide_mean") {
      opt.normalization = inverse::NormalizationMode::kDivideMean;
    } else {
      throw Error::config("config key 'concepts.normalization': unknown mode '" + norm + "'");
    }

    const auto loaded = ingest_recordings(cfg, log);
    std::vector<EegRecording> recs;
    recs.reserve(loaded.size());
    for (const auto& item : loaded) {
      const auto outcome = dsp::preprocess(item.recording, preprocess_from(cfg));
      if (outcome.skipped()) {
        log << item.file_name << ": skipped (" << outcome.skip_reason << ")\n";
        continue;
      }
      recs.push_back(*outcome.recording);
    }
    const auto built = concepts::build_anatomical_concepts(recs, lf, opt);
    if (built.by_slot.empty()) throw Error::data("no anatomical concepts could be built");
    for (const auto& [slot, ds] : built.by_slot) {
      if (ds.size() < 2) {
        log << ds.name << ": skipped (only " << ds.size() << " window)\n";
        continue;
      }
      write_one(ds);
      if (built.sparse.at(slot)) {
        log << ds.name << ": sparse (" << ds.size() << " < " << opt.min_examples
            << " requested examples)\n";
      }
    }
    return;
  }

  throw Error::config("config key 'concepts.kind': unknown kind '" + kind +
                      "' (expected labeled, random, or anatomical)");
}

void cmd_finetune(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log) {
  const WindowSet set = read_windows(require_input_file(cfg, "paths", "windows"));
  const auto label_map = parse_label_map(cfg);

  std::vector<Eigen::MatrixXf> inputs;
  std::vector<int> labels;
  std::size_t unlabeled = 0;
  for (const auto& w : set.windows) {
    if (!w.label) {
      ++unlabeled;
      continue;
    }
    const auto it = label_map.find(*w.label);
    if (it == label_map.end()) {
      ++unlabeled;
      continue;
    }
    inputs.push_back(w.data);
    labels.push_back(it->second);
  }
  if (unlabeled > 0) {
    log << "skipping " << unlabeled << " windows without a mapped label\n";
  }

  model::LhbModel net = [&]() {
    if (cfg.has("paths", "weights")) {
      const std::string path = require_input_file(cfg, "paths", "weights");
      log << "loading weights from " << path << "\n";
      return model::load_model(path);
    }
    const auto seed = require_seed(cfg, "finetune", ov);
    log << "initializing random weights (seed " << seed << ")\n";
    return model::LhbModel(model_from(cfg), seed);
  }();

  model::FineTuneOptions opt;
  opt.epochs = cfg.get_int("finetune", "epochs", opt.epochs);
  opt.learning_rate = cfg.get_double("finetune", "learning_rate", opt.learning_rate);
  opt.batch_size = cfg.get_int("finetune", "batch_size", opt.batch_size);
  opt.seed = require_seed(cfg, "finetune", ov);

  const auto rep = net.fine_tune(inputs, labels, opt);

  const std::string dir = output_dir(cfg);
  const std::string weights_out = cfg.get_string(
      "paths", "weights_out", (fs::path(dir) / "model.lhbw").string());
  model::save_model(net, weights_out);

  std::string csv = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < rep.epoch_loss.size(); ++e) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", e + 1, rep.epoch_loss[e]);
    csv += buf;
  }
  const std::string loss_path = (fs::path(dir) / "finetune_loss.csv").string();
  report::write_text_file(loss_path, csv);

  char acc[64];
  std::snprintf(acc, sizeof(acc), "%.4f", rep.train_accuracy);
  log << "final training accuracy: " << acc << "\n";
  log << "wrote " << weights_out << "\n";
  log << "wrote " << loss_path << "\n";
}

void cmd_tcav(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log) {
  const model::LhbModel net = model::load_model(require_input_file(cfg, "paths", "weights"));
  const WindowSet targets = read_windows(require_input_file(cfg, "paths", "windows"));
  const std::string concept_dir = require_input_dir(cfg, "paths", "concept_dir");

  const auto concept_names = cfg.get_list("tcav", "concepts");
  if (concept_names.empty()) {
    throw Error::config("config is missing required key 'tcav.concepts'");
  }
  std::vector<concepts::ConceptDataset> concept_sets;
  concept_sets.reserve(concept_names.size());
  for (const auto& name : concept_names) {
    const std::string path =
        (fs::path(concept_dir) / (sanitize_name(name) + ".eegw")).string();
    if (!fs::exists(path)) {
      throw Error::config("concept '" + name + "': no file '" + path +
                          "'; run build-concepts first");
    }
    concepts::ConceptDataset ds;
    ds.name = name;
    ds.set = read_windows(path);
    concept_sets.push_back(std::move(ds));
  }

  const int n_random = cfg.get_int("tcav", "n_random_sets", 0);
  auto random_sets = load_random_sets(concept_dir, n_random);

  tcav::TcavOptions opt;
  opt.target_class = cfg.get_int("tcav", "target_class", 1);
  const auto bn_names = cfg.get_list("tcav", "bottlenecks");
  if (!bn_names.empty()) {
    opt.bottlenecks.clear();
    for (const auto& n : bn_names) opt.bottlenecks.push_back(model::bottleneck_from_name(n));
  }
  opt.max_examples = cfg.get_int("tcav", "max_examples", opt.max_examples);
  opt.seed = require_seed(cfg, "tcav", ov);
  opt.cav_hyper.regularization_alpha =
      cfg.get_double("tcav", "cav_alpha", opt.cav_hyper.regularization_alpha);
  opt.cav_hyper.epochs = cfg.get_int("tcav", "cav_epochs", opt.cav_hyper.epochs);
  opt.weak_cav_threshold =
      cfg.get_double("tcav", "weak_cav_threshold", opt.weak_cav_threshold);
  opt.significance_level =
      cfg.get_double("tcav", "significance_level", opt.significance_level);
  opt.threads = thread_count(cfg, ov);

  const auto results = tcav::run_tcav(net, targets, concept_sets, random_sets, opt);
  const auto rows = report::to_rows(results);
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%s @ %s: mean=%.3f p_corr=%.4g%s", r.concept_id.c_str(),
                  r.bottleneck.c_str(), r.mean_score, r.p_corrected,
                  r.significant ? (r.positive ? " * positive" : " * negative") : "");
    log << line << "\n";
  }

  const std::string dir = output_dir(cfg);
  const std::string csv_path = cfg.get_string(
      "report", "csv", (fs::path(dir) / "tcav_report.csv").string());
  report::write_text_file(csv_path, report::render_csv(rows));
  log << "wrote " << csv_path << "\n";

  report::SvgOptions svg;
  svg.include_timestamp = !ov.no_timestamp && cfg.get_bool("report", "timestamp", true);
  const std::string svg_path = cfg.get_string(
      "report", "svg", (fs::path(dir) / "tcav_report.svg").string());
  report::write_text_file(svg_path, report::render_svg(rows, svg));
  log << "wrote " << svg_path << "\n";
}

void cmd_report(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log) {
  const std::string dir = output_dir(cfg);
  const std::string csv_path = cfg.get_string(
      "report", "csv", (fs::path(dir) / "tcav_report.csv").string());
  if (!fs::exists(csv_path)) {
    throw Error::config("report CSV '" + csv_path + "' does not exist; run tcav first");
  }
  const auto rows = report::parse_csv(report::read_text_file(csv_path));
  report::SvgOptions svg;
  svg.include_timestamp = !ov.no_timestamp && cfg.get_bool("report", "timestamp", true);
  const std::string svg_path = cfg.get_string(
      "report", "svg", (fs::path(dir) / "tcav_report.svg").string());
  report::write_text_file(svg_path, report::render_svg(rows, svg));
  log << "wrote " << svg_path << " (" << rows.size() << " rows)\n";
}

}  // namespace eegtcav::pipeline
