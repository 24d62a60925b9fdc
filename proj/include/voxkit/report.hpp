#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voxkit/enhance.hpp"
#include "voxkit/errors.hpp"
#include "voxkit/perturb.hpp"
#include "voxkit/pitch.hpp"
#include "voxkit/psycho.hpp"
#include "voxkit/signal.hpp"
#include "voxkit/version.hpp"

namespace voxkit {

using json = nlohmann::json;

// Every tunable of the processing chain; round-trips losslessly through
// JSON so a run can be reproduced from its provenance block.
struct RunConfig {
  std::uint64_t seed = 1;
  // separation
  int components = 0;  // 0 = one per input channel
  std::string contrast = "logcosh";
  double ica_tol = 1e-6;
  int ica_max_iter = 200;
  // enhancement
  double alpha = 2.0;
  double beta = 0.02;
  double pause_theta = 0.25;
  // pitch
  double fmin_hz = 60.0;
  double fmax_hz = 400.0;
  double pitch_frame_ms = 40.0;
  double pitch_hop_ms = 10.0;
  double voicing_threshold = 0.45;
  // perturbation
  int pq_k = 5;
  // psychoacoustics
  double calib_dbfs_spl = 94.0;

  PitchOptions pitch_options() const {
    PitchOptions opt;
    opt.fmin_hz = fmin_hz;
    opt.fmax_hz = fmax_hz;
    opt.frame_ms = pitch_frame_ms;
    opt.hop_ms = pitch_hop_ms;
    opt.voicing_threshold = voicing_threshold;
    return opt;
  }
  EnhanceOptions enhance_options() const {
    EnhanceOptions opt;
    opt.alpha = alpha;
    opt.beta = beta;
    opt.pause_theta = pause_theta;
    return opt;
  }
};

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"seed", c.seed},
           {"components", c.components},
           {"contrast", c.contrast},
           {"ica_tol", c.ica_tol},
           {"ica_max_iter", c.ica_max_iter},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"pause_theta", c.pause_theta},
           {"fmin_hz", c.fmin_hz},
           {"fmax_hz", c.fmax_hz},
           {"pitch_frame_ms", c.pitch_frame_ms},
           {"pitch_hop_ms", c.pitch_hop_ms},
           {"voicing_threshold", c.voicing_threshold},
           {"pq_k", c.pq_k},
           {"calib_dbfs_spl", c.calib_dbfs_spl}};
}

inline void from_json(const json& j, RunConfig& c) {
  RunConfig defaults;
  c.seed = j.value("seed", defaults.seed);
  c.components = j.value("components", defaults.components);
  c.contrast = j.value("contrast", defaults.contrast);
  c.ica_tol = j.value("ica_tol", defaults.ica_tol);
  c.ica_max_iter = j.value("ica_max_iter", defaults.ica_max_iter);
  c.alpha = j.value("alpha", defaults.alpha);
  c.beta = j.value("beta", defaults.beta);
  c.pause_theta = j.value("pause_theta", defaults.pause_theta);
  c.fmin_hz = j.value("fmin_hz", defaults.fmin_hz);
  c.fmax_hz = j.value("fmax_hz", defaults.fmax_hz);
  c.pitch_frame_ms = j.value("pitch_frame_ms", defaults.pitch_frame_ms);
  c.pitch_hop_ms = j.value("pitch_hop_ms", defaults.pitch_hop_ms);
  c.voicing_threshold = j.value("voicing_threshold", defaults.voicing_threshold);
  c.pq_k = j.value("pq_k", defaults.pq_k);
  c.calib_dbfs_spl = j.value("calib_dbfs_spl", defaults.calib_dbfs_spl);
}

// FNV-1a 64-bit over a file's raw bytes; provenance only.
inline std::string fnv1a_file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError("hash: cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ull;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Writes text through a temp file in the same directory, then renames.
inline void write_text_atomic(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  if (target.has_parent_path())
    std::filesystem::create_directories(target.parent_path());
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FileWriteError("cannot open '" + path + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw FileWriteError("short write to '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw FileWriteError("cannot move temp file onto '" + path + "'");
}

namespace report_detail {

inline std::string degeneracy_code(const std::exception& e) {
  const std::string msg = e.what();
  if (msg.find("unvoiced") != std::string::npos) return "fully_unvoiced";
  if (msg.find("voiced frames") != std::string::npos)
    return "insufficient_voiced_frames";
  if (msg.find("cycles") != std::string::npos) return "insufficient_cycles";
  if (msg.find("amplitude") != std::string::npos) return "zero_amplitude_cycle";
  if (msg.find("loudness") != std::string::npos) return "zero_loudness";
  if (msg.find("block") != std::string::npos) return "signal_too_short";
  return "degenerate_input";
}

}  // namespace report_detail

// Runs the full feature battery over one signal and assembles the report.
// Degenerate stages produce null fields with a reason code instead of
// failing the whole report.
inline json analyze_signal(const MonoSignal& signal, const std::string& id,
                           const RunConfig& config) {
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["id"] = id;
  report["duration_s"] = signal.duration_s();
  report["sample_rate"] = signal.sample_rate;

  std::optional<PitchContour> contour;
  try {
    contour = estimate_f0_contour(signal, config.pitch_options());
  } catch (const Error& e) {
    report["f0"] = nullptr;
    report["f0_reason"] = report_detail::degeneracy_code(e);
  }

  if (contour) {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    std::size_t voiced = 0;
    for (const auto& f : contour->frames) {
      if (!f.voiced) continue;
      const double v = *f.f0_hz;
      if (voiced == 0) {
        lo = hi = v;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      sum += v;
      ++voiced;
    }
    if (voiced == 0) {
      report["f0"] = nullptr;
      report["f0_reason"] = "fully_unvoiced";
    } else {
      report["f0"] = {{"mean_hz", sum / static_cast<double>(voiced)},
                      {"min_hz", lo},
                      {"max_hz", hi},
                      {"voiced_fraction",
                       static_cast<double>(voiced) /
                           static_cast<double>(contour->frames.size())}};
    }
  }

  if (contour) {
    try {
      const CycleSequence cycles = extract_cycles(signal, *contour);
      auto features = classical_set(cycles);
      if (config.pq_k != 3 && config.pq_k != 5) {
        const auto k = static_cast<std::size_t>(config.pq_k);
        features["jitter.pq" + std::to_string(config.pq_k) + "_percent"] =
            detail::runs_pq_percent(cycles.period_runs(), k);
        features["shimmer.apq" + std::to_string(config.pq_k) + "_percent"] =
            detail::runs_pq_percent(cycles.amplitude_runs(), k);
      }
      json jitter = json::object(), shimmer = json::object();
      for (const auto& [key, value] : features) {
        if (key.starts_with("jitter."))
          jitter[key.substr(7)] = value;
        else if (key.starts_with("shimmer."))
          shimmer[key.substr(8)] = value;
      }
      report["jitter"] = jitter;
      report["shimmer"] = shimmer;
    } catch (const Error& e) {
      report["jitter"] = nullptr;
      report["shimmer"] = nullptr;
      report["jitter_reason"] = report_detail::degeneracy_code(e);
      report["shimmer_reason"] = report_detail::degeneracy_code(e);
    }
    try {
      report["semitone_sd"] = semitone_sd(*contour);
    } catch (const Error& e) {
      report["semitone_sd"] = nullptr;
      report["semitone_sd_reason"] = report_detail::degeneracy_code(e);
    }
  } else {
    report["jitter"] = nullptr;
    report["shimmer"] = nullptr;
    report["jitter_reason"] = report["f0_reason"];
    report["shimmer_reason"] = report["f0_reason"];
    report["semitone_sd"] = nullptr;
    report["semitone_sd_reason"] = report["f0_reason"];
  }

  std::optional<LoudnessResult> loud;
  try {
    CalibrationSpec calib;
    calib.dbfs_to_spl = config.calib_dbfs_spl;
    loud = loudness(signal, calib);
    report["loudness"] = {{"mean_phon", loud->mean_phon},
                          {"calibration_dbfs_spl", loud->calibration_dbfs_spl},
                          {"silence", loud->silence}};
  } catch (const Error& e) {
    report["loudness"] = nullptr;
    report["loudness_reason"] = report_detail::degeneracy_code(e);
  }

  if (loud && !loud->silence) {
    try {
      report["sharpness_acum"] = sharpness(loud->long_term);
    } catch (const Error& e) {
      report["sharpness_acum"] = nullptr;
      report["sharpness_reason"] = report_detail::degeneracy_code(e);
    }
  } else {
    report["sharpness_acum"] = nullptr;
    report["sharpness_reason"] = "zero_loudness";
  }

  return report;
}

inline void attach_provenance(json& report, const RunConfig& config,
                              const std::map<std::string, std::string>& input_hashes) {
  json prov;
  prov["tool_version"] = kVersion;
  prov["parameters"] = config;
  prov["seed"] = config.seed;
  prov["input_hashes"] = input_hashes;
  prov["generated_at"] = utc_timestamp();
  report["provenance"] = prov;
}

// One row per feature: signal_id,feature,value,unit. Null features keep
// their row with an empty value so signals stay comparable column-wise.
inline void append_comparison_rows(std::string& csv, const json& report) {
  const std::string id = report.at("id").get<std::string>();
  auto row = [&](const std::string& feature, const json& value,
                 const std::string& unit) {
    csv += id;
    csv += ',';
    csv += feature;
    csv += ',';
    if (!value.is_null()) {
      json v = value;
      csv += v.dump();
    }
    csv += ',';
    csv += unit;
    csv += '\n';
  };

  row("duration_s", report.at("duration_s"), "s");
  const json& f0 = report.at("f0");
  row("f0.mean_hz", f0.is_null() ? json() : f0.at("mean_hz"), "Hz");
  row("f0.min_hz", f0.is_null() ? json() : f0.at("min_hz"), "Hz");
  row("f0.max_hz", f0.is_null() ? json() : f0.at("max_hz"), "Hz");
  row("f0.voiced_fraction", f0.is_null() ? json() : f0.at("voiced_fraction"),
      "ratio");

  const json& jitter = report.at("jitter");
  if (jitter.is_null()) {
    for (const char* key : {"local_percent", "rap_percent", "ppq5_percent"})
      row(std::string("jitter.") + key, json(), "%");
    row("jitter.mad_seconds", json(), "s");
  } else {
    for (auto it = jitter.begin(); it != jitter.end(); ++it)
      row("jitter." + it.key(), it.value(),
          it.key() == "mad_seconds" ? "s" : "%");
  }
  const json& shimmer = report.at("shimmer");
  if (shimmer.is_null()) {
    for (const char* key : {"local_percent", "apq3_percent", "apq5_percent"})
      row(std::string("shimmer.") + key, json(), "%");
    row("shimmer.mad", json(), "amplitude");
    row("shimmer.db", json(), "dB");
  } else {
    for (auto it = shimmer.begin(); it != shimmer.end(); ++it) {
      std::string unit = "%";
      if (it.key() == "mad") unit = "amplitude";
      if (it.key() == "db") unit = "dB";
      row("shimmer." + it.key(), it.value(), unit);
    }
  }
  row("semitone_sd", report.at("semitone_sd"), "semitones");
  const json& loud = report.at("loudness");
  row("loudness.mean_phon", loud.is_null() ? json() : loud.at("mean_phon"), "phon");
  row("sharpness", report.at("sharpness_acum"), "acum");
}

inline constexpr const char* kComparisonHeader = "signal_id,feature,value,unit\n";

}  // namespace voxkit
