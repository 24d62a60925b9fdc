#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voxkit/enhance.hpp"
#include "voxkit/errors.hpp"
#include "voxkit/ica.hpp"
#include "voxkit/report.hpp"
#include "voxkit/scene.hpp"
#include "voxkit/signal.hpp"
#include "voxkit/stft.hpp"
#include "voxkit/version.hpp"
#include "voxkit/wav.hpp"

namespace voxkit::cli {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kInternalError = 3,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

namespace fs = std::filesystem;

inline MonoSignal load_first_channel(const std::string& path) {
  auto channels = load_wav(path);
  if (channels.empty()) throw MalformedWavError("no channels in '" + path + "'");
  return std::move(channels.front());
}

// Sensor inputs: one mono file per sensor, or a single multichannel file.
inline std::vector<MonoSignal> load_sensor_inputs(const std::vector<std::string>& paths) {
  if (paths.size() == 1) {
    auto channels = load_wav(paths.front());
    if (channels.empty())
      throw MalformedWavError("no channels in '" + paths.front() + "'");
    return channels;
  }
  std::vector<MonoSignal> sensors;
  sensors.reserve(paths.size());
  for (const auto& p : paths) sensors.push_back(load_first_channel(p));
  return sensors;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// ---- simulate ----------------------------------------------------------

inline void cmd_simulate(const std::string& manifest_path,
                         const std::string& out_dir, const RunConfig& config) {
  std::ifstream in(manifest_path);
  if (!in) throw FileNotFoundError("manifest '" + manifest_path + "' not found");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgumentError(std::string("manifest parse error: ") + e.what());
  }
  if (!manifest.contains("sources") || !manifest["sources"].is_array() ||
      manifest["sources"].empty())
    throw InvalidArgumentError("manifest needs a non-empty 'sources' array");

  Scene scene;
  for (const auto& entry : manifest["sources"])
    scene.sources.push_back(load_first_channel(entry.get<std::string>()));

  const auto n = static_cast<Eigen::Index>(scene.sources.size());
  const std::string mixing = manifest.value("mixing", std::string("demo"));
  if (mixing == "identity")
    scene.mixing = identity_mixing(n);
  else if (mixing == "demo")
    scene.mixing = demo_mixing(n);
  else
    scene.mixing = read_mixing_csv(mixing);

  if (manifest.contains("snr_db") && !manifest["snr_db"].is_null())
    scene.noise_snr_db = manifest["snr_db"].get<double>();
  scene.seed = manifest.value("seed", config.seed);

  const auto sensors = mix(scene);

  fs::create_directories(out_dir);
  json meta;
  meta["seed"] = scene.seed;
  meta["snr_db"] = scene.noise_snr_db ? json(*scene.noise_snr_db) : json();
  meta["sources"] = manifest["sources"];
  meta["mixing_csv"] = "mixing.csv";
  meta["condition_number"] = scene.mixing.condition_number();
  json files = json::array();
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const std::string name = "sensor_" + std::to_string(i + 1) + ".wav";
    write_wav(sensors[i], (fs::path(out_dir) / name).string());
    files.push_back(name);
  }
  meta["sensors"] = files;
  write_mixing_csv(scene.mixing, (fs::path(out_dir) / "mixing.csv").string());
  write_text_atomic((fs::path(out_dir) / "scene.json").string(), meta.dump(2) + "\n");
}

// ---- separate ----------------------------------------------------------

struct SeparateOutput {
  std::vector<std::string> files;
  SeparationResult result;
};

inline SeparateOutput run_separation(const std::vector<MonoSignal>& sensors,
                                     const std::vector<std::string>& ref_paths,
                                     const std::string& out_dir,
                                     const RunConfig& config,
                                     const std::map<std::string, std::string>& hashes) {
  FastIcaOptions opt;
  opt.n_components = config.components;
  opt.contrast = contrast_from_string(config.contrast);
  opt.tol = config.ica_tol;
  opt.max_iter = config.ica_max_iter;
  opt.seed = config.seed;

  if (opt.n_components > static_cast<int>(sensors.size()))
    throw UsageError("--components exceeds the input channel count");

  std::vector<MonoSignal> refs;
  if (!ref_paths.empty()) {
    for (const auto& p : ref_paths) refs.push_back(load_first_channel(p));
    opt.refs = &refs;
  }

  SeparateOutput out;
  out.result = fastica(sensors, opt);

  fs::create_directories(out_dir);
  json meta;
  meta["components"] = out.result.sources.size();
  meta["contrast"] = config.contrast;
  json conv = json::array(), iters = json::array(), scales = json::array();
  for (bool c : out.result.converged) conv.push_back(c);
  for (int i : out.result.iterations) iters.push_back(i);

  json files = json::array();
  for (std::size_t k = 0; k < out.result.sources.size(); ++k) {
    const auto& s = out.result.sources[k];
    double peak = 0.0;
    for (double v : s.samples) peak = std::max(peak, std::abs(v));
    // Unit-variance signals exceed 16-bit range; write at 0.5 peak and
    // record the scale. Analysis always uses the pre-scaling samples.
    const double scale = peak > 0.0 ? 0.5 / peak : 1.0;
    MonoSignal scaled = s;
    for (auto& v : scaled.samples) v *= scale;
    const std::string name = "source_" + std::to_string(k + 1) + ".wav";
    write_wav(scaled, (fs::path(out_dir) / name).string());
    files.push_back(name);
    scales.push_back(scale);
  }
  meta["output_files"] = files;
  meta["output_peak_scale"] = scales;
  meta["converged"] = conv;
  meta["iterations"] = iters;
  meta["whitening"] = {{"means", vector_to_json(out.result.whitening.means)},
                       {"eigenvalues", vector_to_json(out.result.whitening.eigvals)},
                       {"eigenvectors", matrix_to_json(out.result.whitening.eigvecs)},
                       {"whitener", matrix_to_json(out.result.whitening.whitener)}};
  meta["unmixing_whitened"] = matrix_to_json(out.result.unmixing);
  meta["unmixing_original"] = matrix_to_json(out.result.unmixing_original);
  meta["mixing_estimate"] = matrix_to_json(out.result.mixing_estimate);
  if (out.result.score) {
    json score;
    score["permutation"] = out.result.score->permutation;
    score["per_source_abs_r"] = out.result.score->per_source_abs_r;
    score["per_source_si_sdr_db"] = out.result.score->per_source_si_sdr_db;
    score["mean_abs_r"] = out.result.score->mean_abs_r();
    score["mean_si_sdr_db"] = out.result.score->mean_si_sdr_db();
    meta["score"] = score;
  }
  json prov;
  prov["tool_version"] = kVersion;
  prov["parameters"] = config;
  prov["seed"] = config.seed;
  prov["input_hashes"] = hashes;
  prov["generated_at"] = utc_timestamp();
  meta["provenance"] = prov;
  write_text_atomic((fs::path(out_dir) / "separation.json").string(),
                    meta.dump(2) + "\n");

  for (const auto& f : meta["output_files"])
    out.files.push_back((fs::path(out_dir) / f.get<std::string>()).string());
  return out;
}

inline void cmd_separate(const std::vector<std::string>& inputs,
                         const std::vector<std::string>& ref_paths,
                         const std::string& out_dir, const RunConfig& config) {
  std::map<std::string, std::string> hashes;
  for (const auto& p : inputs) hashes[p] = fnv1a_file_hash(p);
  run_separation(load_sensor_inputs(inputs), ref_paths, out_dir, config, hashes);
}

// ---- enhance -----------------------------------------------------------

inline void cmd_enhance(const std::string& input, const std::string& output,
                        const RunConfig& config) {
  const MonoSignal noisy = load_first_channel(input);
  if (noisy.samples.empty())
    throw DegenerateInputError("enhance: input '" + input + "' is empty");
  write_wav(enhance_signal(noisy, config.enhance_options()), output);
}

// ---- analyze -----------------------------------------------------------

struct AnalyzeFileOptions {
  std::string report_path;
  std::string csv_path;          // optional: per-signal feature rows
  std::string f0_csv_path;       // optional: pitch contour export
  std::string loudness_csv_path; // optional: loudness contour export
};

inline json analyze_to_files(const MonoSignal& signal, const std::string& id,
                             const RunConfig& config,
                             const std::map<std::string, std::string>& hashes,
                             const AnalyzeFileOptions& files) {
  json report = analyze_signal(signal, id, config);
  attach_provenance(report, config, hashes);
  if (!files.report_path.empty())
    write_text_atomic(files.report_path, report.dump(2) + "\n");
  if (!files.csv_path.empty()) {
    std::string csv = kComparisonHeader;
    append_comparison_rows(csv, report);
    write_text_atomic(files.csv_path, csv);
  }
  if (!files.f0_csv_path.empty()) {
    std::ostringstream out;
    try {
      estimate_f0_contour(signal, config.pitch_options()).to_csv(out);
      write_text_atomic(files.f0_csv_path, out.str());
    } catch (const Error&) {
      write_text_atomic(files.f0_csv_path, "time_s,f0_hz,voiced,peak_r\n");
    }
  }
  if (!files.loudness_csv_path.empty()) {
    std::ostringstream out;
    try {
      CalibrationSpec calib;
      calib.dbfs_to_spl = config.calib_dbfs_spl;
      loudness(signal, calib).contour_to_csv(out);
      write_text_atomic(files.loudness_csv_path, out.str());
    } catch (const Error&) {
      write_text_atomic(files.loudness_csv_path, "block_time_s,sone,phon\n");
    }
  }
  return report;
}

inline json cmd_analyze(const std::vector<std::string>& inputs, bool concat,
                        const RunConfig& config, const AnalyzeFileOptions& files) {
  if (inputs.empty()) throw UsageError("analyze needs at least one input");
  if (inputs.size() > 1 && !concat)
    throw UsageError("multiple inputs require --concat");

  MonoSignal signal = load_first_channel(inputs.front());
  std::map<std::string, std::string> hashes;
  hashes[inputs.front()] = fnv1a_file_hash(inputs.front());
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    const MonoSignal next = load_first_channel(inputs[i]);
    if (next.sample_rate != signal.sample_rate)
      throw InvalidArgumentError("--concat inputs must share a sample rate");
    signal.samples.insert(signal.samples.end(), next.samples.begin(),
                          next.samples.end());
    hashes[inputs[i]] = fnv1a_file_hash(inputs[i]);
  }

  std::string id = fs::path(inputs.front()).stem().string();
  if (inputs.size() > 1) id += "+concat" + std::to_string(inputs.size() - 1);
  return analyze_to_files(signal, id, config, hashes, files);
}

// ---- pipeline ----------------------------------------------------------

// separate -> enhance each -> analyze each; a stage failure is recorded in
// that signal's report and the remaining signals continue.
inline void cmd_pipeline(const std::vector<std::string>& inputs,
                         const std::vector<std::string>& ref_paths,
                         const std::string& out_dir, const RunConfig& config) {
  std::map<std::string, std::string> input_hashes;
  for (const auto& p : inputs) input_hashes[p] = fnv1a_file_hash(p);

  const auto sensors = load_sensor_inputs(inputs);
  const auto separated = run_separation(
      sensors, ref_paths, (fs::path(out_dir) / "separated").string(), config,
      input_hashes);

  std::string comparison = kComparisonHeader;
  const fs::path enhanced_dir = fs::path(out_dir) / "enhanced";
  const fs::path report_dir = fs::path(out_dir) / "reports";
  fs::create_directories(enhanced_dir);
  fs::create_directories(report_dir);

  for (std::size_t k = 0; k < separated.result.sources.size(); ++k) {
    const std::string id = "source_" + std::to_string(k + 1);
    const std::string report_path = (report_dir / (id + ".report.json")).string();
    try {
      const MonoSignal enhanced =
          enhance_signal(separated.result.sources[k], config.enhance_options());
      const std::string enhanced_path = (enhanced_dir / (id + ".wav")).string();
      // Same headroom convention as the separated outputs.
      double peak = 0.0;
      for (double v : enhanced.samples) peak = std::max(peak, std::abs(v));
      MonoSignal scaled = enhanced;
      const double scale = peak > 0.0 ? 0.5 / peak : 1.0;
      for (auto& v : scaled.samples) v *= scale;
      write_wav(scaled, enhanced_path);

      // Provenance names the pipeline's own inputs; intermediate files
      // live under --out and would differ from run to run by path alone.
      json report = analyze_signal(enhanced, id, config);
      attach_provenance(report, config, input_hashes);
      write_text_atomic(report_path, report.dump(2) + "\n");
      append_comparison_rows(comparison, report);
    } catch (const std::exception& e) {
      json report;
      report["schema_version"] = kReportSchemaVersion;
      report["id"] = id;
      report["error"] = e.what();
      attach_provenance(report, config, input_hashes);
      write_text_atomic(report_path, report.dump(2) + "\n");
    }
  }
  write_text_atomic((fs::path(out_dir) / "comparison.csv").string(), comparison);
}

// ---- argument parsing ---------------------------------------------------

inline int run(std::vector<std::string> args) {
  CLI::App app{"Group-recording speech separation and voice-quality analysis"};
  app.set_version_flag("--version", kVersion);
  app.fallthrough();
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path, out;
  app.add_option("--config", config_path, "RunConfig JSON file");
  app.add_option("--seed", config.seed, "Random seed");
  app.add_option("--out", out, "Output directory or file");

  auto* simulate = app.add_subcommand("simulate", "Mix ground-truth sources per a scene manifest");
  std::string manifest;
  simulate->add_option("manifest", manifest, "Scene manifest JSON")->required();

  auto* separate = app.add_subcommand("separate", "Blind source separation of sensor recordings");
  std::vector<std::string> sep_inputs, sep_refs;
  separate->add_option("inputs", sep_inputs, "Sensor WAV files")->required();
  separate->add_option("--refs", sep_refs, "Ground-truth WAVs for order/sign resolution");
  separate->add_option("--components", config.components, "Component count (default: channel count)");
  separate->add_option("--contrast", config.contrast, "logcosh|gauss")
      ->check(CLI::IsMember({"logcosh", "gauss", "tanh"}));
  separate->add_option("--tol", config.ica_tol, "Fixed-point convergence tolerance");
  separate->add_option("--max-iter", config.ica_max_iter, "Iteration cap per component");

  auto* enhance = app.add_subcommand("enhance", "Spectral-subtraction noise reduction");
  std::string enh_input;
  enhance->add_option("input", enh_input, "Noisy WAV")->required();
  enhance->add_option("--alpha", config.alpha, "Over-subtraction factor");
  enhance->add_option("--beta", config.beta, "Spectral floor");
  enhance->add_option("--pause-theta", config.pause_theta, "Pause RMS threshold vs median");

  auto* analyze = app.add_subcommand("analyze", "Compute the voice-quality feature report");
  std::vector<std::string> ana_inputs;
  bool concat = false;
  AnalyzeFileOptions ana_files;
  analyze->add_option("inputs", ana_inputs, "WAV file(s)")->required();
  analyze->add_flag("--concat", concat, "Concatenate multiple inputs before analysis");
  analyze->add_option("--report", ana_files.report_path, "Report JSON path");
  analyze->add_option("--csv", ana_files.csv_path, "Feature rows CSV path");
  analyze->add_option("--f0-csv", ana_files.f0_csv_path, "Pitch contour CSV path");
  analyze->add_option("--loudness-csv", ana_files.loudness_csv_path, "Loudness contour CSV path");
  analyze->add_option("--fmin", config.fmin_hz, "Pitch search floor, Hz");
  analyze->add_option("--fmax", config.fmax_hz, "Pitch search ceiling, Hz");
  analyze->add_option("--voicing-threshold", config.voicing_threshold, "Voicing decision threshold");
  analyze->add_option("--pq-k", config.pq_k, "Perturbation quotient order");
  analyze->add_option("--calib-spl", config.calib_dbfs_spl, "SPL of a full-scale sine");

  auto* pipeline = app.add_subcommand("pipeline", "separate + enhance + analyze, with a comparison table");
  std::vector<std::string> pipe_inputs, pipe_refs;
  pipeline->add_option("inputs", pipe_inputs, "Sensor WAV files")->required();
  pipeline->add_option("--refs", pipe_refs, "Ground-truth WAVs for order/sign resolution");
  pipeline->add_option("--components", config.components, "Component count");
  pipeline->add_option("--contrast", config.contrast, "logcosh|gauss")
      ->check(CLI::IsMember({"logcosh", "gauss", "tanh"}));
  pipeline->add_option("--alpha", config.alpha, "Over-subtraction factor");
  pipeline->add_option("--beta", config.beta, "Spectral floor");
  pipeline->add_option("--calib-spl", config.calib_dbfs_spl, "SPL of a full-scale sine");

  std::reverse(args.begin(), args.end());  // CLI11 wants reversed argv order
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (!config_path.empty()) {
      // Config file first, explicit flags win.
      std::ifstream in(config_path);
      if (!in) throw FileNotFoundError("config '" + config_path + "' not found");
      RunConfig from_file = json::parse(in).get<RunConfig>();
      CLI::App* active = app.get_subcommands().front();
      auto keep = [&](const std::string& name, auto member) {
        const CLI::Option* opt = active->get_option_no_throw(name);
        if (opt == nullptr) opt = app.get_option_no_throw(name);
        if (opt == nullptr || opt->count() == 0) config.*member = from_file.*member;
      };
      keep("--seed", &RunConfig::seed);
      keep("--components", &RunConfig::components);
      keep("--contrast", &RunConfig::contrast);
      keep("--tol", &RunConfig::ica_tol);
      keep("--max-iter", &RunConfig::ica_max_iter);
      keep("--alpha", &RunConfig::alpha);
      keep("--beta", &RunConfig::beta);
      keep("--pause-theta", &RunConfig::pause_theta);
      keep("--fmin", &RunConfig::fmin_hz);
      keep("--fmax", &RunConfig::fmax_hz);
      keep("--voicing-threshold", &RunConfig::voicing_threshold);
      keep("--pq-k", &RunConfig::pq_k);
      keep("--calib-spl", &RunConfig::calib_dbfs_spl);
    }

    if (simulate->parsed()) {
      if (out.empty()) throw UsageError("simulate requires --out <dir>");
      cmd_simulate(manifest, out, config);
    } else if (separate->parsed()) {
      if (out.empty()) throw UsageError("separate requires --out <dir>");
      cmd_separate(sep_inputs, sep_refs, out, config);
    } else if (enhance->parsed()) {
      if (out.empty()) throw UsageError("enhance requires --out <file.wav>");
      cmd_enhance(enh_input, out, config);
    } else if (analyze->parsed()) {
      if (ana_files.report_path.empty() && !out.empty())
        ana_files.report_path = out;
      if (ana_files.report_path.empty())
        throw UsageError("analyze requires --report <file.json> (or --out)");
      cmd_analyze(ana_inputs, concat, config, ana_files);
    } else if (pipeline->parsed()) {
      if (out.empty()) throw UsageError("pipeline requires --out <dir>");
      cmd_pipeline(pipe_inputs, pipe_refs, out, config);
    }
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace voxkit::cli
