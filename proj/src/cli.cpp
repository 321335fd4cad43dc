#include "thermo/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <ostream>

#include "thermo/errors.hpp"
#include "thermo/evaluation.hpp"
#include "thermo/io.hpp"
#include "thermo/pipeline.hpp"
#include "thermo/synth.hpp"

namespace thermo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AnalyzeArgs {
  std::string manifest;
  std::string dets;
  bool blob = false;
  std::string riker;
  std::string out = "out";
  std::string contrast = "pair";
  std::vector<double> bed;
  std::optional<double> dt;
  AnalyzeConfig config;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::string time_row;
  std::vector<double> thresholds{0.5, 0.7, 0.9};
  double tau = kDefaultTau;
  double conf_min = kDefaultConfMin;
  double dt = kDefaultDt;
};

struct SynthArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out = "session";
  double noise = -1.0;  // negative keeps the scenario's value
};

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    const auto item = text.substr(start, comma - start);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ArgumentError("not a number list: " + text);
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

int cmd_analyze(AnalyzeArgs a, std::ostream& out) {
  if (a.blob == !a.dets.empty()) throw ArgumentError("exactly one of --dets or --blob is required");
  if (a.contrast == "pair") {
    a.config.contrast = ContrastMode::Pair;
  } else if (a.contrast == "frame") {
    a.config.contrast = ContrastMode::Frame;
  } else {
    const auto v = split_numbers(a.contrast);
    if (v.size() != 2) throw ArgumentError("--contrast takes pair, frame or LO,HI");
    a.config.contrast = ContrastMode::Fixed;
    a.config.fixed_lo = v[0];
    a.config.fixed_hi = v[1];
  }
  if (!a.bed.empty()) {
    if (a.bed.size() != 4) throw ArgumentError("--bed takes x,y,w,h");
    a.config.blob.bed_region = BoundingBox{a.bed[0], a.bed[1], a.bed[2], a.bed[3]};
  }
  a.config.dt = a.dt;
  a.config.validate();

  const auto manifest = load_manifest(a.manifest);
  std::optional<std::vector<FrameDetections>> dets;
  if (!a.blob) {
    std::optional<Resolution> res;
    if (manifest.width != 0) res = Resolution{manifest.width, manifest.height};
    dets = load_detections(a.dets, res);
  }
  std::vector<RikerRecord> riker;
  if (!a.riker.empty()) riker = load_riker_csv(a.riker);

  const auto report = analyze_session(manifest_source(manifest), dets ? &*dets : nullptr, riker, a.config);

  const fs::path dir(a.out);
  io::write_atomic(dir / "report.json", report_to_json(report));
  io::write_atomic(dir / "motion.csv", motion_csv(report));
  io::write_atomic(dir / "events.csv", events_csv(report));
  io::write_atomic(dir / "worker_counts.csv", worker_counts_csv(report));
  io::write_atomic(dir / "motion.svg", motion_svg(report));
  io::write_atomic(dir / "workers.svg", workers_svg(report));

  out << fmt::format("frames: {}\nnursing time: {}\ninteraction time: {}\n", report.motion.size(),
                     format_duration(report.nursing_time), format_duration(report.interaction_time));
  if (report.unmatched_detection_frames > 0)
    out << fmt::format("warning: {} detection frames matched no video frame\n", report.unmatched_detection_frames);
  if (!report.gaps.empty()) out << fmt::format("frames without a patient: {}\n", report.gaps.size());
  return kExitOk;
}

std::string time_row(const std::string& spec) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) throw ArgumentError("--time-row takes PRED,LABEL");
  const double pred = parse_duration(spec.substr(0, comma));
  const double label = parse_duration(spec.substr(comma + 1));
  return fmt::format("{},{},{}", format_duration(pred), format_duration(label),
                     format_duration(time_error(pred, label)));
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.time_row.empty()) {
    out << time_row(a.time_row) << "\n";
    if (a.pred.empty() && a.gt.empty()) return kExitOk;
  }
  if (a.pred.empty() || a.gt.empty()) throw ArgumentError("eval needs --pred and --gt");
  if (a.thresholds.empty()) throw ArgumentError("--thresholds must not be empty");
  if (!(a.dt > 0.0)) throw ArgumentError("dt must be positive");
  if (!(a.tau > 0.0)) throw ArgumentError("tau must be positive");

  const auto pred = load_detections(a.pred, std::nullopt, true);
  const auto gt = load_detections(a.gt, std::nullopt, false);

  const auto table = mean_ap(pred, gt, a.thresholds);
  for (const auto& w : table.warnings) err << "warning: " << w << "\n";
  const auto map_csv = map_table_csv(table);

  const auto counts = align_counts(pred, gt, a.tau, a.conf_min);
  const double worker_acc = counting_accuracy(counts.pred_workers, counts.label_workers);
  const double inter_acc = counting_accuracy(counts.pred_interaction, counts.label_interaction);
  const auto accuracy_csv = fmt::format("metric,accuracy\nworkers,{:.4f}\ninteraction,{:.4f}\n", worker_acc, inter_acc);

  const double nt_pred = nursing_time(pred, a.dt, a.conf_min);
  const double nt_label = nursing_time(gt, a.dt, 0.0);
  const double it_pred = interaction_time(pred, a.dt, a.tau, a.conf_min).seconds;
  const double it_label = interaction_time(gt, a.dt, a.tau, 0.0).seconds;
  std::string times_csv = "metric,estimated,labeled,error\n";
  times_csv += fmt::format("nursing_time,{},{},{}\n", format_duration(nt_pred), format_duration(nt_label),
                           format_duration(time_error(nt_pred, nt_label)));
  times_csv += fmt::format("interaction_time,{},{},{}\n", format_duration(it_pred), format_duration(it_label),
                           format_duration(time_error(it_pred, it_label)));

  json j;
  j["thresholds"] = table.thresholds;
  j["map"] = json::array();
  for (std::size_t t = 0; t < table.thresholds.size(); ++t) {
    json row{{"threshold", table.thresholds[t]}};
    for (std::size_t c = 0; c < table.classes.size(); ++c)
      row[std::string(to_string(table.classes[c]))] = optional_json(table.cells[t][c]);
    j["map"].push_back(row);
  }
  json avg;
  for (std::size_t c = 0; c < table.classes.size(); ++c)
    avg[std::string(to_string(table.classes[c]))] = optional_json(table.class_average[c]);
  j["map_average"] = avg;
  j["map_overall"] = optional_json(table.overall);
  j["warnings"] = table.warnings;
  j["accuracy"] = {{"workers", worker_acc}, {"interaction", inter_acc}};
  j["times"] = {{"nursing_time", {{"estimated_s", nt_pred}, {"labeled_s", nt_label}, {"error_s", time_error(nt_pred, nt_label)}}},
                {"interaction_time",
                 {{"estimated_s", it_pred}, {"labeled_s", it_label}, {"error_s", time_error(it_pred, it_label)}}}};

  if (!a.out.empty()) {
    const fs::path dir(a.out);
    io::write_atomic(dir / "map.csv", map_csv);
    io::write_atomic(dir / "accuracy.csv", accuracy_csv);
    io::write_atomic(dir / "times.csv", times_csv);
    io::write_atomic(dir / "eval.json", j.dump(2) + "\n");
  }
  out << map_csv << "\n" << accuracy_csv << "\n" << times_csv;
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  auto scenario = a.scenario.empty() ? synth::reference_scenario() : synth::load_scenario(a.scenario);
  if (a.noise >= 0.0) scenario.noise_sigma = a.noise;
  synth::write_session(scenario, a.seed, a.out);
  const auto truth = synth::ground_truth(scenario);
  out << fmt::format("wrote {} frames to {}\nnursing time: {}\ninteraction time: {}\n", scenario.frame_count(), a.out,
                     format_duration(truth.nursing_time), format_duration(truth.interaction_time));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thermal ward video analytics: worker presence, physical interaction and patient motion"};
  app.name("thermoward");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Analyze a thermal frame sequence");
  analyze->add_option("--manifest", an.manifest, "Sequence manifest (JSON)")->required();
  auto* dets_opt = analyze->add_option("--dets", an.dets, "Detections (JSON lines)");
  auto* blob_opt = analyze->add_flag("--blob", an.blob, "Use the built-in warm-blob detector");
  dets_opt->excludes(blob_opt);
  analyze->add_option("--blob-min-temp", an.config.blob.min_temp, "Blob threshold in Celsius");
  analyze->add_option("--blob-min-area", an.config.blob.min_area, "Smallest blob in pixels");
  analyze->add_option("--bed", an.bed, "Bed region x,y,w,h for the blob detector")->delimiter(',');
  analyze->add_option("--tau", an.config.tau, "Interaction overlap threshold");
  analyze->add_option("--alpha", an.config.alpha, "Motion relaxation factor");
  analyze->add_option("--dt", an.dt, "Seconds per frame (default: from the manifest)");
  analyze->add_option("--conf-min", an.config.conf_min, "Minimum detection confidence");
  analyze->add_option("--riker", an.riker, "Riker score CSV (t,score)");
  analyze->add_option("--riker-window", an.config.riker_window, "Seconds of motion averaged around each score");
  analyze->add_option("--contrast", an.contrast, "pair, frame or LO,HI in Celsius");
  analyze->add_option("--levels", an.config.flow.pyramid_levels, "Flow pyramid levels");
  analyze->add_option("--window", an.config.flow.window, "Flow averaging window in pixels");
  analyze->add_option("--iterations", an.config.flow.iterations, "Flow iterations per level");
  analyze->add_option("--out", an.out, "Output directory");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score detections against annotations");
  eval->add_option("--pred", ev.pred, "Predicted detections (JSON lines)");
  eval->add_option("--gt", ev.gt, "Ground truth annotations (JSON lines)");
  eval->add_option("--thresholds", ev.thresholds, "IoU thresholds")->delimiter(',');
  eval->add_option("--tau", ev.tau, "Interaction overlap threshold");
  eval->add_option("--conf-min", ev.conf_min, "Minimum detection confidence for counting");
  eval->add_option("--dt", ev.dt, "Seconds per frame");
  eval->add_option("--time-row", ev.time_row, "Print one time-comparison row for PRED,LABEL durations");
  eval->add_option("--out", ev.out, "Output directory");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic session with ground truth");
  synth_cmd->add_option("--scenario", sy.scenario, "Scenario JSON (default: built-in reference session)");
  synth_cmd->add_option("--seed", sy.seed, "Noise seed");
  synth_cmd->add_option("--noise", sy.noise, "Override the noise sigma in Celsius");
  synth_cmd->add_option("--out", sy.out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(an, out);
    if (eval->parsed()) return cmd_eval(ev, out, err);
    return cmd_synth(sy, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace thermo::cli
