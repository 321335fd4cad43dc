// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "support.hpp"
#include "thermo/analytics.hpp"
#include "thermo/cli.hpp"
#include "thermo/evaluation.hpp"
#include "thermo/io.hpp"
#include "thermo/optical_flow.hpp"
#include "thermo/synth.hpp"

using namespace thermo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt_num(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome box_geometry() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000 && o.pass; ++i) {
    const auto a = testing::random_box(rng, 64), b = testing::random_box(rng, 64);
    o.expect(area(a) == double(testing::raster(a).size()), "area differs from rasterization");
    o.expect(intersection_area(a, b) == testing::raster_intersection(a, b), "intersection differs from rasterization");
    o.expect(iou(a, b) == testing::raster_iou(a, b), "IoU differs from rasterization");
  }
  const double secs = seconds_since(t0);
  o.expect(secs < 5.0, "runtime over 5 s");
  if (o.pass) o.detail = "1000 pairs exact, " + fmt_num(secs, 3) + " s";
  return o;
}

Outcome interaction_semantics() {
  Outcome o;
  const auto r = physical_interaction({0, 0, 100, 100}, {90, 0, 50, 100}, 0.1);
  o.expect(r.ratio == 0.1, "ratio is " + fmt_num(r.ratio, 17) + ", expected 0.10");
  o.expect(r.indicator, "indicator not set at the inclusive boundary");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pos(0, 200), ext(1, 80), grow(0, 30);
  for (int i = 0; i < 500; ++i) {
    const BoundingBox p{pos(rng), pos(rng), ext(rng), ext(rng)};
    const BoundingBox w{pos(rng), pos(rng), ext(rng), ext(rng)};
    const double l = grow(rng), rr = grow(rng), u = grow(rng), d = grow(rng);
    const BoundingBox bigger{w.x - l, w.y - u, w.w + l + rr, w.h + u + d};
    const bool before = physical_interaction(p, w, 0.1).indicator;
    const bool after = physical_interaction(p, bigger, 0.1).indicator;
    o.expect(!before || after, "indicator flipped 1 -> 0 under worker growth");
  }
  if (o.pass) o.detail = "ratio 0.10 -> 1; 500 growth cases monotone";
  return o;
}

Outcome nursing_time_sum() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> m(0, 5), len(1, 400);
  std::uniform_real_distribution<double> conf(0.5, 1.0);
  std::uniform_real_distribution<double> dts(0.1, 3.0);
  for (int trial = 0; trial < 100 && o.pass; ++trial) {
    const double dt = trial == 0 ? 1.0 : dts(rng);
    std::vector<FrameDetections> series;
    std::vector<int> counts;
    const int n = len(rng);
    for (int t = 0; t < n; ++t) {
      const int k = m(rng);
      counts.push_back(k);
      FrameDetections f{t * dt, {{{1, 1, 10, 10}, ObjectClass::Patient, 0.9}}};
      for (int j = 0; j < k; ++j) f.detections.push_back({{double(j), 0, 5, 5}, ObjectClass::Worker, conf(rng)});
      series.push_back(f);
    }
    // Integer tally first: M * dt rounded once is the exact sum correctly rounded.
    long long tally = 0;
    double per_term = 0.0;
    for (int k : counts) {
      tally += k;
      per_term += double(k) * dt;
    }
    const double got = nursing_time(series, dt, 0.5);
    o.expect(got == double(tally) * dt, "sum differs from the hand sum on trial " + std::to_string(trial));
    o.expect(std::abs(got - per_term) <= 1e-12 * std::max(1.0, per_term),
             "sum drifts from the term-by-term sum on trial " + std::to_string(trial));
    // Integer counts at dt = 1 make every partial sum exact, so concatenation must add up exactly.
    std::vector<FrameDetections> unit = series;
    for (std::size_t i = 0; i < unit.size(); ++i) unit[i].timestamp = double(i);
    const std::span all(unit);
    const auto cut = std::uniform_int_distribution<std::size_t>(0, all.size())(rng);
    o.expect(nursing_time(all.first(cut), 1.0, 0.5) + nursing_time(all.subspan(cut), 1.0, 0.5) ==
                 nursing_time(all, 1.0, 0.5),
             "not additive at split " + std::to_string(cut));
  }
  if (o.pass) o.detail = "100 series exact, 100 random splits additive";
  return o;
}

Outcome recurrence() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 5);
  const BoundingBox patient{8, 8, 32, 24};
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double dx = u(rng), dy = u(rng), m0 = u(rng);
    const auto flow = testing::uniform_flow(48, 40, dx, dy);
    const double r = std::hypot(dx, dy);
    double m = m0;
    for (int t = 1; t <= 50; ++t) {
      const auto s = motion_step(m, flow, patient, {}, 0.7, t);
      m = s.smoothed;
      const double err = std::abs(std::abs(m - r) - std::pow(0.3, t) * std::abs(m0 - r));
      worst = std::max(worst, err);
    }
    const auto once = motion_step(m0, flow, patient, {}, 1.0);
    o.expect(once.smoothed == once.raw, "alpha = 1 does not reproduce raw");
  }
  o.expect(worst <= 1e-12, "deviation " + fmt_num(worst) + " above 1e-12");
  if (o.pass) o.detail = "max deviation " + fmt_num(worst) + " over t <= 50; alpha = 1 exact";
  return o;
}

Outcome optical_flow() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst_still = 0.0, worst_epe = 0.0;
  std::size_t cases = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const testing::Texture tex(seed);
    const auto base = tex.render(64, 64);
    const auto still = estimate_flow(base, base);
    for (std::size_t i = 0; i < still.dx.size(); ++i)
      worst_still = std::max(worst_still, std::hypot(still.dx[i], still.dy[i]));
    for (int s : {-4, -3, -2, -1, 1, 2, 3, 4})
      for (auto [ax, ay] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{1, 1}, std::pair{1, -1}}) {
        const double sx = s * ax, sy = s * ay;
        const double e = testing::central_epe(estimate_flow(base, tex.render(64, 64, sx, sy)), sx, sy);
        worst_epe = std::max(worst_epe, e);
        ++cases;
      }
  }
  const double secs = seconds_since(t0);
  o.expect(worst_still < 0.05, "identical frames give " + fmt_num(worst_still) + " px");
  o.expect(worst_epe < 0.5, "worst mean endpoint error " + fmt_num(worst_epe) + " px");
  o.expect(secs < 30.0, "runtime " + fmt_num(secs, 3) + " s over 30 s");
  if (o.pass)
    o.detail = "still max " + fmt_num(worst_still) + " px; worst EPE " + fmt_num(worst_epe) + " px over " +
               std::to_string(cases) + " shifted pairs over 20 seeds; " + fmt_num(secs, 3) + " s";
  return o;
}

Outcome polynomial_expansion() {
  Outcome o;
  const std::size_t w = 32, h = 24;
  auto make = [&](auto fn) {
    Image img{w, h, std::vector<double>(w * h)};
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) img.data[y * w + x] = fn(double(x), double(y));
    return img;
  };
  const std::size_t n = 2;  // half-width of the default 5x5 neighbourhood
  auto interior = [&](auto check) {
    for (std::size_t y = n; y < h - n; ++y)
      for (std::size_t x = n; x < w - n; ++x) check(y * w + x, x, y);
  };

  const auto flat = poly_expand(make([](double, double) { return 93.0; }), 5, 1.1);
  interior([&](std::size_t i, auto, auto) {
    for (const auto* v : {&flat.a11, &flat.a12, &flat.a22, &flat.b1, &flat.b2})
      o.expect(std::abs((*v)[i]) < 1e-9, "constant image has non-zero A or b");
  });
  const auto ramp = poly_expand(make([](double x, double) { return 3.0 * x; }), 5, 1.1);
  interior([&](std::size_t i, auto, auto) {
    o.expect(std::abs(ramp.b1[i] - 3.0) < 1e-6 && std::abs(ramp.b2[i]) < 1e-6, "ramp b differs from (3, 0)");
  });

  // Dense weighted least-squares oracle on one interior neighbourhood of x^2.
  const auto sq_img = make([](double x, double) { return x * x; });
  const auto sq = poly_expand(sq_img, 5, 1.1);
  const int px = 15, py = 11;
  Eigen::MatrixXd a(25, 6);
  Eigen::VectorXd f(25);
  int row = 0;
  for (int j = -2; j <= 2; ++j)
    for (int i = -2; i <= 2; ++i) {
      const double sw = std::sqrt(std::exp(-(i * i + j * j) / (2 * 1.1 * 1.1)));
      a.row(row) << sw, sw * i, sw * j, sw * i * i, sw * j * j, sw * i * j;
      f(row) = sw * sq_img.at(std::size_t(px + i), std::size_t(py + j));
      ++row;
    }
  const double oracle_a11 = a.colPivHouseholderQr().solve(f)(3);
  double worst = 0.0;
  interior([&](std::size_t i, auto, auto) { worst = std::max(worst, std::abs(sq.a11[i] - 1.0)); });
  o.expect(worst < 1e-3, "x^2 gives A11 off by " + fmt_num(worst));
  o.expect(std::abs(sq.a11[std::size_t(py) * w + std::size_t(px)] - oracle_a11) < 1e-3, "A11 differs from the oracle");
  if (o.pass) o.detail = "constant, 3x ramp and x^2 within tolerance; oracle A11 = " + fmt_num(oracle_a11, 12);
  return o;
}

Outcome ap_oracle() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> n_gt(1, 5), n_det(0, 8), jitter(-2, 2), coin(0, 1), step(1, 10);
  double worst = 0.0;
  for (int c = 0; c < 200; ++c) {
    std::vector<FrameDetections> gts{{0.0, {}}}, dets{{0.0, {}}};
    const int g = n_gt(rng), d = n_det(rng);
    std::vector<BoundingBox> truth;
    for (int k = 0; k < g; ++k) {
      truth.push_back(testing::random_box(rng, 32));
      gts[0].detections.push_back({truth.back(), ObjectClass::Worker, 1.0});
    }
    std::vector<testing::FlatDet> flat;
    for (int k = 0; k < d; ++k) {
      BoundingBox b = testing::random_box(rng, 32);
      if (coin(rng)) {
        b = truth[std::size_t(rng() % truth.size())];
        b.x += jitter(rng);
        b.y += jitter(rng);
        b.w = std::max(1.0, b.w + jitter(rng));
        b.h = std::max(1.0, b.h + jitter(rng));
      }
      const double conf = step(rng) / 10.0;
      dets[0].detections.push_back({b, ObjectClass::Worker, conf});
      flat.push_back({0, b, conf});
    }
    const auto r = average_precision(dets, gts, 0.5)[1];
    const double want = testing::brute_force_ap(flat, {truth}, 0.5);
    worst = std::max(worst, std::abs(*r.ap - want));
  }
  o.expect(worst <= 1e-12, "max |AP - oracle| = " + fmt_num(worst));

  const std::vector<FrameDetections> gt{{0, {{{0, 0, 10, 10}, ObjectClass::Worker, 1.0}}}};
  const std::vector<FrameDetections> single{{0, {{{0, 0, 10, 6}, ObjectClass::Worker, 0.8}}}};
  o.expect(*average_precision(single, gt, 0.5)[1].ap == 1.0, "single match is not 1.0");
  const std::vector<FrameDetections> two{
      {0, {{{30, 30, 5, 5}, ObjectClass::Worker, 0.9}, {{0, 0, 10, 10}, ObjectClass::Worker, 0.4}}}};
  o.expect(*average_precision(two, gt, 0.5)[1].ap == 0.5, "false-above-true case is not 0.5");
  if (o.pass) o.detail = "200 instances, max |AP - oracle| = " + fmt_num(worst) + "; 1.0 and 0.5 cases exact";
  return o;
}

Outcome table_format() {
  Outcome o;
  auto row = [](const std::string& pred, const std::string& label) {
    return format_duration(time_error(parse_duration(pred), parse_duration(label)));
  };
  o.expect(row("57m25s", "52m10s") == "5m15s", "57m25s vs 52m10s gives " + row("57m25s", "52m10s"));
  o.expect(row("13m38s", "14m10s") == "32s", "13m38s vs 14m10s gives " + row("13m38s", "14m10s"));

  std::ostringstream out, err;
  cli::run({"eval", "--time-row", "57m25s,52m10s"}, out, err);
  o.expect(out.str() == "57m25s,52m10s,5m15s\n", "CLI time row is '" + out.str() + "'");

  std::vector<FrameDetections> gts;
  for (int t = 0; t < 5; ++t)
    gts.push_back({double(t), {{{10, 10, 40, 60}, ObjectClass::Patient, 1.0}, {{60, 10, 10, 20}, ObjectClass::Worker, 1.0}}});
  const std::vector<double> thr{0.5, 0.7, 0.9};
  const auto csv = map_table_csv(mean_ap(gts, gts, thr));
  const std::string want =
      "metric,patient,worker,overall\n"
      "mAP@0.5,1.0000,1.0000,\n"
      "mAP@0.7,1.0000,1.0000,\n"
      "mAP@0.9,1.0000,1.0000,\n"
      "Average,1.0000,1.0000,1.0000\n";
  o.expect(csv == want, "mAP table layout differs");
  if (o.pass) o.detail = "5m15s and 32s rows reproduced; classes x {0.5, 0.7, 0.9} + Average layout";
  return o;
}

struct EndToEnd {
  Outcome closed_loop;
  Outcome determinism;
};

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::fprintf(stderr, "thermoward %s failed: %s", args[0].c_str(), err.str().c_str());
  return code;
}

std::vector<int> csv_column(const std::string& text, std::size_t col) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::size_t start = 0;
    for (std::size_t c = 0; c < col; ++c) start = line.find(',', start) + 1;
    out.push_back(std::stoi(line.substr(start)));
  }
  return out;
}

EndToEnd end_to_end() {
  EndToEnd r;
  Outcome& o = r.closed_loop;
  const auto dir = testing::fresh_dir("acceptance_e2e");
  const auto scenario = synth::reference_scenario();
  io::write_atomic(dir / "scenario.json", synth::scenario_to_json(scenario));

  const auto t0 = Clock::now();
  o.expect(run_cli({"synth", "--scenario", (dir / "scenario.json").string(), "--seed", "2024", "--out",
                    (dir / "session").string()}) == 0,
           "synth failed");
  o.expect(run_cli({"analyze", "--manifest", (dir / "session" / "manifest.json").string(), "--dets",
                    (dir / "session" / "truth.jsonl").string(), "--out", (dir / "run1").string()}) == 0,
           "analyze failed");
  const double secs = seconds_since(t0);
  if (!o.pass) {
    r.determinism = {false, "no first run"};
    return r;
  }

  const auto truth = nlohmann::json::parse(io::read_text(dir / "session" / "truth.json"));
  const auto report = nlohmann::json::parse(io::read_text(dir / "run1" / "report.json"));
  o.expect(report["nursing_time_s"].get<double>() == truth["nursing_time_s"].get<double>(), "nursing time differs");
  o.expect(report["interaction_time_s"].get<double>() == truth["interaction_time_s"].get<double>(),
           "interaction time differs");
  const auto& wc = report["worker_counts"];
  const auto& tf = truth["frames"];
  o.expect(wc.size() == tf.size(), "frame count differs");
  for (std::size_t k = 0; k < std::min(wc.size(), tf.size()); ++k) {
    o.expect(wc[k]["m"] == tf[k]["m"], "worker count differs at frame " + std::to_string(k));
    o.expect(wc[k]["pi"] == tf[k]["pi"], "interaction differs at frame " + std::to_string(k));
  }
  o.expect(secs < 60.0, "synth + analyze took " + fmt_num(secs, 3) + " s");

  // Blob detector on a noise-free rendering of the same script.
  auto quiet = scenario;
  quiet.noise_sigma = 0.0;
  io::write_atomic(dir / "quiet.json", synth::scenario_to_json(quiet));
  const auto t1 = Clock::now();
  o.expect(run_cli({"synth", "--scenario", (dir / "quiet.json").string(), "--seed", "2024", "--out",
                    (dir / "quiet")}) == 0,
           "quiet synth failed");
  o.expect(run_cli({"analyze", "--manifest", (dir / "quiet" / "manifest.json").string(), "--blob", "--out",
                    (dir / "blob").string()}) == 0,
           "blob analyze failed");
  const double blob_secs = seconds_since(t1);
  double worker_acc = 0.0, inter_acc = 0.0;
  if (o.pass) {
    const auto counts = io::read_text(dir / "blob" / "worker_counts.csv");
    std::vector<int> truth_m, truth_pi;
    for (const auto& f : tf) {
      truth_m.push_back(f["m"].get<int>());
      truth_pi.push_back(f["pi"].get<int>());
    }
    worker_acc = counting_accuracy(csv_column(counts, 1), truth_m);
    inter_acc = counting_accuracy(csv_column(counts, 2), truth_pi);
    o.expect(worker_acc >= 0.95, "blob worker counting accuracy " + fmt_num(worker_acc));
    o.expect(inter_acc >= 0.95, "blob interaction counting accuracy " + fmt_num(inter_acc));
    o.expect(blob_secs < 60.0, "blob synth + analyze took " + fmt_num(blob_secs, 3) + " s");
  }
  if (o.pass)
    o.detail = "truth run exact (nursing " + fmt_num(report["nursing_time_s"].get<double>()) + " s, PI " +
               fmt_num(report["interaction_time_s"].get<double>()) + " s, 300 frames) in " + fmt_num(secs, 3) +
               " s; blob accuracy workers " + fmt_num(worker_acc) + ", interaction " + fmt_num(inter_acc) + " in " +
               fmt_num(blob_secs, 3) + " s";

  Outcome& d = r.determinism;
  d.expect(run_cli({"analyze", "--manifest", (dir / "session" / "manifest.json").string(), "--dets",
                    (dir / "session" / "truth.jsonl").string(), "--out", (dir / "run2").string()}) == 0,
           "second analyze failed");
  if (d.pass) {
    d.expect(io::read_bytes(dir / "run1" / "report.json") == io::read_bytes(dir / "run2" / "report.json"),
             "report.json differs between runs");
    d.expect(io::read_bytes(dir / "run1" / "motion.csv") == io::read_bytes(dir / "run2" / "motion.csv"),
             "motion.csv differs between runs");
  }
  if (d.pass) d.detail = "report.json and motion.csv byte-identical across two runs";
  return r;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %2d %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  report(1, "box geometry vs rasterization", box_geometry());
  report(2, "interaction ratio and monotonicity", interaction_semantics());
  report(3, "nursing time sum and additivity", nursing_time_sum());
  report(4, "motion relaxation recurrence", recurrence());
  report(5, "dense optical flow accuracy", optical_flow());
  report(6, "polynomial expansion", polynomial_expansion());
  report(7, "average precision vs brute force", ap_oracle());
  report(8, "duration rows and mAP table layout", table_format());
  const auto e2e = end_to_end();
  report(9, "synthetic end-to-end closed loop", e2e.closed_loop);
  report(10, "deterministic reports", e2e.determinism);
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
