// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Each check compares against independent oracles or published
// values, never against output of the code under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "exact/exact.hpp"
#include "files.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace exact;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Collects failed sub-checks; the criterion passes only if none failed.
struct Checks {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  Verdict verdict(const std::string& summary) const {
    if (failures.empty()) return {true, summary};
    std::string d = summary + "; " + std::to_string(failures.size()) + " failed: " + failures.front();
    return {false, d};
  }
};

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("exact_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

harness::ExperimentReport run_table3() {
  harness::ExperimentConfig cfg;
  cfg.cohort = harness::table3_cohort();
  cfg.seed = 42;
  return harness::compute_experiment(cfg);
}

// Published rows: ground truth, detected, removed, matching label.
struct PublishedRow {
  int gt, detected, removed;
  const char* match;
};
constexpr PublishedRow kPublishedRows[] = {{1, 2, 1, "Yes"}, {1, 1, 0, "Yes"}, {1, 1, 0, "Yes"}, {2, 7, 5, "Yes"},
                                     {2, 4, 2, "Yes"}, {1, 0, 0, "No"},  {2, 5, 3, "Yes"}, {1, 4, 2, "No (FP)"},
                                     {1, 3, 2, "Yes"}, {1, 1, 1, "No"}};

Verdict table3_reproduction() {
  const auto rep = run_table3();
  Checks c;
  c.expect(rep.rows.size() == 10, "expected 10 rows");
  for (std::size_t i = 0; i < rep.rows.size() && i < 10; ++i) {
    const auto& row = rep.rows[i];
    const auto& want = kPublishedRows[i];
    const std::string id = "case " + std::to_string(i + 1);
    c.expect(row.case_id == std::to_string(i + 1), id + " out of order");
    c.expect(row.guided.has_value(), id + " guided run failed: " + row.guided_error);
    if (!row.guided) continue;
    c.expect(row.ground_truth == want.gt, id + " ground truth");
    c.expect(row.guided->detected == want.detected, id + " detected " + std::to_string(row.guided->detected));
    c.expect(row.guided->removed == want.removed, id + " removed " + std::to_string(row.guided->removed));
    c.expect(metrics::table_label(row.guided->outcome.verdict) == want.match, id + " outcome");
  }
  c.expect(rep.unguided.matches == 2, "unguided matches " + std::to_string(rep.unguided.matches));
  c.expect(rep.guided.matches == 7, "guided matches " + std::to_string(rep.guided.matches));
  c.expect(rep.boost_percent && *rep.boost_percent == 250.0, "boost not exactly 250%");
  return c.verdict("unguided " + std::to_string(rep.unguided.matches) + "/10, guided " +
                   std::to_string(rep.guided.matches) + "/10, boost " +
                   (rep.boost_percent ? fixed(*rep.boost_percent, 1) + "%" : std::string("undefined")));
}

Verdict loss_correctness() {
  using namespace exact::losses;
  using V = std::vector<double>;
  Checks c;
  auto near = [&](double got, double want, double tol, const std::string& what) {
    c.expect(std::abs(got - want) <= tol, what + " = " + fixed(got, 8));
  };
  near(cross_entropy(V{1, 0}, V{1, 0}), 0.0, 1e-5, "ce([1,0],[1,0])");
  near(cross_entropy(V{0.5, 0.5}, V{1, 0}), std::log(2.0), 1e-6, "ce half");
  near(cross_entropy(V{0.25, 0.75}, V{0, 1}), -std::log(0.75), 1e-6, "ce 0.75");
  near(dice_loss(V{1, 0, 1}, V{1, 0, 1}), 0.0, 1e-6, "dice identical");
  near(dice_loss(V{0, 1}, V{1, 0}), 1.0, 1e-6, "dice disjoint");
  near(dice_loss(V{1, 0, 0, 0}, V{1, 1, 0, 0}), 1.0 - 2.0 / 3.0, 1e-5, "dice partial");
  near(dual_loss(V{1, 0}, V{1, 0}), 0.0, 1e-5, "dual zero");
  near(dual_loss(V{0.5, 0.5}, V{1, 0}), std::log(2.0) + dice_loss(V{0.5, 0.5}, V{1, 0}), 1e-6, "dual sum");
  near(smooth_l1(V{1, 2, 3}, V{1, 2, 3}), 0.0, 1e-5, "smooth l1 equal");
  near(smooth_l1_of_mae(0.5, 1.0), 0.5 * 0.25, 1e-5, "smooth l1 mae 0.5");
  near(smooth_l1_of_mae(2.0, 1.0), 2.0 - 0.5, 1e-5, "smooth l1 mae 2");
  near(focal_loss(1.0, 1), 0.0, 1e-5, "focal p=1");
  near(focal_loss(0.9, 1), 0.25 * 0.01 * -std::log(0.9), 1e-7, "focal y=1");
  near(focal_loss(0.9, 0), 0.75 * 0.81 * -std::log(0.1), 1e-5, "focal y=0");

  Rng rng(808);
  const double h = 1e-6, tol = 1e-5;
  int n_ce = 0, n_dice = 0, n_dual = 0, n_sl1 = 0, n_focal = 0;
  while (n_ce < 100 || n_dice < 100 || n_dual < 100 || n_sl1 < 100 || n_focal < 100) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 8));
    V p(n), y(n);
    for (auto& v : p) v = rng.uniform(0.05, 0.95);
    for (auto& v : y) v = rng.bernoulli(0.5);
    y[0] = 1.0;
    auto fy = [&y](double (*f)(std::span<const double>, std::span<const double>)) {
      return [f, &y](std::span<const double> q) { return f(q, y); };
    };
    c.expect(oracle::gradient_rel_error(fy(cross_entropy), cross_entropy_grad(p, y), p, h) < tol, "ce gradient");
    c.expect(oracle::gradient_rel_error(fy(dice_loss), dice_loss_grad(p, y), p, h) < tol, "dice gradient");
    c.expect(oracle::gradient_rel_error(fy(dual_loss), dual_loss_grad(p, y), p, h) < tol, "dual gradient");
    ++n_ce, ++n_dice, ++n_dual;

    // Interior points only: away from |pred - gt| = 0 and from MAE = delta.
    V pred(6), gt(6);
    for (std::size_t i = 0; i < 6; ++i) {
      gt[i] = rng.uniform(-3, 3);
      do pred[i] = gt[i] + rng.uniform(-3, 3);
      while (std::abs(pred[i] - gt[i]) < 1e-3);
    }
    if (std::abs(mean_absolute_error(pred, gt) - 1.0) > 1e-3) {
      auto f = [&gt](std::span<const double> q) { return smooth_l1(q, gt, 1.0); };
      c.expect(oracle::gradient_rel_error(f, smooth_l1_grad(pred, gt, 1.0), pred, h) < tol, "smooth l1 gradient");
      ++n_sl1;
    }
    const double q = rng.uniform(0.02, 0.98);
    const int t = rng.bernoulli(0.5);
    auto fl = [t](std::span<const double> x) { return focal_loss(x[0], t); };
    c.expect(oracle::gradient_rel_error(fl, {focal_loss_grad(q, t)}, {q}, h) < tol, "focal gradient");
    ++n_focal;
  }
  return c.verdict("hand values ok, gradient points ce/dice/dual/smoothL1/focal = " + std::to_string(n_ce) + "/" +
                   std::to_string(n_dice) + "/" + std::to_string(n_dual) + "/" + std::to_string(n_sl1) + "/" +
                   std::to_string(n_focal));
}

Verdict metric_oracles() {
  using namespace exact::metrics;
  Checks c;
  Rng rng(303);
  for (int t = 0; t < 200; ++t) {
    Mask a(Geometry{{16, 16, 16}, {1, 1, 1}, {0, 0, 0}}, 0), b = a;
    const double pa = rng.uniform(0.0, 0.6), pb = rng.uniform(0.0, 0.6);
    for (auto& v : a.voxels()) v = rng.bernoulli(pa);
    for (auto& v : b.voxels()) v = rng.bernoulli(pb);
    const auto ref = oracle::dice_counts_triple_loop(a, b);
    const auto got = overlap_counts(a, b);
    c.expect(got.a == ref.a && got.b == ref.b && got.both == ref.inter, "DSC voxel counts, pair " + std::to_string(t));
    const double want = ref.a + ref.b == 0 ? 1.0 : 2.0 * ref.inter / static_cast<double>(ref.a + ref.b);
    c.expect(dsc(a, b) == want, "DSC value, pair " + std::to_string(t));
  }
  for (int t = 0; t < 200; ++t) {
    auto box = [&] {
      Index3 lo, hi;
      for (int k = 0; k < 3; ++k) {
        lo[k] = rng.uniform_int(0, 12);
        hi[k] = lo[k] + rng.uniform_int(1, 4);
      }
      return BBox3{lo, hi};
    };
    const BBox3 a = box(), b = box();
    const auto pa = oracle::rasterize(a), pb = oracle::rasterize(b);
    std::size_t inter = 0;
    for (const auto& v : pa) inter += b.contains(v);
    const std::size_t uni = pa.size() + pb.size() - inter;
    c.expect(intersection_volume(a, b) == static_cast<std::int64_t>(inter), "IoU intersection count, pair " + std::to_string(t));
    c.expect(iou3d(a, b) == static_cast<double>(inter) / static_cast<double>(uni), "IoU value, pair " + std::to_string(t));
  }

  const oracle::MatchingWorld w;
  std::size_t mismatches = 0;
  const std::size_t configs = w.enumerate(5, [&](const std::vector<Detection>& dets,
                                                 const std::vector<std::size_t>& box_idx, std::size_t n_gt) {
    const std::vector<BBox3> gts(w.gt_pool.begin(), w.gt_pool.begin() + static_cast<std::ptrdiff_t>(n_gt));
    std::vector<std::vector<double>> iou;
    for (std::size_t b : box_idx) iou.emplace_back(w.iou[b].begin(), w.iou[b].begin() + static_cast<std::ptrdiff_t>(n_gt));
    for (double thr : {0.5, 0.7}) {
      const auto ref = oracle::greedy_match(dets, gts, thr, iou);
      const auto got = match_detections(dets, gts, thr);
      bool same = ref.tp == got.tp && ref.fp == got.fp && ref.fn == got.fn;
      for (const auto& p : got.pairs) same = same && ref.det_to_gt[p.det] == static_cast<int>(p.gt);
      if (n_gt > 0)
        same = same && std::abs(average_precision(dets, gts, thr) - oracle::average_precision_by_curve(dets, ref, n_gt)) < 1e-12;
      mismatches += !same;
    }
  });
  c.expect(mismatches == 0, std::to_string(mismatches) + " matching/AP mismatches");
  return c.verdict("200 DSC pairs, 200 IoU pairs, " + std::to_string(configs) + " matching configurations");
}

Verdict cohort_properties() {
  harness::ExperimentConfig cfg;
  cfg.cohort = phantom::random_cohort_spec(50, 42);
  cfg.seed = 42;
  const auto rep = harness::compute_experiment(cfg);
  Checks c;
  c.expect(rep.rows.size() == 50, "expected 50 cases");
  std::size_t subset_ok = 0;
  for (const auto& row : rep.rows) {
    c.expect(row.unguided && row.guided, "case " + row.case_id + " errored: " + row.unguided_error + row.guided_error);
    if (!row.unguided || !row.guided) continue;
    bool subset = true;
    for (const auto& k : row.guided->kept)
      subset = subset && std::find(row.unguided->kept.begin(), row.unguided->kept.end(), k) != row.unguided->kept.end();
    c.expect(subset, "case " + row.case_id + " guided kept set not within unguided");
    subset_ok += subset;
  }
  const double recall = rep.unguided.mean_recall;
  const double dsc = rep.unguided.mean_dsc.value_or(0.0);
  c.expect(recall >= 0.9, "mean true-tumor recall " + fixed(recall, 3));
  c.expect(rep.unguided.mean_dsc.has_value() && dsc >= 0.8, "mean kept-tumor DSC " + fixed(dsc, 3));
  return c.verdict("recall " + fixed(recall, 3) + ", mean DSC " + fixed(dsc, 3) + " over " +
                   std::to_string(rep.unguided.dsc_count) + " masks, subset holds on " + std::to_string(subset_ok) +
                   "/50");
}

Verdict extraction_accuracy() {
  Checks c;
  const fs::path dir = testfiles::data_dir() / "reports";
  const auto truth = nlohmann::json::parse(testfiles::read(dir / "phenotypes.json"));
  const extract::RuleBackend rule;
  const extract::MockBackend mock(extract::load_mock_fixtures((dir / "mock_fixtures.json").string()));
  int rule_ok = 0, mock_ok = 0;
  for (const auto& [name, pj] : truth.items()) {
    const std::string report = testfiles::read(dir / name);
    const TumorPhenotype want = extract::phenotype_from_json(pj);
    try {
      const bool r = extract::extract_phenotype(report, rule) == want;
      c.expect(r, "rule on " + name);
      rule_ok += r;
    } catch (const std::exception& e) {
      c.expect(false, "rule on " + name + ": " + e.what());
    }
    try {
      const bool m = extract::extract_phenotype(report, mock) == want;
      c.expect(m, "mock on " + name);
      mock_ok += m;
    } catch (const std::exception& e) {
      c.expect(false, "mock on " + name + ": " + e.what());
    }
  }
  c.expect(truth.size() == 30, "expected 30 bundled reports");
  return c.verdict("rule " + std::to_string(rule_ok) + "/30, mock " + std::to_string(mock_ok) + "/30");
}

Verdict wire_golden() {
  Checks c;
  const fs::path g = testfiles::golden_dir();
  const std::string report = testfiles::read(g / "report.txt");
  const std::string lobe = extract::serialize_request(extract::build_chat_request(report, extract::PromptKind::lobe));
  const std::string lymph = extract::serialize_request(extract::build_chat_request(report, extract::PromptKind::lymph));
  c.expect(lobe == testfiles::read(g / "chat_request_lobe.json"), "lobe request differs from golden file");
  c.expect(lymph == testfiles::read(g / "chat_request_lymph.json"), "lymph request differs from golden file");
  c.expect(lobe.find("\"temperature\":0,") != std::string::npos, "lobe temperature not rendered as 0");
  c.expect(lobe.find("find the current lung lobe that the determinate tumor/carcinoma/malignancy is involving in "
                     "this report:\\n") != std::string::npos,
           "lobe prompt not verbatim");
  c.expect(lymph.find("find out what lymph station/node are malignant in this report:\\n") != std::string::npos,
           "lymph prompt not verbatim");
  return c.verdict("lobe " + std::to_string(lobe.size()) + " bytes, lymph " + std::to_string(lymph.size()) + " bytes");
}

Verdict determinism() {
  Checks c;
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  harness::emit_reports(run_table3(), a);
  harness::emit_reports(run_table3(), b);
  int files = 0;
  for (const char* f : {"table3.csv", "report.json", "summary.txt"}) {
    c.expect(testfiles::read(a / f) == testfiles::read(b / f), std::string(f) + " differs between runs");
    ++files;
  }
  const auto spec = harness::table3_cohort().cases[3];
  harness::save_case(phantom::generate_case(spec, 42), a / "case");
  harness::save_case(phantom::generate_case(spec, 42), b / "case");
  for (const auto& e : fs::directory_iterator(a / "case")) {
    c.expect(testfiles::read(e.path()) == testfiles::read(b / "case" / e.path().filename()),
             e.path().filename().string() + " differs between runs");
    ++files;
  }

  Rng rng(77);
  int roundtrips = 0;
  for (int t = 0; t < 20; ++t, ++roundtrips) {
    const Index3 d{rng.uniform_int(1, 24), rng.uniform_int(1, 24), rng.uniform_int(1, 24)};
    const Geometry geo{d, {rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0)},
                       {rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(-200, 200)}};
    AnyVolume vol;
    if (t % 2 == 0) {
      Volume v(geo);
      for (float& f : v.voxels()) f = static_cast<float>(rng.normal(0.0, 800.0));
      vol = std::move(v);
    } else {
      Image<std::uint8_t> v(geo);
      for (auto& u : v.voxels()) u = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
      vol = std::move(v);
    }
    const fs::path p = a / ("vol_" + std::to_string(t) + ".exnv");
    write_volume(vol, p);
    const AnyVolume back = read_volume(p);
    c.expect(back == vol, "EXNV roundtrip " + std::to_string(t) + " not bit-exact");
    c.expect(encode_volume(back) == encode_volume(vol), "EXNV re-encode " + std::to_string(t) + " differs");
  }
  return c.verdict(std::to_string(files) + " emitted files identical, " + std::to_string(roundtrips) +
                   " EXNV roundtrips (f32 and u8)");
}

Verdict guidance_invariants() {
  Checks c;
  int total = 0;
  std::string parts;
  for (const auto& t : props::run_all(4242, 2)) {
    c.expect(t.violations == 0, t.name + ": " + t.first_failure);
    total += t.trials;
    parts += (parts.empty() ? "" : ", ") + t.name + " " + std::to_string(t.trials);
  }
  c.expect(total >= 1000, "only " + std::to_string(total) + " trials");
  return c.verdict(std::to_string(total) + " trials (" + parts + ")");
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no runtime limit
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "ten-case table3 fixture reproduction", 60.0, table3_reproduction},
      {2, "loss correctness", 10.0, loss_correctness},
      {3, "metric oracle equivalence", 30.0, metric_oracles},
      {4, "50-case phantom cohort recall, DSC and subset invariant", 300.0, cohort_properties},
      {5, "extraction accuracy on 30 bundled reports", 5.0, extraction_accuracy},
      {6, "wire-protocol golden requests", 0.0, wire_golden},
      {7, "determinism and EXNV roundtrip", 0.0, determinism},
      {8, "guidance invariants property suite", 0.0, guidance_invariants},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.limit_s > 0.0 && secs >= cr.limit_s) {
      v.pass = false;
      v.detail += "; runtime over " + fixed(cr.limit_s, 0) + " s";
    }
    failed += !v.pass;
    std::printf("%s criterion %d: %s (%.2f s) - %s\n", v.pass ? "PASS" : "FAIL", cr.id, cr.name, secs,
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
