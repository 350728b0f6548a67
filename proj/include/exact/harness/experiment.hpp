#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "exact/guide/guide.hpp"
#include "exact/harness/config.hpp"
#include "exact/phantom/cohort.hpp"

namespace exact::harness {

struct CaseRow {
  std::string case_id;
  std::int64_t ground_truth = 0;
  std::optional<guide::CaseResult> unguided;
  std::optional<guide::CaseResult> guided;
  std::string unguided_error;
  std::string guided_error;
};

struct ModeSummary {
  std::int64_t matches = 0;
  std::int64_t errors = 0;
  double match_rate = 0.0;
  double mean_recall = 0.0;  // mean over cases of matched tumors / tumors
  std::optional<double> mean_dsc;  // over matched kept masks
  std::int64_t dsc_count = 0;
  std::optional<double> ap50, ap70;
  double precision = 0.0;  // pooled TP / (TP + FP)
};

struct ExperimentReport {
  std::string cohort;
  std::uint64_t seed = 42;
  std::string backend;
  detect::DetectorConfig detector;
  std::vector<CaseRow> rows;
  ModeSummary unguided, guided;
  std::optional<double> boost_percent;
  double boost_points = 0.0;
};

/// Orders "2" before "10" and "R9" before "R10".
inline bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])), db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ei = i, ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      std::string na = a.substr(i, ei - i), nb = b.substr(j, ej - j);
      na.erase(0, std::min(na.find_first_not_of('0'), na.size()));
      nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size()));
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return a.size() - i < b.size() - j;
  return a < b;
}

namespace detail {

inline CaseRow run_case(const phantom::CaseSpec& spec, std::uint64_t seed, const detect::Detector& detector,
                        const extract::ExtractionBackend& backend) {
  CaseRow row;
  row.case_id = spec.case_id;
  std::optional<phantom::CohortCase> c;
  std::optional<guide::DetectionStage> stage;
  try {
    c = phantom::generate_case(spec, seed);
    row.ground_truth = static_cast<std::int64_t>(c->gt_boxes.size());
    stage = guide::detect_stage(*c, detector);
  } catch (const std::exception& e) {
    row.unguided_error = row.guided_error = e.what();
    return row;
  }
  auto run = [&](guide::Mode mode, std::optional<guide::CaseResult>& out, std::string& err) {
    try {
      out = guide::finish_pipeline(*c, *stage, mode, detector, &backend);
      out->masks.clear();
      out->masks.shrink_to_fit();
    } catch (const std::exception& e) {
      err = e.what();
    }
  };
  run(guide::Mode::unguided, row.unguided, row.unguided_error);
  run(guide::Mode::guided, row.guided, row.guided_error);
  return row;
}

inline ModeSummary summarize(const std::vector<CaseRow>& rows, bool guided) {
  ModeSummary s;
  std::vector<metrics::ImageDetections> images;
  metrics::MatchResult pooled;
  double dsc_sum = 0.0, recall_sum = 0.0;
  for (const auto& row : rows) {
    const auto& r = guided ? row.guided : row.unguided;
    if (!r) {
      ++s.errors;
      continue;
    }
    if (r->outcome.verdict == metrics::Verdict::Match) ++s.matches;
    recall_sum += r->outcome.gt_count == 0 ? 1.0
                                           : static_cast<double>(r->outcome.match.tp) /
                                                 static_cast<double>(r->outcome.gt_count);
    for (double d : r->matched_dsc) {
      dsc_sum += d;
      ++s.dsc_count;
    }
    pooled.tp += r->outcome.match.tp;
    pooled.fp += r->outcome.match.fp;
    images.push_back({detect::as_detections(r->kept), r->gt_boxes});
  }
  const auto n = static_cast<double>(rows.size());
  s.match_rate = rows.empty() ? 0.0 : static_cast<double>(s.matches) / n;
  s.mean_recall = rows.empty() ? 0.0 : recall_sum / n;
  if (s.dsc_count > 0) s.mean_dsc = dsc_sum / static_cast<double>(s.dsc_count);
  s.precision = metrics::class_mean_precision({pooled});
  std::size_t n_gt = 0;
  for (const auto& im : images) n_gt += im.gts.size();
  if (n_gt > 0) {
    s.ap50 = metrics::average_precision(images, 0.5);
    s.ap70 = metrics::average_precision(images, 0.7);
  }
  return s;
}

inline std::string fmt(double v, int digits = 6) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

}  // namespace detail

/// Runs both modes over every case. Cases fan out over `parallelism`
/// threads; rows are merged in natural case-id order, so the report does not
/// depend on scheduling.
inline ExperimentReport compute_experiment(const ExperimentConfig& cfg) {
  const detect::ReferenceDetector detector(cfg.detector);
  const auto backend = make_backend(cfg.backend, cfg.cohort, cfg.seed);
  const auto& cases = cfg.cohort.cases;
  {
    std::set<std::string> ids;
    for (const auto& c : cases)
      require(ids.insert(c.case_id).second, Errc::config, "duplicate case id '" + c.case_id + "'");
  }
  std::vector<CaseRow> rows(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++)
      rows[i] = detail::run_case(cases[i], phantom::case_seed(cfg.seed, i), detector, *backend);
  };
  const int n_threads = std::min<int>(cfg.parallelism, static_cast<int>(std::max<std::size_t>(1, cases.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CaseRow& a, const CaseRow& b) { return natural_less(a.case_id, b.case_id); });

  ExperimentReport rep;
  rep.cohort = cfg.cohort.name;
  rep.seed = cfg.seed;
  rep.backend = backend->name();
  rep.detector = cfg.detector;
  rep.rows = std::move(rows);
  rep.unguided = detail::summarize(rep.rows, false);
  rep.guided = detail::summarize(rep.rows, true);
  const auto n = static_cast<std::int64_t>(rep.rows.size());
  if (n > 0) {
    rep.boost_points = metrics::boost_points(rep.unguided.matches, rep.guided.matches, n);
    if (rep.unguided.matches > 0) rep.boost_percent = metrics::boost_percent(rep.unguided.matches, rep.guided.matches, n);
  }
  return rep;
}

namespace detail {
inline nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

inline nlohmann::ordered_json to_json(const ModeSummary& s) {
  nlohmann::ordered_json j;
  j["matches"] = s.matches;
  j["errors"] = s.errors;
  j["match_rate"] = s.match_rate;
  j["mean_recall"] = s.mean_recall;
  j["mean_dsc"] = optional_number(s.mean_dsc);
  j["dsc_count"] = s.dsc_count;
  j["ap50"] = optional_number(s.ap50);
  j["ap70"] = optional_number(s.ap70);
  j["precision"] = s.precision;
  return j;
}
}  // namespace detail

inline nlohmann::ordered_json to_json(const ExperimentReport& rep) {
  nlohmann::ordered_json j;
  j["schema"] = "exact.experiment/1";
  j["cohort"] = rep.cohort;
  j["seed"] = rep.seed;
  j["backend"] = rep.backend;
  j["detector"] = to_json(rep.detector);
  j["n_cases"] = rep.rows.size();
  j["unguided"] = detail::to_json(rep.unguided);
  j["guided"] = detail::to_json(rep.guided);
  j["boost_percent"] = detail::optional_number(rep.boost_percent);
  j["boost_points"] = rep.boost_points;
  j["cases"] = nlohmann::ordered_json::array();
  for (const auto& row : rep.rows) {
    nlohmann::ordered_json cj;
    cj["case_id"] = row.case_id;
    cj["ground_truth"] = row.ground_truth;
    cj["unguided"] = row.unguided ? guide::to_json(*row.unguided) : nlohmann::ordered_json();
    cj["guided"] = row.guided ? guide::to_json(*row.guided) : nlohmann::ordered_json();
    cj["unguided_error"] = row.unguided_error.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(row.unguided_error);
    cj["guided_error"] = row.guided_error.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(row.guided_error);
    j["cases"].push_back(std::move(cj));
  }
  return j;
}

/// Structural check of report.json. Returns one message per violation.
inline std::vector<std::string> validate_report_json(const nlohmann::json& j) {
  std::vector<std::string> bad;
  auto need = [&](const nlohmann::json& o, const std::string& where, const char* key, auto pred, const char* type) {
    if (!o.is_object() || !o.contains(key)) {
      bad.push_back(where + "." + key + " missing");
    } else if (!pred(o.at(key))) {
      bad.push_back(where + "." + key + " is not " + type);
    }
  };
  const auto is_str = [](const nlohmann::json& v) { return v.is_string(); };
  const auto is_int = [](const nlohmann::json& v) { return v.is_number_integer(); };
  const auto is_num = [](const nlohmann::json& v) { return v.is_number(); };
  const auto is_num_or_null = [](const nlohmann::json& v) { return v.is_number() || v.is_null(); };
  const auto is_rate = [](const nlohmann::json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; };
  const auto is_arr = [](const nlohmann::json& v) { return v.is_array(); };
  const auto is_obj_or_null = [](const nlohmann::json& v) { return v.is_object() || v.is_null(); };
  const auto is_str_or_null = [](const nlohmann::json& v) { return v.is_string() || v.is_null(); };

  if (!j.is_object()) return {"report is not an object"};
  need(j, "$", "schema", [](const nlohmann::json& v) { return v == "exact.experiment/1"; }, "exact.experiment/1");
  need(j, "$", "cohort", is_str, "a string");
  need(j, "$", "seed", is_int, "an integer");
  need(j, "$", "backend", is_str, "a string");
  need(j, "$", "detector", [](const nlohmann::json& v) { return v.is_object(); }, "an object");
  need(j, "$", "n_cases", is_int, "an integer");
  need(j, "$", "boost_percent", is_num_or_null, "a number or null");
  need(j, "$", "boost_points", is_num, "a number");
  for (const char* mode : {"unguided", "guided"}) {
    need(j, "$", mode, [](const nlohmann::json& v) { return v.is_object(); }, "an object");
    if (!j.contains(mode) || !j[mode].is_object()) continue;
    const std::string w = std::string("$.") + mode;
    need(j[mode], w, "matches", is_int, "an integer");
    need(j[mode], w, "errors", is_int, "an integer");
    need(j[mode], w, "match_rate", is_rate, "a rate in [0, 1]");
    need(j[mode], w, "mean_recall", is_rate, "a rate in [0, 1]");
    need(j[mode], w, "mean_dsc", is_num_or_null, "a number or null");
    need(j[mode], w, "dsc_count", is_int, "an integer");
    need(j[mode], w, "ap50", is_num_or_null, "a number or null");
    need(j[mode], w, "ap70", is_num_or_null, "a number or null");
    need(j[mode], w, "precision", is_rate, "a rate in [0, 1]");
  }
  need(j, "$", "cases", is_arr, "an array");
  if (!j.contains("cases") || !j["cases"].is_array()) return bad;
  if (j.contains("n_cases") && j["n_cases"].is_number_integer() && j["n_cases"].get<std::size_t>() != j["cases"].size())
    bad.push_back("$.n_cases disagrees with $.cases length");
  for (std::size_t i = 0; i < j["cases"].size(); ++i) {
    const auto& c = j["cases"][i];
    const std::string w = "$.cases[" + std::to_string(i) + "]";
    need(c, w, "case_id", is_str, "a string");
    need(c, w, "ground_truth", is_int, "an integer");
    need(c, w, "unguided_error", is_str_or_null, "a string or null");
    need(c, w, "guided_error", is_str_or_null, "a string or null");
    for (const char* mode : {"unguided", "guided"}) {
      need(c, w, mode, is_obj_or_null, "an object or null");
      if (!c.contains(mode) || !c[mode].is_object()) continue;
      const auto& r = c[mode];
      const std::string wm = w + "." + mode;
      need(r, wm, "case_id", is_str, "a string");
      need(r, wm, "mode", [&](const nlohmann::json& v) { return v == mode; }, mode);
      for (const char* k : {"detected", "removed", "discarded_no_lobe", "ground_truth", "tp", "fp", "fn"})
        need(r, wm, k, is_int, "an integer");
      need(r, wm, "kept", is_arr, "an array");
      need(r, wm, "matched_dsc", is_arr, "an array");
      need(r, wm, "outcome", [](const nlohmann::json& v) { return v == "Match" || v == "NoFN" || v == "NoFP"; },
           "Match, NoFN or NoFP");
      need(r, wm, "matching_ground_truth", [](const nlohmann::json& v) { return v == "Yes" || v == "No" || v == "No (FP)"; },
           "a table label");
      if (r.contains("kept") && r["kept"].is_array()) {
        for (std::size_t k = 0; k < r["kept"].size(); ++k) {
          const auto& kc = r["kept"][k];
          const std::string wk = wm + ".kept[" + std::to_string(k) + "]";
          const auto is_triple = [](const nlohmann::json& v) { return v.is_array() && v.size() == 3; };
          need(kc, wk, "box_min", is_triple, "a 3-vector");
          need(kc, wk, "box_max", is_triple, "a 3-vector");
          need(kc, wk, "score", is_num, "a number");
          need(kc, wk, "lobe", [](const nlohmann::json& v) { return v.is_string() && try_parse_lobe(v.get<std::string>()); },
               "a lobe code");
        }
      }
    }
  }
  return bad;
}

/// One row per case with guided-mode counts and verdict.
inline std::string table3_csv(const ExperimentReport& rep) {
  std::string out = "case_id,ground_truth,detected_nodules,removed_nodules,matching_ground_truth\n";
  for (const auto& row : rep.rows) {
    out += row.case_id + "," + std::to_string(row.ground_truth) + ",";
    if (row.guided) {
      out += std::to_string(row.guided->detected) + "," + std::to_string(row.guided->removed) + "," +
             std::string(metrics::table_label(row.guided->outcome.verdict));
    } else {
      out += (row.unguided ? std::to_string(row.unguided->detected) : std::string()) + ",,Error";
    }
    out += "\n";
  }
  return out;
}

inline std::string summary_text(const ExperimentReport& rep) {
  using detail::fmt;
  std::ostringstream o;
  const auto n = rep.rows.size();
  o << "cohort " << rep.cohort << " (" << n << " cases), seed " << rep.seed << ", backend " << rep.backend << "\n";
  for (const auto* m : {&rep.unguided, &rep.guided}) {
    o << (m == &rep.guided ? "guided  " : "unguided") << "  matches " << m->matches << "/" << n << " ("
      << fmt(100.0 * m->match_rate, 1) << "%)  recall " << fmt(m->mean_recall, 3) << "  precision "
      << fmt(m->precision, 3) << "  mean DSC " << (m->mean_dsc ? fmt(*m->mean_dsc, 3) : "n/a") << "  AP@0.5 "
      << (m->ap50 ? fmt(*m->ap50, 3) : "n/a") << "  AP@0.7 " << (m->ap70 ? fmt(*m->ap70, 3) : "n/a");
    if (m->errors) o << "  errors " << m->errors;
    o << "\n";
  }
  o << "boost " << (rep.boost_percent ? fmt(*rep.boost_percent, 1) + "%" : std::string("undefined (no unguided matches)"))
    << ", " << fmt(rep.boost_points, 1) << " percentage points\n";
  for (const auto& row : rep.rows) {
    if (!row.unguided_error.empty()) o << "case " << row.case_id << " unguided error: " << row.unguided_error << "\n";
    if (!row.guided_error.empty()) o << "case " << row.case_id << " guided error: " << row.guided_error << "\n";
  }
  return o.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io, "cannot write '" + path.string() + "'");
  out << text;
  out.close();
  require(!out.fail(), Errc::io, "write to '" + path.string() + "' failed");
}

/// Writes table3.csv, report.json and summary.txt into `dir`.
inline void emit_reports(const ExperimentReport& rep, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, Errc::io, "cannot create '" + dir.string() + "': " + ec.message());
  write_text_file(dir / "table3.csv", table3_csv(rep));
  write_text_file(dir / "report.json", to_json(rep).dump(2) + "\n");
  write_text_file(dir / "summary.txt", summary_text(rep));
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep = compute_experiment(cfg);
  emit_reports(rep, cfg.output_dir);
  return rep;
}

}  // namespace exact::harness
