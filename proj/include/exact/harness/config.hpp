#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "exact/detect/detector.hpp"
#include "exact/extract/backend.hpp"
#include "exact/generated/table3_fixture.hpp"
#include "exact/phantom/cohort.hpp"

namespace exact::harness {

struct BackendConfig {
  std::string kind = "rule";  // rule | mock | chat
  std::string fixtures;       // mock: fixture file (empty: derive answers from ground truth)
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  int retries = 3;
  int backoff_ms = 1000;
};

struct ExperimentConfig {
  phantom::CohortSpec cohort;
  std::uint64_t seed = 42;
  detect::DetectorConfig detector;
  BackendConfig backend;
  std::string output_dir = "out";
  int parallelism = 1;
};

inline phantom::CohortSpec table3_cohort() {
  return phantom::cohort_from_json(nlohmann::json::parse(generated::kTable3FixtureJson));
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline detect::DetectorConfig detector_from_json(const nlohmann::json& j) {
  detect::DetectorConfig c;
  require(j.is_object(), Errc::config, "detector config must be an object");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("hu_threshold", c.hu_threshold);
  get("min_volume_mm3", c.min_volume_mm3);
  get("max_volume_mm3", c.max_volume_mm3);
  get("classifier_threshold", c.classifier_threshold);
  get("nms_iou", c.nms_iou);
  get("detect_patch", c.detect_patch);
  get("segment_patch", c.segment_patch);
  get("context_window_mm", c.context_window_mm);
  get("context_min_hu", c.context_min_hu);
  get("context_max_hu", c.context_max_hu);
  get("context_fraction", c.context_fraction);
  get("score_contrast_hu", c.score_contrast_hu);
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known = {"hu_threshold", "min_volume_mm3", "max_volume_mm3",
                                                "classifier_threshold", "nms_iou", "detect_patch", "segment_patch",
                                                "context_window_mm", "context_min_hu", "context_max_hu",
                                                "context_fraction", "score_contrast_hu"};
    require(known.count(key) > 0, Errc::config, "unknown detector option '" + key + "'");
  }
  try {
    c.validate();
  } catch (const Error& e) {
    fail(Errc::config, e.what());
  }
  return c;
}

inline nlohmann::ordered_json to_json(const detect::DetectorConfig& c) {
  nlohmann::ordered_json j;
  j["hu_threshold"] = c.hu_threshold;
  j["min_volume_mm3"] = c.min_volume_mm3;
  j["max_volume_mm3"] = c.max_volume_mm3;
  j["classifier_threshold"] = c.classifier_threshold;
  j["nms_iou"] = c.nms_iou;
  j["detect_patch"] = c.detect_patch;
  j["segment_patch"] = c.segment_patch;
  j["context_window_mm"] = c.context_window_mm;
  j["context_min_hu"] = c.context_min_hu;
  j["context_max_hu"] = c.context_max_hu;
  j["context_fraction"] = c.context_fraction;
  j["score_contrast_hu"] = c.score_contrast_hu;
  return j;
}

/// Cohort selector: "table3", a path to a cohort spec, {"random": {n, seed}},
/// or an inline spec with a "cases" array. Paths resolve against `base`.
inline phantom::CohortSpec cohort_from_selector(const nlohmann::json& j, const std::filesystem::path& base) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "table3") return table3_cohort();
    const std::filesystem::path p = std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base / s;
    return phantom::load_cohort_spec(p);
  }
  require(j.is_object(), Errc::config, "cohort must be a name, a path or an object");
  if (j.contains("random")) {
    const auto& r = j.at("random");
    auto spec = phantom::random_cohort_spec(r.value("n", std::size_t{50}), r.value("seed", std::uint64_t{42}));
    spec.name = r.value("name", std::string("random"));
    return spec;
  }
  return phantom::cohort_from_json(j);
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = ".") {
  require(j.is_object(), Errc::config, "experiment config must be a JSON object");
  static const std::set<std::string> known = {"cohort", "seed", "detector", "backend", "output_dir", "parallelism"};
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, Errc::config, "unknown experiment option '" + key + "'");
  ExperimentConfig c;
  try {
    c.cohort = cohort_from_selector(j.value("cohort", nlohmann::json("table3")), base);
    c.seed = j.value("seed", std::uint64_t{42});
    if (j.contains("detector")) c.detector = detector_from_json(j.at("detector"));
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      c.backend.kind = b.value("kind", c.backend.kind);
      c.backend.fixtures = b.value("fixtures", c.backend.fixtures);
      if (!c.backend.fixtures.empty() && std::filesystem::path(c.backend.fixtures).is_relative())
        c.backend.fixtures = (base / c.backend.fixtures).string();
      c.backend.endpoint = b.value("endpoint", c.backend.endpoint);
      c.backend.model = b.value("model", c.backend.model);
      c.backend.retries = b.value("retries", c.backend.retries);
      c.backend.backoff_ms = b.value("backoff_ms", c.backend.backoff_ms);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    if (std::filesystem::path(c.output_dir).is_relative()) c.output_dir = (base / c.output_dir).string();
    c.parallelism = j.value("parallelism", c.parallelism);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, std::string("bad experiment config: ") + e.what());
  }
  require(c.parallelism >= 1, Errc::config, "parallelism must be >= 1");
  require(c.backend.kind == "rule" || c.backend.kind == "mock" || c.backend.kind == "chat", Errc::config,
          "backend kind must be rule, mock or chat");
  require(c.backend.retries >= 1 && c.backend.backoff_ms >= 0, Errc::config, "bad retry settings");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

/// Builds the extraction backend. A mock backend without a fixture file
/// answers from each case's ground truth, as a well-behaved model would.
inline std::unique_ptr<extract::ExtractionBackend> make_backend(const BackendConfig& b,
                                                                const phantom::CohortSpec& cohort = {},
                                                                std::uint64_t seed = 42) {
  if (b.kind == "rule") return std::make_unique<extract::RuleBackend>();
  extract::PromptTemplate tpl;
  tpl.model_id = b.model;
  if (b.kind == "mock") {
    extract::MockFixtures fx;
    if (!b.fixtures.empty()) {
      fx = extract::load_mock_fixtures(b.fixtures);
    } else {
      for (std::size_t i = 0; i < cohort.cases.size(); ++i) {
        const auto& spec = cohort.cases[i];
        const auto report = phantom::generate_report(spec, phantom::report_style_seed(phantom::case_seed(seed, i)));
        fx[extract::sha256_hex(report)] = extract::render_mock_answer(phantom::phenotype_of(spec));
      }
    }
    return std::make_unique<extract::MockBackend>(std::move(fx), tpl);
  }
  return std::make_unique<extract::ChatBackend>(std::make_shared<extract::HttpTransport>(b.endpoint), tpl,
                                                extract::RetryPolicy{b.retries, std::chrono::milliseconds(b.backoff_ms)});
}

}  // namespace exact::harness
