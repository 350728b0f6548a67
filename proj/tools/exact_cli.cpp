// Command line front end: phantom generation, detection, extraction,
// single-case pipeline runs and full experiments.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "exact/exact.hpp"

namespace fs = std::filesystem;
using namespace exact;

namespace {

/// Lets every flag come from one JSON file; nested objects address
/// subcommands, e.g. {"eval": {"run": {"config": "x.json"}}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_single_name().empty() || !opt->get_configurable()) continue;
      if (opt->count() > 0 || default_also) j[opt->get_single_name()] = opt->as<std::string>();
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("settings file is not JSON: ") + e.what());
    }
    return items_of(j, "", {});
  }

 private:
  static std::vector<CLI::ConfigItem> items_of(const nlohmann::json& j, const std::string& name,
                                               std::vector<std::string> prefix) {
    std::vector<CLI::ConfigItem> out;
    if (j.is_object()) {
      if (!name.empty()) prefix.push_back(name);
      for (const auto& [key, value] : j.items()) {
        auto sub = items_of(value, key, prefix);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = prefix;
    if (j.is_string()) {
      item.inputs = {j.get<std::string>()};
    } else if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else {
      item.inputs = {j.dump()};
    }
    out.push_back(std::move(item));
    return out;
  }
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), Errc::io, "cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BackendFlags {
  std::string kind = "rule";
  std::string fixtures;
  std::string endpoint = harness::BackendConfig{}.endpoint;
  std::string model = harness::BackendConfig{}.model;
  int retries = 3;
  int backoff_ms = 1000;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--backend", kind, "Extraction backend")->check(CLI::IsMember({"rule", "chat", "mock"}));
    cmd->add_option("--fixtures", fixtures, "Mock fixture file (report SHA-256 to canned answers)");
    cmd->add_option("--endpoint", endpoint, "Chat completion endpoint URL");
    cmd->add_option("--model", model, "Chat model id");
    cmd->add_option("--retries", retries, "Chat attempts before giving up")->check(CLI::PositiveNumber);
    cmd->add_option("--backoff-ms", backoff_ms, "First retry delay in milliseconds")->check(CLI::NonNegativeNumber);
  }

  harness::BackendConfig config() const {
    harness::BackendConfig b;
    b.kind = kind;
    b.fixtures = fixtures;
    b.endpoint = endpoint;
    b.model = model;
    b.retries = retries;
    b.backoff_ms = backoff_ms;
    return b;
  }
};

detect::DetectorConfig detector_config(const std::string& path) {
  return path.empty() ? detect::DetectorConfig{} : harness::detector_from_json(harness::read_json_file(path));
}

void print_summary(const harness::ExperimentReport& rep, const std::string& dir) {
  std::cout << harness::table3_csv(rep) << "\n" << harness::summary_text(rep) << "wrote " << dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Report-guided lung nodule detection on synthetic CT phantoms"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--settings", "", "JSON file supplying any of the flags below");
  app.require_subcommand(1);

  // phantom
  auto* phantom_cmd = app.add_subcommand("phantom", "Synthetic cohort generation")->configurable();
  phantom_cmd->require_subcommand(1);
  std::string spec_path, out_dir;
  std::uint64_t seed = 42;
  auto* gen = phantom_cmd->add_subcommand("gen", "Generate volumes, lobe maps, reports and ground truth")->configurable();
  gen->add_option("--spec", spec_path, "Cohort spec JSON, or 'table3'")->required();
  gen->add_option("--seed", seed, "Cohort seed");
  gen->add_option("--out", out_dir, "Output directory")->required();

  std::size_t n_reports = 30;
  std::uint64_t report_seed = 7;
  auto* reports = phantom_cmd->add_subcommand("reports", "Write a synthetic report corpus with truth and mock fixtures")->configurable();
  reports->add_option("--n", n_reports, "Number of reports");
  reports->add_option("--seed", report_seed, "Cohort seed");
  reports->add_option("--out", out_dir, "Output directory")->required();

  // detect
  std::string vol_path, cfg_path, out_path;
  auto* det = app.add_subcommand("detect", "Run the reference detector on an EXNV volume")->configurable();
  det->add_option("--vol", vol_path, "Input volume (EXNV)")->required()->check(CLI::ExistingFile);
  det->add_option("--config", cfg_path, "Detector config JSON")->check(CLI::ExistingFile);
  det->add_option("--out", out_path, "Output JSONL file (stdout when omitted)");

  // extract
  std::string report_path;
  BackendFlags backend_flags;
  auto* ext = app.add_subcommand("extract", "Extract the tumor phenotype from a report")->configurable();
  ext->add_option("--report", report_path, "Report text file")->required()->check(CLI::ExistingFile);
  backend_flags.add_to(ext);

  // pipeline
  std::string case_dir, mode = "guided";
  auto* pipe = app.add_subcommand("pipeline", "Run one case written by 'phantom gen'")->configurable();
  pipe->add_option("--case", case_dir, "Case directory")->required()->check(CLI::ExistingDirectory);
  pipe->add_option("--mode", mode, "guided or unguided")->check(CLI::IsMember({"guided", "unguided"}));
  pipe->add_option("--config", cfg_path, "Detector config JSON")->check(CLI::ExistingFile);
  backend_flags.add_to(pipe);

  // eval
  auto* eval = app.add_subcommand("eval", "Guided versus unguided experiments")->configurable();
  eval->require_subcommand(1);
  std::string exp_path;
  auto* run = eval->add_subcommand("run", "Run an experiment config")->configurable();
  run->add_option("--config", exp_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  int parallelism = 0;
  run->add_option("--parallelism", parallelism, "Override the config's worker count");
  std::string table3_out = "out/table3";
  auto* t3 = eval->add_subcommand("table3", "Reproduce the ten-case comparison on the bundled table3 fixture")->configurable();
  t3->add_option("--out", table3_out, "Output directory");
  t3->add_option("--seed", seed, "Cohort seed");
  t3->add_option("--parallelism", parallelism, "Worker threads");
  backend_flags.add_to(t3);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto spec = spec_path == "table3" ? harness::table3_cohort() : phantom::load_cohort_spec(spec_path);
      for (std::size_t i = 0; i < spec.cases.size(); ++i) {
        const auto c = phantom::generate_case(spec.cases[i], phantom::case_seed(seed, i));
        harness::save_case(c, fs::path(out_dir) / c.case_id());
        std::cout << "case " << c.case_id() << ": " << c.gt_boxes.size() << " tumor(s), "
                  << c.spec.nodules.size() << " nodule(s)\n";
      }
      return 0;
    }
    if (*reports) {
      const auto spec = phantom::random_cohort_spec(n_reports, report_seed);
      fs::create_directories(out_dir);
      nlohmann::ordered_json truth = nlohmann::ordered_json::object();
      extract::MockFixtures fixtures;
      for (std::size_t i = 0; i < spec.cases.size(); ++i) {
        const auto& cs = spec.cases[i];
        const auto text = phantom::generate_report(cs, phantom::report_style_seed(phantom::case_seed(report_seed, i)));
        const std::string name = "report_" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1) + ".txt";
        harness::write_text_file(fs::path(out_dir) / name, text);
        truth[name] = extract::phenotype_to_json(phantom::phenotype_of(cs));
        fixtures[extract::sha256_hex(text)] = extract::render_mock_answer(phantom::phenotype_of(cs));
      }
      harness::write_text_file(fs::path(out_dir) / "phenotypes.json", truth.dump(2) + "\n");
      harness::write_text_file(fs::path(out_dir) / "mock_fixtures.json", extract::mock_fixtures_to_json(fixtures).dump(2) + "\n");
      std::cout << "wrote " << spec.cases.size() << " reports to " << out_dir << "\n";
      return 0;
    }
    if (*det) {
      const auto cfg = detector_config(cfg_path);
      const Volume vol = read_intensity_volume(vol_path);
      const bool iso = vol.geometry().isotropic(1e-9) && std::abs(vol.spacing()[0] - 1.0) < 1e-9;
      const Volume pre = clip_intensity(iso ? vol : resample_to_isotropic(vol, 1.0));
      const auto cands = detect::detect_candidates(pre, cfg);
      const std::string case_id = fs::path(vol_path).parent_path().filename().string();
      std::ostringstream lines;
      for (const auto& c : cands) {
        auto j = guide::candidate_to_json(c);
        nlohmann::ordered_json row;
        row["case_id"] = case_id;
        for (auto& [k, v] : j.items()) row[k] = v;
        lines << row.dump() << "\n";
      }
      if (out_path.empty()) {
        std::cout << lines.str();
      } else {
        harness::write_text_file(out_path, lines.str());
      }
      return 0;
    }
    if (*ext) {
      const auto backend = harness::make_backend(backend_flags.config());
      const auto p = extract::extract_phenotype(read_text(report_path), *backend);
      std::cout << extract::phenotype_to_json(p).dump() << "\n";
      return 0;
    }
    if (*pipe) {
      const auto c = harness::load_case(case_dir);
      const auto backend = harness::make_backend(backend_flags.config());
      const auto r = guide::run_pipeline(c, guide::parse_mode(mode), detector_config(cfg_path), backend.get());
      std::cout << guide::to_json(r).dump(2) << "\n";
      return 0;
    }
    if (*run) {
      auto cfg = harness::load_experiment_config(exp_path);
      if (parallelism > 0) cfg.parallelism = parallelism;
      print_summary(harness::run_experiment(cfg), cfg.output_dir);
      return 0;
    }
    if (*t3) {
      harness::ExperimentConfig cfg;
      cfg.cohort = harness::table3_cohort();
      cfg.seed = seed;
      cfg.backend = backend_flags.config();
      cfg.output_dir = table3_out;
      if (parallelism > 0) cfg.parallelism = parallelism;
      print_summary(harness::run_experiment(cfg), cfg.output_dir);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
