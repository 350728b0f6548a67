#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "exact/extract/backend.hpp"
#include "exact/harness/config.hpp"
#include "exact/phantom/cohort.hpp"
#include "exact/voxel/io.hpp"

namespace exact::harness {

/// On-disk case layout:
///   volume.exnv  lobes.exnv  gt_<k>.exnv  report.txt  truth.json
inline void save_case(const phantom::CohortCase& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, Errc::io, "cannot create '" + dir.string() + "': " + ec.message());
  write_volume(c.volume, dir / "volume.exnv");
  write_volume(c.lobes, dir / "lobes.exnv");
  for (std::size_t k = 0; k < c.gt_masks.size(); ++k)
    write_volume(c.gt_masks[k], dir / ("gt_" + std::to_string(k) + ".exnv"));
  {
    std::ofstream out(dir / "report.txt", std::ios::binary);
    require(out.good(), Errc::io, "cannot write report in '" + dir.string() + "'");
    out << c.report;
  }
  nlohmann::ordered_json t;
  t["case_id"] = c.case_id();
  t["seed"] = c.seed;
  t["phenotype"] = extract::phenotype_to_json(c.phenotype_gt);
  t["gt_boxes"] = nlohmann::ordered_json::array();
  for (const auto& g : c.gt_boxes)
    t["gt_boxes"].push_back({{"box_min", g.box.min}, {"box_max", g.box.max}, {"lobe", std::string(to_string(g.lobe))}});
  t["spec"] = phantom::to_json(c.spec);
  std::ofstream out(dir / "truth.json", std::ios::binary);
  require(out.good(), Errc::io, "cannot write truth.json in '" + dir.string() + "'");
  out << t.dump(2) << "\n";
}

inline phantom::CohortCase load_case(const std::filesystem::path& dir) {
  const auto t = read_json_file(dir / "truth.json");
  phantom::CohortCase c;
  try {
    c.spec = phantom::case_from_json(t.at("spec"));
    c.seed = t.at("seed").get<std::uint64_t>();
    c.phenotype_gt = extract::phenotype_from_json(t.at("phenotype"));
    for (const auto& g : t.at("gt_boxes"))
      c.gt_boxes.push_back({BBox3{g.at("box_min").get<Index3>(), g.at("box_max").get<Index3>()},
                            parse_lobe(g.at("lobe").get<std::string>())});
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config, "bad truth.json in '" + dir.string() + "': " + e.what());
  }
  c.volume = read_intensity_volume(dir / "volume.exnv");
  c.lobes = read_label_volume(dir / "lobes.exnv");
  for (std::size_t k = 0; k < c.gt_boxes.size(); ++k)
    c.gt_masks.push_back(read_label_volume(dir / ("gt_" + std::to_string(k) + ".exnv")));
  std::ifstream in(dir / "report.txt", std::ios::binary);
  require(in.good(), Errc::io, "missing report.txt in '" + dir.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  c.report = ss.str();
  return c;
}

}  // namespace exact::harness
