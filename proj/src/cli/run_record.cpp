#include "fpu/cli/run_record.hpp"

#include <fstream>
#include <iterator>

#include "fpu/error.hpp"

namespace fpu::cli {

using nlohmann::json;

json to_json(const metrics::TimingSummary& t) {
  return {{"seconds", t.seconds}, {"median", t.median}, {"q1", t.q1}, {"q3", t.q3}, {"iqr", t.iqr()}};
}

metrics::TimingSummary timing_from_json(const json& j) {
  metrics::TimingSummary t;
  t.seconds = j.at("seconds").get<std::vector<double>>();
  t.median = j.at("median").get<double>();
  t.q1 = j.at("q1").get<double>();
  t.q3 = j.at("q3").get<double>();
  return t;
}

json to_json(const RunRecord& r) {
  return {{"config", to_json(r.config)},
          {"dataset_hash", r.dataset_hash},
          {"loss_curve", r.loss_curve},
          {"metrics", metrics::to_json(r.metrics)},
          {"uncertainty", r.uncertainty ? metrics::to_json(*r.uncertainty) : json()},
          {"timing", r.timing ? to_json(*r.timing) : json()},
          {"artifact_hashes", r.artifact_hashes},
          {"warnings", r.warnings}};
}

RunRecord run_record_from_json(const json& j) {
  try {
    RunRecord r;
    r.config = config_from_json(j.at("config"));
    r.dataset_hash = j.at("dataset_hash").get<std::string>();
    r.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    r.metrics = metrics::report_from_json(j.at("metrics"));
    if (!j.at("uncertainty").is_null()) r.uncertainty = metrics::uncertainty_stats_from_json(j.at("uncertainty"));
    if (!j.at("timing").is_null()) r.timing = timing_from_json(j.at("timing"));
    r.artifact_hashes = j.at("artifact_hashes").get<std::map<std::string, std::string>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed run record: ") + e.what(), 0);
  }
}

void write_run_record(const RunRecord& record, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file << to_json(record).dump(2) << "\n";
  if (!file) throw IoError("failed writing: " + path.string());
}

RunRecord read_run_record(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open run record: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON", e.byte);
  }
  return run_record_from_json(j);
}

}  // namespace fpu::cli
