#include "fpu/metrics/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fpu/error.hpp"

namespace fpu::metrics {

namespace {

using nlohmann::json;

constexpr const char* kCsvHeader = "index,dice,jaccard,err,hc,mc,psnr";

struct Mean {
  double sum = 0.0;
  std::size_t count = 0;

  void add(const std::optional<double>& v) {
    if (v) sum += *v, ++count;
  }
  std::optional<double> value() const {
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  }
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

json number_json(const std::optional<double>& v) { return v ? json(round_significant(*v)) : json(); }

json psnr_json(const std::optional<Psnr>& v) {
  if (!v) return json();
  if (v->infinite) return "inf";
  return round_significant(v->db);
}

std::optional<double> number_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::optional<Psnr> psnr_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    if (j.get<std::string>() != "inf") throw ParseError("psnr string must be \"inf\"", 0);
    return Psnr::infinity();
  }
  return Psnr{false, j.get<double>()};
}

json metrics_json(const std::optional<double>& dice, const std::optional<double>& jaccard,
                  const std::optional<double>& err, const std::optional<double>& hc, const std::optional<double>& mc,
                  const std::optional<Psnr>& psnr) {
  return {{"dice", number_json(dice)}, {"jaccard", number_json(jaccard)}, {"err", number_json(err)},
          {"hc", number_json(hc)},     {"mc", number_json(mc)},           {"psnr", psnr_json(psnr)}};
}

std::string csv_field(const std::optional<double>& v) { return v ? format_number(*v) : ""; }
std::string csv_field(const std::optional<Psnr>& v) { return v ? to_string(*v) : ""; }

std::optional<double> parse_number(const std::string& field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw ParseError("CSV line " + std::to_string(line) + ": bad number '" + field + "'", 0);
  }
  return v;
}

std::optional<Psnr> parse_psnr(const std::string& field, std::size_t line) {
  if (field == "inf") return Psnr::infinity();
  const auto v = parse_number(field, line);
  if (!v) return std::nullopt;
  return Psnr{false, *v};
}

}  // namespace

double round_significant(double value, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

MetricsSummary summarize(const std::vector<ImageMetrics>& per_image) {
  Mean dice, jaccard, err, hc, mc, psnr;
  bool any_psnr = false, infinite = false;
  for (const auto& m : per_image) {
    dice.add(m.dice);
    jaccard.add(m.jaccard);
    err.add(m.err);
    hc.add(m.hc);
    mc.add(m.mc);
    if (m.psnr) {
      any_psnr = true;
      if (m.psnr->infinite) {
        infinite = true;
      } else {
        psnr.add(m.psnr->db);
      }
    }
  }
  MetricsSummary s{dice.value(), jaccard.value(), err.value(), hc.value(), mc.value(), std::nullopt};
  if (any_psnr) s.psnr = infinite ? Psnr::infinity() : Psnr{false, *psnr.value()};
  return s;
}

json to_json(const MetricsReport& r) {
  json images = json::array();
  for (const auto& m : r.per_image) {
    json row = metrics_json(m.dice, m.jaccard, m.err, m.hc, m.mc, m.psnr);
    row["index"] = m.index;
    images.push_back(std::move(row));
  }
  return {{"model_id", r.model_id},
          {"dataset_id", r.dataset_id},
          {"seed", r.seed},
          {"mean", metrics_json(r.mean.dice, r.mean.jaccard, r.mean.err, r.mean.hc, r.mean.mc, r.mean.psnr)},
          {"per_image", images}};
}

MetricsReport report_from_json(const json& j) {
  try {
    MetricsReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    const json& m = j.at("mean");
    r.mean = {number_from(m.at("dice")), number_from(m.at("jaccard")), number_from(m.at("err")),
              number_from(m.at("hc")),   number_from(m.at("mc")),      psnr_from(m.at("psnr"))};
    for (const auto& row : j.at("per_image")) {
      r.per_image.push_back({row.at("index").get<std::size_t>(), number_from(row.at("dice")),
                             number_from(row.at("jaccard")), number_from(row.at("err")), number_from(row.at("hc")),
                             number_from(row.at("mc")), psnr_from(row.at("psnr"))});
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed metrics report: ") + e.what(), 0);
  }
}

std::string to_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  auto row = [&](const std::string& index, const auto& m) {
    out << index << "," << csv_field(m.dice) << "," << csv_field(m.jaccard) << "," << csv_field(m.err) << ","
        << csv_field(m.hc) << "," << csv_field(m.mc) << "," << csv_field(m.psnr) << "\n";
  };
  for (const auto& m : r.per_image) row(std::to_string(m.index), m);
  row("mean", r.mean);
  return out.str();
}

MetricsReport report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("CSV report: unexpected header", 0);
  MetricsReport r;
  bool saw_mean = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (saw_mean) throw ParseError("CSV report: rows after the mean row", 0);
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != 7) throw ParseError("CSV line " + std::to_string(line_no) + ": expected 7 fields", 0);
    const auto dice = parse_number(fields[1], line_no), jaccard = parse_number(fields[2], line_no),
               err = parse_number(fields[3], line_no), hc = parse_number(fields[4], line_no),
               mc = parse_number(fields[5], line_no);
    const auto psnr = parse_psnr(fields[6], line_no);
    if (fields[0] == "mean") {
      r.mean = {dice, jaccard, err, hc, mc, psnr};
      saw_mean = true;
    } else {
      const auto index = parse_number(fields[0], line_no);
      if (!index) throw ParseError("CSV line " + std::to_string(line_no) + ": missing index", 0);
      r.per_image.push_back({static_cast<std::size_t>(*index), dice, jaccard, err, hc, mc, psnr});
    }
  }
  if (!saw_mean) throw ParseError("CSV report: missing mean row", 0);
  return r;
}

void write_report(const MetricsReport& report, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path) {
  const std::pair<std::filesystem::path, std::string> files[] = {{json_path, to_json(report).dump(2) + "\n"},
                                                                 {csv_path, to_csv(report)}};
  for (const auto& [path, text] : files) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw IoError("cannot open for writing: " + path.string());
    file << text;
    if (!file) throw IoError("failed writing: " + path.string());
  }
}

MetricsReport read_report_json(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  try {
    return report_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON", e.byte);
  }
}

}  // namespace fpu::metrics
