#include "softseg/report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "softseg/dataio.hpp"

namespace softseg {

using json = nlohmann::json;

std::string format4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

namespace {

std::string opt4(const std::optional<double>& v) { return v ? format4(*v) : "undefined"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string sweep_csv(const std::vector<CaseSweep>& sweeps) {
  std::string out = "case,threshold,dsc,iou,precision,recall,hd95\n";
  for (const CaseSweep& s : sweeps)
    for (const MetricRow& r : s.rows)
      out += s.case_id + "," + format4(r.threshold) + "," + format4(r.dsc) + "," + format4(r.iou) +
             "," + format4(r.precision) + "," + format4(r.recall) + "," + opt4(r.hd95) + "\n";
  return out;
}

std::string summary_csv(const SweepSummary& summary) {
  std::string out = "metric,mean,std,skipped_hd95\n";
  for (const MetricSummary& m : summary.metrics)
    out += m.metric + "," + opt4(m.mean) + "," + opt4(m.std) + "," + std::to_string(m.skipped_hd95) + "\n";
  return out;
}

std::string ged_csv(const std::vector<CaseGed>& ged) {
  std::string out = "case,d2_ged,expected_distance,diversity,expected_dsc\n";
  for (const CaseGed& g : ged)
    out += g.case_id + "," + format4(g.ged.d2_ged) + "," + format4(g.ged.expected_distance) + "," +
           format4(g.ged.diversity) + "," + format4(g.ged.expected_dsc) + "\n";
  return out;
}

json report_json(const EvaluationReport& report) {
  json doc;
  doc["metadata"] = report.metadata;
  json sweeps = json::array();
  for (const CaseSweep& s : report.sweeps) {
    json rows = json::array();
    for (const MetricRow& r : s.rows)
      rows.push_back({{"threshold", r.threshold}, {"dsc", r.dsc}, {"iou", r.iou},
                      {"precision", r.precision}, {"recall", r.recall}, {"hd95", opt_json(r.hd95)}});
    sweeps.push_back({{"case", s.case_id}, {"rows", std::move(rows)}});
  }
  doc["sweep"] = std::move(sweeps);
  json summary = json::array();
  for (const MetricSummary& m : report.summary.metrics)
    summary.push_back({{"metric", m.metric}, {"mean", opt_json(m.mean)}, {"std", opt_json(m.std)},
                       {"skipped_hd95", m.skipped_hd95}});
  doc["summary"] = std::move(summary);

  json ged = json::array();
  std::vector<double> cols[4];
  for (const CaseGed& g : report.ged) {
    ged.push_back({{"case", g.case_id}, {"d2_ged", g.ged.d2_ged},
                   {"expected_distance", g.ged.expected_distance},
                   {"diversity", g.ged.diversity}, {"expected_dsc", g.ged.expected_dsc}});
    cols[0].push_back(g.ged.d2_ged);
    cols[1].push_back(g.ged.expected_distance);
    cols[2].push_back(g.ged.diversity);
    cols[3].push_back(g.ged.expected_dsc);
  }
  doc["ged"] = std::move(ged);
  if (!report.ged.empty()) {
    const char* names[4] = {"d2_ged", "expected_distance", "diversity", "expected_dsc"};
    json agg;
    for (int k = 0; k < 4; ++k) {
      double mean = 0.0;
      for (double v : cols[k]) mean += v;
      mean /= static_cast<double>(cols[k].size());
      double var = 0.0;
      for (double v : cols[k]) var += (v - mean) * (v - mean);
      agg[names[k]] = {{"mean", mean}, {"std", std::sqrt(var / static_cast<double>(cols[k].size()))}};
    }
    doc["ged_summary"] = std::move(agg);
  }
  return doc;
}

void write_report(const std::filesystem::path& dir, const EvaluationReport& report) {
  if (report.sweeps.empty()) throw std::invalid_argument("write_report: no sweep rows to write");
  write_file_atomic(dir / "sweep.csv", sweep_csv(report.sweeps));
  write_file_atomic(dir / "summary.csv", summary_csv(report.summary));
  write_file_atomic(dir / "ged.csv", ged_csv(report.ged));
  write_file_atomic(dir / "report.json", report_json(report).dump(2) + "\n");
}

}  // namespace softseg
