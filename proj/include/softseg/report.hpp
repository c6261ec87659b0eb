#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "softseg/metrics.hpp"

namespace softseg {

struct CaseSweep {
  std::string case_id;
  std::vector<MetricRow> rows;
};

struct CaseGed {
  std::string case_id;
  GedReport ged;
};

struct EvaluationReport {
  std::vector<CaseSweep> sweeps;
  SweepSummary summary;
  std::vector<CaseGed> ged;
  nlohmann::json metadata = nlohmann::json::object();
};

// Fixed 4-decimal rendering used in every CSV table.
std::string format4(double v);

// case,threshold,dsc,iou,precision,recall,hd95
std::string sweep_csv(const std::vector<CaseSweep>& sweeps);
// metric,mean,std,skipped_hd95
std::string summary_csv(const SweepSummary& summary);
// case,d2_ged,expected_distance,diversity,expected_dsc
std::string ged_csv(const std::vector<CaseGed>& ged);
// Same content at full precision, plus metadata and GED mean/std over cases.
nlohmann::json report_json(const EvaluationReport& report);

// Writes sweep.csv, summary.csv, ged.csv and report.json into `dir`.
void write_report(const std::filesystem::path& dir, const EvaluationReport& report);

}  // namespace softseg
