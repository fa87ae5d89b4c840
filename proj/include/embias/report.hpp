#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "embias/experiment.hpp"

namespace embias {

inline constexpr const char* kRecordsHeader =
    "condition_id,method,direction,strength,test_name,effect_size,p_value,precision_gap,recall_gap,accuracy,f1";
inline constexpr const char* kCorrelationsHeader = "test_name,gap_metric,method,n,pearson_r,p_value,p_method,status";

// One row per (record, WEAT test). Undefined values are empty fields.
void write_records_csv(const ExperimentTable& table, std::ostream& out);
void write_correlations_csv(const ExperimentTable& table, std::ostream& out);

struct ScatterPoint {
  double x;
  double y;
  std::string series;  // "baseline" is drawn in black
  std::string label;
};

// Standalone 640x480 SVG scatter plot.
std::string render_scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title,
                               const std::string& x_label, const std::string& y_label);

// records.csv, correlations.csv, failures.txt (when any condition failed) and
// one scatter_<test>_<metric>.svg per WEAT test and gap metric.
void write_report(const ExperimentTable& table, const std::filesystem::path& outdir);

}  // namespace embias
