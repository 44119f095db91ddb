#pragma once

// Serialization of verification reports: the run report JSON and plot-ready CSV tables.
//
// Numbers are written in shortest round-trip form in both formats, so a value read back from
// either file is bit-identical to the one computed. Non-finite values become null in JSON and
// nan/inf in CSV.

#include <iosfwd>
#include <string>
#include <vector>

#include "dneig/spectral.hpp"
#include "dneig/verify.hpp"
#include "json.hpp"

namespace dneig {

/// Shortest decimal text that parses back to exactly v ("nan", "inf", "-inf" for non-finite).
std::string format_double(double v);
/// Inverse of format_double. Throws InputError on malformed text.
double parse_double(const std::string& s);

/// Everything except wall_time_s, which belongs to run metadata.
nlohmann::ordered_json report_to_json(const VerificationReport& r);
VerificationReport report_from_json(const nlohmann::ordered_json& j);

struct RunMetadata {
  std::string started_at;
  std::string finished_at;
  double wall_time_s = 0.0;
  std::vector<double> check_wall_time_s;
  std::string kernel_backend;
  bool parallel = false;
};

/// {spec_version, config, checks, metadata}.
nlohmann::ordered_json run_report_json(const nlohmann::ordered_json& resolved_config,
                                       const std::vector<VerificationReport>& checks, const RunMetadata& meta);

/// Report JSON text, two-space indent, trailing newline.
std::string dump_report(const nlohmann::ordered_json& j);

/// Long table: section,name,index,value. Sections: level, quantity, series, tolerance.
/// index is the position within a series (0-based) and empty for scalars.
void write_report_csv(const VerificationReport& r, std::ostream& os);

struct CsvRecord {
  std::string section;
  std::string name;
  int index = -1;
  double value = 0.0;
};
std::vector<CsvRecord> read_report_csv(std::istream& is);

/// index,value,multiplicity,residual; index is 1-based, multiplicity from cluster_multiplicities.
void write_spectrum_csv(const SpectralResult& s, std::ostream& os, double rel_gap = 1e-6);

/// Comma-separated values on one line, no trailing comma.
std::string join_values(const std::vector<double>& v);

/// "PASS inequality: margin=1.00099 (rectangle n=64 ...)".
std::string summary_line(const VerificationReport& r);

/// UTC time as YYYY-MM-DDThh:mm:ssZ.
std::string utc_timestamp();

}  // namespace dneig
