#include "dneig/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <system_error>

#include "dneig/error.hpp"

namespace dneig {

using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InputError("malformed number '" + s + "'");
  return v;
}

namespace {

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double number_from(const ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

ordered_json named_values(const std::vector<NamedValue>& v) {
  ordered_json o = ordered_json::object();
  for (const auto& nv : v) o[nv.name] = number(nv.value);
  return o;
}

std::vector<NamedValue> named_values_from(const ordered_json& o) {
  std::vector<NamedValue> out;
  for (auto it = o.begin(); it != o.end(); ++it) out.push_back({it.key(), number_from(it.value())});
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

ordered_json report_to_json(const VerificationReport& r) {
  ordered_json j;
  j["check"] = r.check;
  j["domain"] = r.domain;
  j["metric"] = r.metric;
  j["levels"] = r.levels;
  j["pass"] = r.pass;
  j["quantities"] = named_values(r.quantities);
  ordered_json s = ordered_json::object();
  for (const auto& ns : r.series) {
    ordered_json arr = ordered_json::array();
    for (double v : ns.values) arr.push_back(number(v));
    s[ns.name] = arr;
  }
  j["series"] = s;
  j["tolerances"] = named_values(r.tolerances);
  j["notes"] = r.notes;
  return j;
}

VerificationReport report_from_json(const ordered_json& j) {
  VerificationReport r;
  r.check = j.at("check").get<std::string>();
  r.domain = j.at("domain").get<std::string>();
  r.metric = j.at("metric").get<std::string>();
  r.levels = j.at("levels").get<std::vector<int>>();
  r.pass = j.at("pass").get<bool>();
  r.quantities = named_values_from(j.at("quantities"));
  for (auto it = j.at("series").begin(); it != j.at("series").end(); ++it) {
    NamedSeries ns{it.key(), {}};
    for (const auto& v : it.value()) ns.values.push_back(number_from(v));
    r.series.push_back(std::move(ns));
  }
  r.tolerances = named_values_from(j.at("tolerances"));
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

ordered_json run_report_json(const ordered_json& resolved_config, const std::vector<VerificationReport>& checks,
                             const RunMetadata& meta) {
  ordered_json j;
  j["spec_version"] = 1;
  j["config"] = resolved_config;
  ordered_json list = ordered_json::array();
  for (const auto& r : checks) list.push_back(report_to_json(r));
  j["checks"] = list;
  ordered_json m;
  m["started_at"] = meta.started_at;
  m["finished_at"] = meta.finished_at;
  m["wall_time_s"] = meta.wall_time_s;
  m["check_wall_time_s"] = meta.check_wall_time_s;
  m["kernel_backend"] = meta.kernel_backend;
  m["parallel"] = meta.parallel;
  j["metadata"] = m;
  return j;
}

std::string dump_report(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_report_csv(const VerificationReport& r, std::ostream& os) {
  os << "section,name,index,value\n";
  for (std::size_t i = 0; i < r.levels.size(); ++i) os << "level,n," << i << ',' << r.levels[i] << '\n';
  for (const auto& q : r.quantities) os << "quantity," << csv_field(q.name) << ",," << format_double(q.value) << '\n';
  for (const auto& s : r.series)
    for (std::size_t i = 0; i < s.values.size(); ++i)
      os << "series," << csv_field(s.name) << ',' << i << ',' << format_double(s.values[i]) << '\n';
  for (const auto& t : r.tolerances) os << "tolerance," << csv_field(t.name) << ",," << format_double(t.value) << '\n';
}

std::vector<CsvRecord> read_report_csv(std::istream& is) {
  std::vector<CsvRecord> out;
  std::string line;
  if (!std::getline(is, line) || line != "section,name,index,value") throw InputError("report table: bad header");
  while (std::getline(is, line)) {
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw InputError("report table: expected 4 fields in '" + line + "'");
    CsvRecord rec{f[0], f[1], f[2].empty() ? -1 : std::stoi(f[2]), parse_double(f[3])};
    out.push_back(std::move(rec));
  }
  return out;
}

void write_spectrum_csv(const SpectralResult& s, std::ostream& os, double rel_gap) {
  const auto clusters = cluster_multiplicities(s.values, rel_gap);
  os << "index,value,multiplicity,residual\n";
  std::size_t row = 0;
  for (const auto& c : clusters) {
    for (int m = 0; m < c.multiplicity; ++m, ++row) {
      const double res = row < s.residuals.size() ? s.residuals[row] : std::numeric_limits<double>::quiet_NaN();
      os << row + 1 << ',' << format_double(s.values[row]) << ',' << c.multiplicity << ',' << format_double(res) << '\n';
    }
  }
}

std::string join_values(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string summary_line(const VerificationReport& r) {
  static const char* const keys[] = {"margin", "min_margin", "max_relative_difference", "extrapolated", "checked_m",
                                     "beta1", "alpha_nu"};
  std::ostringstream os;
  os << (r.pass ? "PASS " : "FAIL ") << r.check;
  for (const char* k : keys) {
    if (r.has_quantity(k)) {
      os << ": " << k << '=' << format_double(r.quantity(k));
      break;
    }
  }
  if (!r.domain.empty()) os << " (" << r.domain << ')';
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dneig
