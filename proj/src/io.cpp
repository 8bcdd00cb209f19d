#include "scs/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "scs/errors.hpp"

namespace scs::io {

Format parse_format(const std::string& text) {
  if (text == "json") return Format::json;
  if (text == "csv") return Format::csv;
  throw ValidationError("unknown output format '" + text + "' (json | csv)");
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

[[noreturn]] void fail_at(const std::string& source, std::size_t line, const std::string& what) {
  throw ValidationError(source + ":" + std::to_string(line) + ": " + what);
}

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv(const std::string& line, const std::string& source,
                                   std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) fail_at(source, lineno, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

ObservationStream parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw ValidationError(source + ": empty file (missing header)");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != "t,arm,value") {
    fail_at(source, lineno, "header must be exactly 't,arm,value', got '" + line + "'");
  }

  std::unordered_map<std::string, std::size_t> arm_index;
  std::vector<std::string> labels;
  std::map<std::int64_t, std::vector<std::pair<std::size_t, double>>> by_time;
  std::set<std::pair<std::int64_t, std::size_t>> seen;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line, source, lineno);
    if (fields.size() != 3) {
      fail_at(source, lineno, "expected 3 fields, got " + std::to_string(fields.size()));
    }

    const std::string t_text = trim(fields[0]);
    std::int64_t t = 0;
    auto [tp, tec] = std::from_chars(t_text.data(), t_text.data() + t_text.size(), t);
    if (tec != std::errc{} || tp != t_text.data() + t_text.size() || t < 1) {
      fail_at(source, lineno, "t must be a positive integer, got '" + t_text + "'");
    }

    const std::string label = trim(fields[1]);
    if (label.empty()) fail_at(source, lineno, "empty arm label");

    const std::string v_text = trim(fields[2]);
    double value = 0.0;
    auto [vp, vec] = std::from_chars(v_text.data(), v_text.data() + v_text.size(), value);
    if (vec != std::errc{} || vp != v_text.data() + v_text.size() || !std::isfinite(value)) {
      fail_at(source, lineno, "value must be a finite real, got '" + v_text + "'");
    }

    auto [it, inserted] = arm_index.try_emplace(label, labels.size());
    if (inserted) labels.push_back(label);
    const std::size_t arm = it->second;
    if (!seen.emplace(t, arm).second) {
      fail_at(source, lineno, "duplicate row for t=" + std::to_string(t) + ", arm '" + label + "'");
    }
    by_time[t].emplace_back(arm, value);
  }

  if (labels.empty()) throw ValidationError(source + ": no arms (no data rows after header)");

  ObservationStream stream;
  stream.k = labels.size();
  stream.labels = std::move(labels);
  for (const auto& [t, rows] : by_time) {
    StepObservations step(stream.k);
    for (const auto& [arm, value] : rows) step[arm] = value;
    stream.times.push_back(t);
    stream.steps.push_back(std::move(step));
  }
  return stream;
}

ObservationStream ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Numbers

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

double round_to_serialized(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format_number(x).c_str(), nullptr);
}

namespace {

ordered_json num(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return round_to_serialized(x);
}

double from_num(const ordered_json& j) {
  if (j.is_null()) return std::nan("");
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw ValidationError("bad numeric field '" + s + "'");
  }
  return j.get<double>();
}

const std::string& label_of(const std::vector<std::string>& labels, std::size_t arm,
                            std::string& scratch) {
  if (arm < labels.size()) return labels[arm];
  scratch = std::to_string(arm + 1);
  return scratch;
}

// Quotes a CSV field when it carries a separator or a quote.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------
// Traces

ordered_json trace_to_json(const ScreeningTrace& trace, const std::vector<std::string>& labels,
                           const ordered_json& metadata) {
  ordered_json doc;
  doc["format"] = "scs-trace";
  doc["version"] = kFormatVersion;
  ordered_json header;
  header["k"] = trace.k;
  header["m"] = trace.m;
  header["alpha"] = num(trace.alpha);
  header["level"] = num(trace.level);
  header["constructor"] = trace.constructor;
  header["stop_rule"] = trace.stop_rule;
  doc["header"] = header;
  doc["metadata"] = metadata;
  doc["labels"] = labels;

  ordered_json records = ordered_json::array();
  for (const auto& r : trace.records) {
    ordered_json jr;
    jr["T"] = r.time;
    jr["stamp"] = r.stamp;
    jr["threshold"] = num(r.threshold);
    jr["survivors"] = r.survivors;
    ordered_json bounds = ordered_json::array();
    for (std::size_t i = 0; i < r.bounds.size(); ++i) {
      ordered_json b;
      b["lower"] = num(r.bounds[i].lower);
      b["upper"] = num(r.bounds[i].upper);
      b["center"] = num(i < r.centers.size() ? r.centers[i] : std::nan(""));
      bounds.push_back(std::move(b));
    }
    jr["bounds"] = std::move(bounds);
    records.push_back(std::move(jr));
  }
  doc["records"] = std::move(records);
  return doc;
}

TraceDocument trace_from_json(const ordered_json& doc) {
  try {
    if (doc.at("format") != "scs-trace") throw ValidationError("not an scs-trace document");
    TraceDocument out;
    const auto& h = doc.at("header");
    out.trace.k = h.at("k").get<std::size_t>();
    out.trace.m = h.at("m").get<std::size_t>();
    out.trace.alpha = from_num(h.at("alpha"));
    out.trace.level = from_num(h.at("level"));
    out.trace.constructor = h.at("constructor").get<std::string>();
    out.trace.stop_rule = h.at("stop_rule").get<std::string>();
    out.labels = doc.at("labels").get<std::vector<std::string>>();
    out.metadata = doc.value("metadata", ordered_json::object());
    for (const auto& jr : doc.at("records")) {
      TraceRecord r;
      r.time = jr.at("T").get<std::size_t>();
      r.stamp = jr.at("stamp").get<std::int64_t>();
      r.threshold = from_num(jr.at("threshold"));
      r.survivors = jr.at("survivors").get<std::vector<std::size_t>>();
      for (const auto& b : jr.at("bounds")) {
        r.bounds.push_back(BoundPair{from_num(b.at("lower")), from_num(b.at("upper")),
                                     out.trace.level});
        r.centers.push_back(from_num(b.at("center")));
      }
      if (!out.trace.records.empty() && r.time <= out.trace.records.back().time) {
        throw ValidationError("trace records must be strictly increasing in T");
      }
      out.trace.records.push_back(std::move(r));
    }
    return out;
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("malformed trace document: ") + e.what());
  }
}

void write_trace_csv(std::ostream& out, const ScreeningTrace& trace,
                     const std::vector<std::string>& labels) {
  out << "T,arm,lower,upper,center,selected,threshold\n";
  std::string scratch;
  for (const auto& r : trace.records) {
    std::vector<bool> selected(r.bounds.size(), false);
    for (std::size_t arm : r.survivors) {
      if (arm < selected.size()) selected[arm] = true;
    }
    for (std::size_t i = 0; i < r.bounds.size(); ++i) {
      out << r.stamp << ',' << csv_field(label_of(labels, i, scratch)) << ','
          << format_number(r.bounds[i].lower) << ',' << format_number(r.bounds[i].upper) << ','
          << format_number(i < r.centers.size() ? r.centers[i] : std::nan("")) << ','
          << (selected[i] ? 1 : 0) << ',' << format_number(r.threshold) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// PSI reports

ordered_json psi_report_to_json(const PsiReport& report, const std::vector<std::string>& labels,
                                const ordered_json& metadata) {
  ordered_json doc;
  doc["format"] = "scs-psi";
  doc["version"] = kFormatVersion;
  doc["metadata"] = metadata;
  doc["tau"] = report.tau;
  doc["method"] = to_string(report.method);
  doc["fcr_alpha"] = num(report.fcr_alpha);
  doc["level_used"] = num(report.level_used);
  doc["screening_level"] = num(report.screening_level);
  doc["selected"] = report.selected;
  ordered_json intervals = ordered_json::array();
  std::string scratch;
  for (const auto& iv : report.intervals) {
    ordered_json j;
    j["arm"] = iv.arm;
    j["label"] = label_of(labels, iv.arm, scratch);
    j["lower"] = num(iv.adjusted.lower);
    j["upper"] = num(iv.adjusted.upper);
    j["center"] = num(iv.center);
    j["screening_lower"] = num(iv.screening.lower);
    j["screening_upper"] = num(iv.screening.upper);
    intervals.push_back(std::move(j));
  }
  doc["intervals"] = std::move(intervals);
  return doc;
}

void write_psi_csv(std::ostream& out, const PsiReport& report,
                   const std::vector<std::string>& labels) {
  out << "arm,lower,upper,center,screening_lower,screening_upper,level\n";
  std::string scratch;
  for (const auto& iv : report.intervals) {
    out << csv_field(label_of(labels, iv.arm, scratch)) << ',' << format_number(iv.adjusted.lower)
        << ',' << format_number(iv.adjusted.upper) << ',' << format_number(iv.center) << ','
        << format_number(iv.screening.lower) << ',' << format_number(iv.screening.upper) << ','
        << format_number(report.level_used) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Experiments

ordered_json experiment_to_json(const ExperimentReport& report, const ordered_json& metadata) {
  ordered_json doc;
  doc["format"] = "scs-experiment";
  doc["version"] = kFormatVersion;
  doc["metadata"] = metadata;
  ordered_json cfg;
  cfg["k"] = report.k;
  cfg["m"] = report.m;
  cfg["alpha"] = num(report.alpha);
  cfg["fcr_alpha"] = num(report.fcr_alpha);
  cfg["constructor"] = report.constructor;
  cfg["model"] = report.model;
  cfg["psi_method"] = report.psi_method;
  cfg["seed"] = report.seed;
  cfg["reps"] = report.reps;
  if (report.stable_window) {
    cfg["stable_window"] = *report.stable_window;
  } else {
    cfg["stable_window"] = nullptr;
  }
  doc["config"] = cfg;

  ordered_json cps = ordered_json::array();
  for (const auto& c : report.checkpoints) {
    ordered_json j;
    j["T"] = c.time;
    j["mean_size"] = num(c.mean_size);
    j["median_size"] = num(c.median_size);
    j["mean_jac"] = num(c.mean_jac);
    j["fcr"] = num(c.fcr);
    j["fcr_se"] = num(c.fcr_se);
    j["fcr_psi"] = num(c.fcr_psi);
    j["fcr_bonferroni"] = num(c.fcr_bonferroni);
    j["fcr_screening"] = num(c.fcr_screening);
    j["coverage_failure_rate"] = num(c.coverage_failure_rate);
    j["identification_rate"] = num(c.identification_rate);
    cps.push_back(std::move(j));
  }
  doc["checkpoints"] = std::move(cps);

  ordered_json summary;
  summary["coverage_failure_rate"] = num(report.coverage_failure_rate);
  summary["monotone_violations"] = report.monotone_violations;
  summary["floor_violations"] = report.floor_violations;
  summary["mean_stopped_tau"] = num(report.mean_stopped_tau);
  summary["stopped_fcr_psi"] = num(report.stopped_fcr_psi.mean);
  summary["stopped_fcr_psi_se"] = num(report.stopped_fcr_psi.se);
  summary["stopped_fcr_bonferroni"] = num(report.stopped_fcr_bonferroni.mean);
  summary["stopped_fcr_bonferroni_se"] = num(report.stopped_fcr_bonferroni.se);
  doc["summary"] = std::move(summary);
  return doc;
}

void write_experiment_csv(std::ostream& out, const ExperimentReport& report) {
  out << "T,mean_size,median_size,mean_jac,fcr,fcr_se,fcr_psi,fcr_bonferroni,fcr_screening,"
         "coverage_failure_rate,identification_rate\n";
  for (const auto& c : report.checkpoints) {
    out << c.time << ',' << format_number(c.mean_size) << ',' << format_number(c.median_size)
        << ',' << format_number(c.mean_jac) << ',' << format_number(c.fcr) << ','
        << format_number(c.fcr_se) << ',' << format_number(c.fcr_psi) << ','
        << format_number(c.fcr_bonferroni) << ',' << format_number(c.fcr_screening) << ','
        << format_number(c.coverage_failure_rate) << ',' << format_number(c.identification_rate)
        << '\n';
  }
}

ordered_json levels_to_json(const LevelComparison& cmp, std::size_t k, std::size_t m,
                            std::size_t selected, double alpha) {
  ordered_json doc;
  doc["k"] = k;
  doc["m"] = m;
  doc["selected"] = selected;
  doc["alpha"] = num(alpha);
  doc["alpha_km"] = num(cmp.alpha_km);
  doc["alpha_B"] = num(cmp.bonferroni);
  doc["alpha_psi"] = num(cmp.psi);
  doc["case"] = to_string(cmp.level_case);
  doc["ordering"] = cmp.ordering;
  return doc;
}

// ---------------------------------------------------------------------------

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace scs::io
