#include "tabmath/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "tabmath/errors.hpp"
#include "tabmath/io.hpp"
#include "tabmath/lang/value.hpp"
#include "tabmath/synthesis.hpp"
#include "tabmath/version.hpp"

namespace tabmath {

const char* to_string(CellSource source) {
  switch (source) {
    case CellSource::kNative: return "native";
    case CellSource::kExternal: return "external";
    case CellSource::kIcl: return "icl";
  }
  return "?";
}

std::optional<CellSource> parse_cell_source(std::string_view text) {
  if (text == "native") return CellSource::kNative;
  if (text == "external") return CellSource::kExternal;
  if (text == "icl") return CellSource::kIcl;
  return std::nullopt;
}

std::vector<AggregateRow> aggregate(const std::vector<Cell>& cells) {
  using Key = std::tuple<std::string, std::string, std::size_t, int>;
  std::map<Key, std::vector<const Cell*>> groups;
  for (const auto& c : cells) {
    if (!c.ok || !c.metrics) continue;
    groups[{c.model, to_string(c.split), c.cap, static_cast<int>(c.source)}].push_back(&c);
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : groups) {
    AggregateRow row;
    row.model = std::get<0>(key);
    row.split = members.front()->split;
    row.cap = std::get<2>(key);
    row.source = members.front()->source;
    row.n_problems = members.size();
    std::vector<double> cons, r2, rmse, mae;
    for (const Cell* c : members) {
      row.problems.push_back(c->problem_id);
      cons.push_back(c->metrics->rounded_consistency);
      if (c->metrics->r2) r2.push_back(*c->metrics->r2);
      rmse.push_back(c->metrics->rmse);
      mae.push_back(c->metrics->mae);
    }
    row.consistency = summarize(cons);
    row.r2 = summarize(r2);
    row.rmse = summarize(rmse);
    row.mae = summarize(mae);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json summary_to_json(const Summary& s) {
  Json j = Json::object();
  j["n"] = s.n;
  if (s.n == 0) {
    j["mean"] = nullptr;
    j["median"] = nullptr;
    j["sd"] = nullptr;
  } else {
    j["mean"] = s.mean;
    j["median"] = s.median;
    j["sd"] = s.sd;
  }
  j["ci_lo"] = opt(s.ci_lo);
  j["ci_hi"] = opt(s.ci_hi);
  return j;
}

Summary summary_from_json(const Json& j) {
  Summary s;
  s.n = j.at("n").get<std::size_t>();
  if (s.n > 0) {
    s.mean = j.at("mean").get<double>();
    s.median = j.at("median").get<double>();
    s.sd = j.at("sd").get<double>();
  }
  if (!j.at("ci_lo").is_null()) s.ci_lo = j.at("ci_lo").get<double>();
  if (!j.at("ci_hi").is_null()) s.ci_hi = j.at("ci_hi").get<double>();
  return s;
}

Json metrics_to_json(const MetricSet& m) {
  Json j = Json::object();
  j["rounded_consistency"] = m.rounded_consistency;
  j["r2"] = opt(m.r2);
  j["rmse"] = m.rmse;
  j["mae"] = m.mae;
  j["n_query"] = m.n_query;
  return j;
}

MetricSet metrics_from_json(const Json& j) {
  MetricSet m;
  m.rounded_consistency = j.at("rounded_consistency").get<double>();
  if (!j.at("r2").is_null()) m.r2 = j.at("r2").get<double>();
  m.rmse = j.at("rmse").get<double>();
  m.mae = j.at("mae").get<double>();
  m.n_query = j.at("n_query").get<std::size_t>();
  return m;
}

Json aggregate_to_json(const AggregateRow& a) {
  Json j = Json::object();
  j["model"] = a.model;
  j["split"] = to_string(a.split);
  j["cap"] = a.cap;
  j["source"] = to_string(a.source);
  j["n_problems"] = a.n_problems;
  j["problems"] = a.problems;
  j["consistency"] = summary_to_json(a.consistency);
  j["r2"] = summary_to_json(a.r2);
  j["rmse"] = summary_to_json(a.rmse);
  j["mae"] = summary_to_json(a.mae);
  return j;
}

AggregateRow aggregate_from_json(const Json& j) {
  AggregateRow a;
  a.model = j.at("model").get<std::string>();
  a.split = parse_split_kind(j.at("split").get<std::string>()).value();
  a.cap = j.at("cap").get<std::size_t>();
  a.source = parse_cell_source(j.at("source").get<std::string>()).value();
  a.n_problems = j.at("n_problems").get<std::size_t>();
  a.problems = j.at("problems").get<std::vector<std::string>>();
  a.consistency = summary_from_json(j.at("consistency"));
  a.r2 = summary_from_json(j.at("r2"));
  a.rmse = summary_from_json(j.at("rmse"));
  a.mae = summary_from_json(j.at("mae"));
  return a;
}

// Small helpers for the validators: each records a finding and reports
// whether the field is usable.
struct Checker {
  std::vector<std::string>& out;
  std::string where;

  bool has(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
      out.push_back(where + ": missing field '" + key + "'");
      return false;
    }
    return true;
  }
  bool string(const Json& j, const char* key) {
    if (!has(j, key)) return false;
    if (!j[key].is_string()) {
      out.push_back(where + ": '" + key + "' must be a string");
      return false;
    }
    return true;
  }
  bool uint(const Json& j, const char* key) {
    if (!has(j, key)) return false;
    if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<long long>() >= 0)) {
      out.push_back(where + ": '" + key + "' must be a non-negative integer");
      return false;
    }
    return true;
  }
  bool number(const Json& j, const char* key, bool nullable = false) {
    if (!has(j, key)) return false;
    if (nullable && j[key].is_null()) return true;
    if (!j[key].is_number()) {
      out.push_back(where + ": '" + key + "' must be a number" + (nullable ? " or null" : ""));
      return false;
    }
    return true;
  }
  void one_of(const Json& j, const char* key, std::initializer_list<const char*> allowed) {
    if (!string(j, key)) return;
    const auto v = j[key].get<std::string>();
    for (const char* a : allowed) {
      if (v == a) return;
    }
    out.push_back(where + ": '" + key + "' has unexpected value '" + v + "'");
  }
};

void validate_metrics(const Json& m, Checker& c) {
  if (!m.is_object()) {
    c.out.push_back(c.where + ": metrics must be an object");
    return;
  }
  const bool ok = c.number(m, "rounded_consistency") & c.number(m, "r2", true) &
                  c.number(m, "rmse") & c.number(m, "mae") & c.uint(m, "n_query");
  if (!ok) return;
  const double rc = m["rounded_consistency"].get<double>();
  const double rmse = m["rmse"].get<double>();
  const double mae = m["mae"].get<double>();
  const auto n = m["n_query"].get<std::size_t>();
  if (rc < 0 || rc > 1) c.out.push_back(c.where + ": rounded_consistency outside [0, 1]");
  if (mae < 0) c.out.push_back(c.where + ": mae is negative");
  if (rmse < mae * (1 - 1e-12)) c.out.push_back(c.where + ": rmse < mae");
  if (n == 0) c.out.push_back(c.where + ": n_query is zero");
  const double hits = rc * static_cast<double>(n);
  if (std::fabs(hits - std::round(hits)) > 1e-6) {
    c.out.push_back(c.where + ": rounded_consistency * n_query is not an integer");
  }
}

void validate_summary(const Json& s, Checker& c) {
  if (!s.is_object()) {
    c.out.push_back(c.where + ": summary must be an object");
    return;
  }
  c.uint(s, "n");
  const bool empty = s.contains("n") && s["n"].is_number() && s["n"].get<double>() == 0;
  for (const char* k : {"mean", "median", "sd"}) c.number(s, k, empty);
  c.number(s, "ci_lo", true);
  c.number(s, "ci_hi", true);
}

}  // namespace

Json cell_to_json(const Cell& cell) {
  Json j = Json::object();
  j["problem_id"] = cell.problem_id;
  j["model"] = cell.model;
  j["split"] = to_string(cell.split);
  j["cap"] = cell.cap;
  j["source"] = to_string(cell.source);
  j["status"] = cell.ok ? "ok" : "error";
  j["error"] = cell.ok ? Json(nullptr) : Json(cell.error);
  j["metrics"] = cell.metrics ? metrics_to_json(*cell.metrics) : Json(nullptr);
  j["warnings"] = cell.warnings;
  j["manifest_path"] = cell.manifest_path;
  j["predictions_path"] = cell.predictions_path;
  j["model_spec"] = cell.model_spec;
  j["seeds"] = {{"synthesis", cell.seeds.synthesis},
                {"split", cell.seeds.split},
                {"model", cell.seeds.model}};
  return j;
}

Cell cell_from_json(const Json& j) {
  Cell c;
  c.problem_id = j.at("problem_id").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.split = parse_split_kind(j.at("split").get<std::string>()).value();
  c.cap = j.at("cap").get<std::size_t>();
  c.source = parse_cell_source(j.at("source").get<std::string>()).value();
  c.ok = j.at("status").get<std::string>() == "ok";
  if (!c.ok) c.error = j.at("error").get<std::string>();
  if (!j.at("metrics").is_null()) c.metrics = metrics_from_json(j.at("metrics"));
  c.warnings = j.at("warnings").get<std::vector<std::string>>();
  c.manifest_path = j.at("manifest_path").get<std::string>();
  c.predictions_path = j.at("predictions_path").get<std::string>();
  c.model_spec = j.at("model_spec");
  const Json& s = j.at("seeds");
  c.seeds = {s.at("synthesis").get<std::uint64_t>(), s.at("split").get<std::uint64_t>(),
             s.at("model").get<std::uint64_t>()};
  return c;
}

Json report_to_json(const Report& report) {
  Json j = Json::object();
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "report";
  j["software_version"] =
      report.software_version.empty() ? std::string(kSoftwareVersion) : report.software_version;
  j["config"] = report.config;
  Json cells = Json::array();
  for (const auto& c : report.cells) cells.push_back(cell_to_json(c));
  j["cells"] = std::move(cells);
  Json aggs = Json::array();
  for (const auto& a : report.aggregates) aggs.push_back(aggregate_to_json(a));
  j["aggregates"] = std::move(aggs);
  return j;
}

std::vector<std::string> validate_report(const Json& doc) {
  std::vector<std::string> out;
  Checker top{out, "report"};
  if (!doc.is_object()) return {"report: document must be a JSON object"};
  if (top.has(doc, "schema_version")) {
    if (!doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != kReportSchemaVersion) {
      out.push_back("report: schema_version must be " + std::to_string(kReportSchemaVersion));
    }
  }
  top.one_of(doc, "kind", {"report"});
  top.string(doc, "software_version");
  if (top.has(doc, "config") && !doc["config"].is_object()) {
    out.push_back("report: config must be an object");
  }
  if (top.has(doc, "cells")) {
    if (!doc["cells"].is_array()) {
      out.push_back("report: cells must be an array");
    } else {
      for (std::size_t i = 0; i < doc["cells"].size(); ++i) {
        const Json& c = doc["cells"][i];
        Checker ck{out, "cells[" + std::to_string(i) + "]"};
        if (!c.is_object()) {
          out.push_back(ck.where + ": must be an object");
          continue;
        }
        ck.string(c, "problem_id");
        ck.string(c, "model");
        ck.one_of(c, "split", {"RANDOM", "OOD"});
        ck.uint(c, "cap");
        ck.one_of(c, "source", {"native", "external", "icl"});
        ck.one_of(c, "status", {"ok", "error"});
        const bool ok = c.contains("status") && c["status"] == "ok";
        if (ck.has(c, "error") && !ok && !c["error"].is_string()) {
          out.push_back(ck.where + ": failed cells need an error string");
        }
        if (ck.has(c, "metrics")) {
          if (ok) validate_metrics(c["metrics"], ck);
          else if (!c["metrics"].is_null()) validate_metrics(c["metrics"], ck);
        }
        if (ck.has(c, "warnings") && !c["warnings"].is_array()) {
          out.push_back(ck.where + ": warnings must be an array");
        }
        ck.string(c, "manifest_path");
        ck.string(c, "predictions_path");
        if (ck.has(c, "model_spec") && !c["model_spec"].is_object()) {
          out.push_back(ck.where + ": model_spec must be an object");
        }
        if (ck.has(c, "seeds")) {
          Checker sk{out, ck.where + ".seeds"};
          sk.uint(c["seeds"], "synthesis");
          sk.uint(c["seeds"], "split");
          sk.uint(c["seeds"], "model");
        }
      }
    }
  }
  if (top.has(doc, "aggregates")) {
    if (!doc["aggregates"].is_array()) {
      out.push_back("report: aggregates must be an array");
    } else {
      for (std::size_t i = 0; i < doc["aggregates"].size(); ++i) {
        const Json& a = doc["aggregates"][i];
        Checker ak{out, "aggregates[" + std::to_string(i) + "]"};
        ak.string(a, "model");
        ak.one_of(a, "split", {"RANDOM", "OOD"});
        ak.uint(a, "cap");
        ak.one_of(a, "source", {"native", "external", "icl"});
        ak.uint(a, "n_problems");
        if (ak.has(a, "problems") && !a["problems"].is_array()) {
          out.push_back(ak.where + ": problems must be an array");
        }
        for (const char* k : {"consistency", "r2", "rmse", "mae"}) {
          if (!ak.has(a, k)) continue;
          Checker sk{out, ak.where + "." + k};
          validate_summary(a[k], sk);
        }
      }
    }
  }
  return out;
}

Report report_from_json(const Json& doc) {
  const auto problems = validate_report(doc);
  if (!problems.empty()) {
    std::string msg = "invalid report:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw SchemaError(msg);
  }
  Report r;
  r.software_version = doc["software_version"].get<std::string>();
  r.config = doc["config"];
  for (const auto& c : doc["cells"]) r.cells.push_back(cell_from_json(c));
  for (const auto& a : doc["aggregates"]) r.aggregates.push_back(aggregate_from_json(a));
  return r;
}

std::string summary_csv(const std::vector<AggregateRow>& rows) {
  auto num = [](const std::optional<double>& v) {
    return v ? lang::format_double(*v) : std::string();
  };
  auto med = [&](const Summary& s) {
    return s.n > 0 ? num(s.median) : std::string();
  };
  std::string out = kSummaryHeader;
  out += '\n';
  for (const auto& r : rows) {
    std::string model = r.model;
    if (r.source != CellSource::kNative) model += std::string("@") + to_string(r.source);
    out += csv_escape(model) + ',' + to_string(r.split) + ',' + std::to_string(r.cap) + ',' +
           (r.consistency.n > 0 ? lang::format_double(r.consistency.mean) : std::string()) + ',' +
           med(r.r2) + ',' + med(r.rmse) + ',' + med(r.mae) + ',' + num(r.consistency.ci_lo) +
           ',' + num(r.consistency.ci_hi) + ',' + std::to_string(r.n_problems) + '\n';
  }
  return out;
}

Json prediction_file_to_json(const PredictionFile& p) {
  Json j = Json::object();
  j["schema_version"] = 1;
  j["kind"] = "predictions";
  j["problem_id"] = p.problem_id;
  j["model"] = p.model;
  j["manifest_path"] = p.manifest_path;
  j["manifest_sha256"] = p.manifest_sha256;
  j["cap"] = p.cap;
  j["split"] = to_string(p.split);
  j["predictions"] = p.predictions;
  j["adapter_version"] = p.adapter_version;
  return j;
}

std::vector<std::string> validate_prediction_file(const Json& doc) {
  std::vector<std::string> out;
  if (!doc.is_object()) return {"predictions: document must be a JSON object"};
  Checker ck{out, "predictions"};
  if (ck.has(doc, "schema_version") &&
      (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != 1)) {
    out.push_back("predictions: schema_version must be 1");
  }
  ck.one_of(doc, "kind", {"predictions"});
  ck.string(doc, "problem_id");
  ck.string(doc, "model");
  ck.string(doc, "manifest_path");
  ck.string(doc, "manifest_sha256");
  ck.uint(doc, "cap");
  ck.one_of(doc, "split", {"RANDOM", "OOD"});
  ck.string(doc, "adapter_version");
  if (ck.has(doc, "predictions")) {
    if (!doc["predictions"].is_array()) {
      out.push_back("predictions: 'predictions' must be an array");
    } else {
      for (const auto& v : doc["predictions"]) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
          out.push_back("predictions: every prediction must be a finite number");
          break;
        }
      }
    }
  }
  return out;
}

PredictionFile prediction_file_from_json(const Json& doc) {
  const auto problems = validate_prediction_file(doc);
  if (!problems.empty()) {
    std::string msg = "invalid prediction file:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw SchemaError(msg);
  }
  PredictionFile p;
  p.problem_id = doc["problem_id"].get<std::string>();
  p.model = doc["model"].get<std::string>();
  p.manifest_path = doc["manifest_path"].get<std::string>();
  p.manifest_sha256 = doc["manifest_sha256"].get<std::string>();
  p.cap = doc["cap"].get<std::size_t>();
  p.split = *parse_split_kind(doc["split"].get<std::string>());
  p.predictions = doc["predictions"].get<std::vector<double>>();
  p.adapter_version = doc["adapter_version"].get<std::string>();
  return p;
}

std::vector<double> read_table_targets(std::string_view csv) {
  const auto records = parse_csv(csv);
  if (records.empty() || records[0].empty() || records[0].back() != "y") {
    throw SchemaError("table CSV must end with a 'y' column");
  }
  std::vector<double> y;
  y.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != records[0].size()) {
      throw SchemaError("table CSV row " + std::to_string(r) + " has the wrong field count");
    }
    y.push_back(parse_number(records[r].back()).as_float());
  }
  return y;
}

std::filesystem::path resolve_path(const std::string& stored,
                                   const std::filesystem::path& base_dir) {
  const std::filesystem::path p(stored);
  if (p.is_absolute()) return p;
  const auto candidate = base_dir / p;
  if (std::filesystem::exists(candidate)) return candidate;
  return p;
}

Cell score_prediction_file(const PredictionFile& p, const std::filesystem::path& prediction_path,
                           CellSource source) {
  Cell cell;
  cell.problem_id = p.problem_id;
  cell.model = p.model;
  cell.split = p.split;
  cell.cap = p.cap;
  cell.source = source;
  cell.predictions_path = prediction_path.string();
  cell.manifest_path = p.manifest_path;
  cell.model_spec = {{"name", p.model}, {"adapter_version", p.adapter_version}};

  const auto manifest_file = resolve_path(p.manifest_path, prediction_path.parent_path());
  const std::string manifest_text = read_file(manifest_file);
  if (sha256_hex(manifest_text) != p.manifest_sha256) {
    throw DigestMismatch("manifest " + manifest_file.string() +
                         " does not match the prediction file's manifest_sha256");
  }
  const SplitManifest m = manifest_from_json(Json::parse(manifest_text));
  if (m.cap != p.cap || m.kind != p.split || m.operator_id != p.problem_id) {
    throw SchemaError("prediction file disagrees with its manifest on problem, split or cap");
  }
  const auto table_file = resolve_path(m.table_path, manifest_file.parent_path());
  const std::string table_text = read_file(table_file);
  if (sha256_hex(table_text) != m.table_sha256) {
    throw DigestMismatch("table " + table_file.string() + " does not match the manifest digest");
  }
  if (p.predictions.size() != m.query.size()) {
    throw LengthMismatch("prediction file has " + std::to_string(p.predictions.size()) +
                         " predictions for " + std::to_string(m.query.size()) + " query rows");
  }
  const auto y = read_table_targets(table_text);
  auto pick = [&](const std::vector<std::size_t>& ids) {
    std::vector<double> out;
    out.reserve(ids.size());
    for (auto id : ids) {
      if (id >= y.size()) throw SchemaError("manifest row id beyond the table");
      out.push_back(y[id]);
    }
    return out;
  };
  cell.metrics = score_predictions(p.predictions, pick(m.query), pick(m.context));
  cell.seeds.split = m.seed;
  cell.ok = true;
  return cell;
}

}  // namespace tabmath
