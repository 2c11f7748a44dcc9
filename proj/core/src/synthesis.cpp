#include "tabmath/synthesis.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "tabmath/errors.hpp"
#include "tabmath/io.hpp"
#include "tabmath/version.hpp"

namespace tabmath {

using lang::Value;

bool operator==(const Row& a, const Row& b) {
  if (a.template_index != b.template_index || a.values.size() != b.values.size()) return false;
  if (a.y.type() != b.y.type() || !(a.y == b.y)) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i].type() != b.values[i].type() || !(a.values[i] == b.values[i])) return false;
  }
  return true;
}

std::vector<std::string> Table::columns() const {
  auto cols = slot_names;
  cols.emplace_back("y");
  return cols;
}

lang::Map Table::assignment(std::size_t row) const {
  lang::Map m;
  for (std::size_t c = 0; c < slot_names.size(); ++c) m.emplace(slot_names[c], rows[row].values[c]);
  return m;
}

std::string canonical_key(const std::vector<Value>& values) {
  std::string key;
  for (const auto& v : values) {
    const std::string text = lang::format_value(v);
    key += v.is_str() ? 's' : 'n';
    key += std::to_string(text.size());
    key += ':';
    key += text;
  }
  return key;
}

namespace {

enum class AttemptStatus { kAccepted, kRejected, kFailed };

struct Attempt {
  AttemptStatus status = AttemptStatus::kRejected;
  Row row;
  std::string error;
};

Attempt run_attempt(const OperatorSpec& spec, std::uint64_t seed, std::uint64_t k,
                    const lang::Limits& limits) {
  Attempt a;
  try {
    auto rng = lang::RngState::derive(spec.id, "synthesis", seed, {k});
    const Value out = lang::eval_function(*spec.generator.program, "generator", {}, rng, limits);
    if (auto err = check_assignment(spec, out)) {
      a.status = AttemptStatus::kFailed;
      a.error = "attempt " + std::to_string(k) + ": " + *err;
      return a;
    }
    const lang::Map assignment = normalize_assignment(spec, out.as_map());
    a.row.template_index = static_cast<std::size_t>(
        rng.randint(0, static_cast<std::int64_t>(spec.text_templates.size()) - 1));
    const Verdict v = run_verifier(spec, assignment, limits);
    if (!v.valid) return a;
    if (!std::isfinite(v.label.as_float())) {
      a.status = AttemptStatus::kFailed;
      a.error = "attempt " + std::to_string(k) + ": verifier produced a non-finite label for " +
                lang::repr_value(Value::map(assignment));
      return a;
    }
    a.row.values.reserve(spec.slots.size());
    for (const auto& slot : spec.slots) a.row.values.push_back(assignment.at(slot.name));
    a.row.y = v.label;
    a.status = AttemptStatus::kAccepted;
  } catch (const lang::LangError& e) {
    a.status = AttemptStatus::kFailed;
    a.error = "attempt " + std::to_string(k) + ": " + e.what();
  }
  return a;
}

}  // namespace

Table synthesize_table(const OperatorSpec& spec, std::size_t n_rows, std::uint64_t seed,
                       const SynthesisOptions& options) {
  if (n_rows == 0) throw PreconditionError("synthesize_table: n_rows must be at least 1");
  Table table;
  table.operator_id = spec.id;
  table.slot_names = spec.slot_names();
  table.seed = seed;
  table.rows.reserve(n_rows);

  const std::uint64_t budget = static_cast<std::uint64_t>(options.attempt_factor) * n_rows;
  const unsigned threads = std::max(1u, options.threads);
  const std::uint64_t batch = threads == 1 ? 1 : std::uint64_t{threads} * 32;
  std::unordered_set<std::string> seen;
  seen.reserve(n_rows * 2);

  std::uint64_t next = 0;
  std::vector<Attempt> results;
  while (table.rows.size() < n_rows) {
    if (next >= budget) {
      throw ExhaustionError("operator '" + spec.id + "': only " +
                            std::to_string(table.rows.size()) + " unique verified rows after " +
                            std::to_string(budget) + " attempts (requested " +
                            std::to_string(n_rows) + ")");
    }
    const std::uint64_t count = std::min(batch, budget - next);
    results.assign(count, Attempt{});
    if (threads == 1 || count == 1) {
      for (std::uint64_t i = 0; i < count; ++i) {
        results[i] = run_attempt(spec, seed, next + i, options.limits);
      }
    } else {
      std::vector<std::jthread> workers;
      for (unsigned t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          for (std::uint64_t i = t; i < count; i += threads) {
            results[i] = run_attempt(spec, seed, next + i, options.limits);
          }
        });
      }
    }
    for (std::uint64_t i = 0; i < count && table.rows.size() < n_rows; ++i) {
      Attempt& a = results[i];
      table.attempts = next + i + 1;
      if (a.status == AttemptStatus::kFailed) {
        throw SynthesisError("operator '" + spec.id + "': " + a.error);
      }
      if (a.status != AttemptStatus::kAccepted) continue;
      if (!seen.insert(canonical_key(a.row.values)).second) continue;
      table.rows.push_back(std::move(a.row));
    }
    next += count;
  }
  return table;
}

std::string render_text(const OperatorSpec& spec, const lang::Map& assignment,
                        std::size_t template_index) {
  if (template_index >= spec.text_templates.size()) {
    throw std::out_of_range("template index " + std::to_string(template_index) +
                            " out of range (have " + std::to_string(spec.text_templates.size()) +
                            ")");
  }
  const std::string& tmpl = spec.text_templates[template_index];
  std::string out;
  out.reserve(tmpl.size() + 16);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '[') {
      const auto close = tmpl.find(']', i);
      if (close != std::string::npos) {
        const auto names = template_placeholders(std::string_view(tmpl).substr(i, close - i + 1));
        if (names.size() == 1) {
          auto it = assignment.find(names[0]);
          if (it == assignment.end()) {
            throw SlotMismatchError("no value for placeholder [" + names[0] + "]");
          }
          out += lang::format_value(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string render_text(const OperatorSpec& spec, const Table& table, std::size_t row,
                        std::size_t template_index) {
  return render_text(spec, table.assignment(row), template_index);
}

std::string table_to_csv(const Table& table) {
  std::string out;
  const auto cols = table.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c > 0) out += ',';
    out += csv_escape(cols[c]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (const auto& v : row.values) {
      out += csv_escape(lang::format_value(v));
      out += ',';
    }
    out += lang::format_value(row.y);
    out += '\n';
  }
  return out;
}

Json table_manifest(const Table& table, std::string_view csv_file, std::string_view csv_sha256) {
  Json m = Json::object();
  m["schema_version"] = 1;
  m["kind"] = "table";
  m["operator_id"] = table.operator_id;
  m["seed"] = table.seed;
  m["n_rows"] = table.rows.size();
  m["attempts"] = table.attempts;
  m["columns"] = table.columns();
  m["csv_file"] = std::string(csv_file);
  m["sha256"] = std::string(csv_sha256);
  Json templates = Json::array();
  for (const auto& r : table.rows) templates.push_back(r.template_index);
  m["template_indices"] = std::move(templates);
  m["software_version"] = kSoftwareVersion;
  return m;
}

Value parse_number(std::string_view text) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (text == "nan") return Value::floating(std::nan(""));
  if (text == "inf") return Value::floating(HUGE_VAL);
  if (text == "-inf") return Value::floating(-HUGE_VAL);
  if (text.find_first_of(".eE") == std::string_view::npos) {
    std::int64_t i = 0;
    auto res = std::from_chars(first, last, i);
    if (res.ec == std::errc() && res.ptr == last) return Value::integer(i);
  } else {
    double d = 0;
    auto res = std::from_chars(first, last, d);
    if (res.ec == std::errc() && res.ptr == last) return Value::floating(d);
  }
  throw SchemaError("not a canonical number: '" + std::string(text) + "'");
}

Table read_table(const OperatorSpec& spec, std::string_view csv, const Json& manifest) {
  Table table;
  table.operator_id = manifest.value("operator_id", std::string());
  if (table.operator_id != spec.id) {
    throw SchemaError("table manifest is for operator '" + table.operator_id + "', not '" +
                      spec.id + "'");
  }
  table.slot_names = spec.slot_names();
  table.seed = manifest.value("seed", std::uint64_t{0});
  table.attempts = manifest.value("attempts", std::uint64_t{0});
  const auto records = parse_csv(csv);
  if (records.empty() || records[0] != table.columns()) {
    throw SchemaError("table CSV header does not match the operator's slot columns");
  }
  const Json& templates = manifest.at("template_indices");
  if (templates.size() != records.size() - 1) {
    throw SchemaError("manifest template_indices has " + std::to_string(templates.size()) +
                      " entries for " + std::to_string(records.size() - 1) + " rows");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != table.slot_names.size() + 1) {
      throw SchemaError("table CSV row " + std::to_string(r) + " has the wrong field count");
    }
    Row row;
    for (std::size_t c = 0; c < spec.slots.size(); ++c) {
      const SlotSpec& slot = spec.slots[c];
      switch (slot.kind) {
        case SlotKind::kInt:
        case SlotKind::kFloat: {
          Value v = parse_number(rec[c]);
          if (slot.kind == SlotKind::kFloat && v.is_int()) v = Value::floating(v.as_float());
          row.values.push_back(std::move(v));
          break;
        }
        default: {
          bool matched = false;
          for (const auto& cat : slot.categories) {
            if (lang::format_value(cat) == rec[c]) {
              row.values.push_back(cat);
              matched = true;
              break;
            }
          }
          if (!matched) row.values.push_back(Value::string(rec[c]));
        }
      }
    }
    row.y = parse_number(rec.back());
    row.template_index = templates[r - 1].get<std::size_t>();
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace tabmath
