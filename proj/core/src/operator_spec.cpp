#include "tabmath/operator_spec.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tabmath/errors.hpp"
#include "tabmath/io.hpp"
#include "tabmath/json_value.hpp"
#include "tabmath/lang/parser.hpp"

namespace tabmath {

using lang::Value;

const char* to_string(SlotKind kind) {
  switch (kind) {
    case SlotKind::kInt: return "int";
    case SlotKind::kFloat: return "float";
    case SlotKind::kChoice: return "choice";
    case SlotKind::kStr: return "str";
    case SlotKind::kEntity: return "entity";
    case SlotKind::kUnit: return "unit";
  }
  return "?";
}

std::optional<SlotKind> parse_slot_kind(std::string_view text) {
  for (SlotKind k : {SlotKind::kInt, SlotKind::kFloat, SlotKind::kChoice, SlotKind::kStr,
                     SlotKind::kEntity, SlotKind::kUnit}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

std::optional<std::size_t> SlotSpec::category_code(const Value& v) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i].type() == v.type() && categories[i] == v) return i;
  }
  return std::nullopt;
}

const SlotSpec* OperatorSpec::find_slot(std::string_view name) const {
  for (const auto& s : slots) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::string> OperatorSpec::slot_names() const {
  std::vector<std::string> names;
  names.reserve(slots.size());
  for (const auto& s : slots) names.push_back(s.name);
  return names;
}

bool operator==(const OperatorSpec& a, const OperatorSpec& b) {
  return a.id == b.id && a.text_templates == b.text_templates && a.slots == b.slots &&
         a.generator == b.generator && a.verifier == b.verifier &&
         a.base_assignment == b.base_assignment && a.gold_answer.type() == b.gold_answer.type() &&
         a.gold_answer == b.gold_answer && a.meta == b.meta;
}

std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '[') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tmpl.size() && ((tmpl[j] >= 'a' && tmpl[j] <= 'z') ||
                               (tmpl[j] >= '0' && tmpl[j] <= '9') || tmpl[j] == '_')) {
      ++j;
    }
    if (j < tmpl.size() && tmpl[j] == ']' && j > i + 1 && tmpl[i + 1] >= 'a' && tmpl[i + 1] <= 'z') {
      out.emplace_back(tmpl.substr(i + 1, j - i - 1));
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

namespace {

bool valid_slot_name(std::string_view name) {
  if (name.empty() || name[0] < 'a' || name[0] > 'z') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::string join(const std::set<std::string>& names) {
  std::string out = "[";
  bool first = true;
  for (const auto& n : names) {
    if (!first) out += ", ";
    first = false;
    out += n;
  }
  return out + "]";
}

void require_same_names(const std::set<std::string>& slots, const std::set<std::string>& other,
                        const std::string& where) {
  if (slots == other) return;
  std::set<std::string> missing, extra;
  std::set_difference(slots.begin(), slots.end(), other.begin(), other.end(),
                      std::inserter(missing, missing.end()));
  std::set_difference(other.begin(), other.end(), slots.begin(), slots.end(),
                      std::inserter(extra, extra.end()));
  std::string msg = "slot names in " + where + " do not match the declared slots:";
  if (!missing.empty()) msg += " missing " + join(missing);
  if (!extra.empty()) msg += " undeclared " + join(extra);
  throw SlotMismatchError(msg);
}

const Json& require(const Json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(ctx + ": missing required field '" + key + "'");
  return *it;
}

Value coerce_for_kind(SlotKind kind, Value v) {
  if (kind == SlotKind::kFloat && v.is_int()) return Value::floating(static_cast<double>(v.as_int()));
  return v;
}

std::vector<Value> declared_categories(SlotKind kind, const Json& map, const Json& meta) {
  auto list_at = [](const Json& obj, const char* key) -> std::optional<std::vector<Value>> {
    if (!obj.is_object()) return std::nullopt;
    auto it = obj.find(key);
    if (it == obj.end()) return std::nullopt;
    if (!it->is_array()) throw SchemaError(std::string("'") + key + "' must be an array");
    std::vector<Value> out;
    for (const auto& e : *it) out.push_back(json_to_value(e));
    return out;
  };
  std::vector<const char*> keys;
  switch (kind) {
    case SlotKind::kChoice: keys = {"values", "choices"}; break;
    case SlotKind::kEntity: keys = {"names", "values"}; break;
    case SlotKind::kUnit: keys = {"units", "values"}; break;
    case SlotKind::kStr: keys = {"values"}; break;
    default: return {};
  }
  for (const char* k : keys) {
    if (auto v = list_at(map, k)) return *v;
    if (auto v = list_at(meta, k)) return *v;
  }
  return {};
}

std::optional<std::string> value_conforms(const SlotSpec& slot, const Value& v) {
  const std::string ctx = "slot '" + slot.name + "' (" + to_string(slot.kind) + ")";
  switch (slot.kind) {
    case SlotKind::kInt:
      if (!v.is_int()) return ctx + " expects Int, got " + v.type_name();
      return std::nullopt;
    case SlotKind::kFloat:
      if (!v.is_number()) return ctx + " expects a number, got " + v.type_name();
      if (!std::isfinite(v.as_float())) return ctx + " value is not finite";
      return std::nullopt;
    case SlotKind::kStr:
    case SlotKind::kEntity:
    case SlotKind::kUnit:
      if (!v.is_str()) return ctx + " expects Str, got " + v.type_name();
      break;
    case SlotKind::kChoice: break;
  }
  if (!slot.categories.empty() && !slot.category_code(v)) {
    return ctx + " value " + lang::repr_value(v) + " is not among the declared values";
  }
  return std::nullopt;
}

ProgramSource load_program(const Json& doc, const char* field, const char* entry) {
  const Json& obj = require(doc, field, "operator");
  if (!obj.is_object()) throw SchemaError(std::string("'") + field + "' must be an object");
  ProgramSource src;
  const Json& type = require(obj, "type", field);
  const Json& code = require(obj, "code", field);
  if (!type.is_string() || !code.is_string()) {
    throw SchemaError(std::string(field) + ": 'type' and 'code' must be strings");
  }
  src.type = type.get<std::string>();
  if (src.type != "oplang") {
    throw SchemaError(std::string(field) + ": unsupported program type '" + src.type +
                      "' (expected \"oplang\")");
  }
  src.code = code.get<std::string>();
  auto program = std::make_shared<lang::Program>(lang::parse_program(src.code));
  if (program->find(entry) == nullptr) {
    throw SchemaError(std::string(field) + ": code defines no function '" + entry + "'");
  }
  src.program = std::move(program);
  return src;
}

void collect_return_maps(const lang::Block& block, std::vector<const lang::Expr*>& out) {
  for (const auto& s : block) {
    switch (s->kind) {
      case lang::StmtKind::kReturn:
        if (s->value && s->value->kind == lang::ExprKind::kMap) out.push_back(s->value.get());
        break;
      case lang::StmtKind::kWhile: collect_return_maps(s->body, out); break;
      case lang::StmtKind::kIf:
        for (const auto& b : s->branches) collect_return_maps(b.body, out);
        collect_return_maps(s->else_body, out);
        break;
      default: break;
    }
  }
}

SlotSpec load_slot(const std::string& name, const Json& decl) {
  const std::string ctx = "slot '" + name + "'";
  if (!valid_slot_name(name)) {
    throw SchemaError(ctx + ": name must be ASCII snake_case matching [a-z][a-z0-9_]*");
  }
  if (!decl.is_object()) throw SchemaError(ctx + ": declaration must be an object");
  SlotSpec slot;
  slot.name = name;
  const Json& kind = require(decl, "kind", ctx);
  if (!kind.is_string()) throw SchemaError(ctx + ": 'kind' must be a string");
  auto parsed = parse_slot_kind(kind.get<std::string>());
  if (!parsed) {
    throw SchemaError(ctx + ": kind '" + kind.get<std::string>() +
                      "' is not one of {int, float, choice, str, entity, unit}");
  }
  slot.kind = *parsed;
  if (auto it = decl.find("map"); it != decl.end()) slot.map = *it;
  if (auto it = decl.find("meta"); it != decl.end()) slot.meta = *it;
  if (auto it = decl.find("interval"); it != decl.end()) slot.interval = *it;
  if (auto it = decl.find("weight"); it != decl.end()) {
    if (!it->is_number()) throw SchemaError(ctx + ": 'weight' must be a number");
    slot.weight = it->get<double>();
  }
  slot.categories = declared_categories(slot.kind, slot.map, slot.meta);
  if (auto it = decl.find("base_value"); it != decl.end()) {
    slot.base_value = coerce_for_kind(slot.kind, json_to_value(*it));
    if (auto err = value_conforms(slot, slot.base_value)) {
      throw SchemaError("base_value of " + *err);
    }
  }
  return slot;
}

}  // namespace

OperatorSpec load_spec(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("operator document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("operator document must be a single JSON object");

  OperatorSpec spec;
  const Json& id = require(doc, "id", "operator");
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw SchemaError("operator: 'id' must be a non-empty string");
  }
  spec.id = id.get<std::string>();
  const std::string ctx = "operator '" + spec.id + "'";

  const Json& templates = require(doc, "text_templates", ctx);
  if (!templates.is_array() || templates.empty()) {
    throw SchemaError(ctx + ": 'text_templates' must be a non-empty array");
  }
  for (const auto& t : templates) {
    if (!t.is_string()) throw SchemaError(ctx + ": templates must be strings");
    const auto text = t.get<std::string>();
    const auto open = text.find('{');
    if (open != std::string::npos && text.find('}', open) != std::string::npos) {
      throw SchemaError(ctx + ": templates use [slot_name] placeholders only, found braces in \"" +
                        text + "\"");
    }
    spec.text_templates.push_back(text);
  }

  const Json& slots = require(doc, "slots", ctx);
  std::set<std::string> slot_set;
  auto add_slot = [&](SlotSpec slot) {
    if (!slot_set.insert(slot.name).second) {
      throw SchemaError(ctx + ": duplicate slot '" + slot.name + "'");
    }
    spec.slots.push_back(std::move(slot));
  };
  if (slots.is_object()) {
    for (const auto& [name, decl] : slots.items()) add_slot(load_slot(name, decl));
  } else if (slots.is_array()) {
    for (const auto& decl : slots) {
      if (!decl.is_object() || !decl.contains("name") || !decl["name"].is_string()) {
        throw SchemaError(ctx + ": slot list entries need a string 'name'");
      }
      add_slot(load_slot(decl["name"].get<std::string>(), decl));
    }
  } else {
    throw SchemaError(ctx + ": 'slots' must be an object or an array");
  }
  if (spec.slots.empty()) throw SchemaError(ctx + ": at least one slot is required");

  spec.verifier = load_program(doc, "verifier", "verifier");
  spec.generator = load_program(doc, "generator", "generator");

  const Json& base = require(doc, "base_assignment", ctx);
  if (!base.is_object()) throw SchemaError(ctx + ": 'base_assignment' must be an object");
  std::set<std::string> base_keys;
  for (const auto& [k, v] : base.items()) {
    base_keys.insert(k);
    const SlotSpec* slot = nullptr;
    for (const auto& s : spec.slots) {
      if (s.name == k) slot = &s;
    }
    Value value = json_to_value(v);
    if (slot != nullptr) value = coerce_for_kind(slot->kind, std::move(value));
    spec.base_assignment.emplace(k, std::move(value));
  }

  const Json& gold = require(doc, "gold_answer", ctx);
  if (!gold.is_number()) throw SchemaError(ctx + ": 'gold_answer' must be numeric");
  spec.gold_answer = json_to_value(gold);
  if (auto it = doc.find("meta"); it != doc.end()) spec.meta = *it;

  for (std::size_t i = 0; i < spec.text_templates.size(); ++i) {
    const auto names = template_placeholders(spec.text_templates[i]);
    require_same_names(slot_set, std::set<std::string>(names.begin(), names.end()),
                       "text_templates[" + std::to_string(i) + "]");
  }
  require_same_names(slot_set, base_keys, "base_assignment");

  const lang::Function* verifier = spec.verifier.program->find("verifier");
  require_same_names(slot_set,
                     std::set<std::string>(verifier->params.begin(), verifier->params.end()),
                     "verifier parameters");

  const lang::Function* generator = spec.generator.program->find("generator");
  if (!generator->params.empty()) {
    throw SchemaError(ctx + ": generator takes no parameters (randomness comes from rng.*)");
  }
  std::vector<const lang::Expr*> returns;
  collect_return_maps(generator->body, returns);
  for (const lang::Expr* r : returns) {
    require_same_names(slot_set, std::set<std::string>(r->keys.begin(), r->keys.end()),
                       "generator output");
  }

  for (auto& slot : spec.slots) {
    const Value& assigned = spec.base_assignment.at(slot.name);
    if (auto err = value_conforms(slot, assigned)) throw SchemaError("base_assignment: " + *err);
    if (slot.base_value.is_null()) {
      slot.base_value = assigned;
    } else if (!(slot.base_value == assigned)) {
      throw SchemaError(ctx + ": slot '" + slot.name + "' base_value " +
                        lang::repr_value(slot.base_value) + " disagrees with base_assignment " +
                        lang::repr_value(assigned));
    }
  }
  return spec;
}

OperatorSpec load_spec_file(const std::string& path) { return load_spec(read_file(path)); }

Json spec_to_json(const OperatorSpec& spec) {
  Json doc = Json::object();
  doc["id"] = spec.id;
  doc["text_templates"] = spec.text_templates;
  Json slots = Json::object();
  for (const auto& s : spec.slots) {
    Json decl = Json::object();
    decl["kind"] = to_string(s.kind);
    if (!s.interval.is_null()) decl["interval"] = s.interval;
    if (!s.map.is_null()) decl["map"] = s.map;
    if (s.weight) decl["weight"] = *s.weight;
    decl["base_value"] = value_to_json(s.base_value);
    if (!s.meta.is_null()) decl["meta"] = s.meta;
    slots[s.name] = std::move(decl);
  }
  doc["slots"] = std::move(slots);
  doc["verifier"] = {{"type", spec.verifier.type}, {"code", spec.verifier.code}};
  doc["generator"] = {{"type", spec.generator.type}, {"code", spec.generator.code}};
  Json base = Json::object();
  for (const auto& s : spec.slots) base[s.name] = value_to_json(spec.base_assignment.at(s.name));
  doc["base_assignment"] = std::move(base);
  doc["gold_answer"] = value_to_json(spec.gold_answer);
  if (!spec.meta.is_null()) doc["meta"] = spec.meta;
  return doc;
}

Verdict interpret_verdict(const Value& result) {
  if (result.is_pair()) {
    const auto& p = result.as_pair();
    if (!p.flag) return {false, Value::null()};
    if (!p.second.is_number()) {
      throw lang::TypeError(std::string("verifier label must be numeric, got ") +
                            p.second.type_name());
    }
    return {true, p.second};
  }
  if (result.is_number()) return {true, result};
  if (result.is_bool() && !result.as_bool()) return {false, Value::null()};
  throw lang::TypeError(std::string("verifier must return (Bool, y) or a number, got ") +
                        result.type_name());
}

bool labels_match(const Value& got, const Value& expected) {
  if (!got.is_number() || !expected.is_number()) return false;
  if (got.is_int() && expected.is_int()) return got.as_int() == expected.as_int();
  if (got == expected) return true;
  const double a = got.as_float();
  const double b = expected.as_float();
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b));
}

std::optional<std::string> check_assignment(const OperatorSpec& spec, const Value& output) {
  if (!output.is_map()) {
    return std::string("generator must return a Map of slot values, got ") + output.type_name();
  }
  const auto& m = output.as_map();
  std::set<std::string> keys;
  for (const auto& [k, v] : m) keys.insert(k);
  const auto names = spec.slot_names();
  std::set<std::string> slot_set(names.begin(), names.end());
  if (keys != slot_set) {
    try {
      require_same_names(slot_set, keys, "generator output");
    } catch (const SlotMismatchError& e) {
      return std::string(e.what());
    }
  }
  for (const auto& slot : spec.slots) {
    if (auto err = value_conforms(slot, m.at(slot.name))) return err;
  }
  return std::nullopt;
}

Verdict run_verifier(const OperatorSpec& spec, const lang::Map& assignment,
                     const lang::Limits& limits) {
  auto rng = lang::RngState::derive(spec.id, "verifier", 0);
  return interpret_verdict(
      lang::eval_function(*spec.verifier.program, "verifier", assignment, rng, limits));
}

lang::Map normalize_assignment(const OperatorSpec& spec, const lang::Map& assignment) {
  lang::Map out = assignment;
  for (const auto& slot : spec.slots) {
    auto it = out.find(slot.name);
    if (it != out.end()) it->second = coerce_for_kind(slot.kind, it->second);
  }
  return out;
}

ValidationReport verify_base(const OperatorSpec& spec, const lang::Limits& limits) {
  ValidationReport report;
  report.trials = 1;
  for (const auto& slot : spec.slots) {
    if (auto err = value_conforms(slot, spec.base_assignment.at(slot.name))) {
      report.failures.push_back("base assignment: " + *err);
    }
  }
  try {
    const Verdict verdict = run_verifier(spec, spec.base_assignment, limits);
    if (!verdict.valid) {
      report.failures.push_back("verifier rejected the base assignment (returned false)");
    } else if (!labels_match(verdict.label, spec.gold_answer)) {
      report.failures.push_back("gold mismatch: got " + lang::format_value(verdict.label) +
                                ", expected " + lang::format_value(spec.gold_answer));
    }
  } catch (const std::runtime_error& e) {
    report.failures.push_back(std::string("verifier failed on the base assignment: ") + e.what());
  }
  report.accepted = report.failures.empty();
  report.rejections = report.accepted ? 0 : 1;
  return report;
}

ValidationReport check_generator(const OperatorSpec& spec, std::uint64_t seed, std::size_t trials,
                                 const lang::Limits& limits) {
  if (trials == 0) throw PreconditionError("check_generator: trials must be at least 1");
  ValidationReport report;
  report.trials = trials;
  std::vector<std::string> samples;
  auto note = [&](std::string msg) {
    ++report.rejections;
    if (samples.size() < 5) samples.push_back(std::move(msg));
  };
  for (std::size_t t = 0; t < trials; ++t) {
    auto rng = lang::RngState::derive(spec.id, "check_generator", seed, {t});
    Value out;
    try {
      out = lang::eval_function(*spec.generator.program, "generator", {}, rng, limits);
    } catch (const lang::ResourceError&) {
      throw;
    } catch (const lang::LangError& e) {
      note("trial " + std::to_string(t) + ": generator error: " + e.what());
      continue;
    }
    if (auto err = check_assignment(spec, out)) {
      note("trial " + std::to_string(t) + ": " + *err);
      continue;
    }
    try {
      const Verdict v = run_verifier(spec, normalize_assignment(spec, out.as_map()), limits);
      if (!v.valid) {
        note("trial " + std::to_string(t) + ": verifier rejected " + lang::repr_value(out));
      }
    } catch (const lang::ResourceError&) {
      throw;
    } catch (const lang::LangError& e) {
      note("trial " + std::to_string(t) + ": verifier error on " + lang::repr_value(out) + ": " +
           e.what());
    }
  }
  report.rejection_rate = static_cast<double>(report.rejections) / static_cast<double>(trials);
  if (report.rejections > 0) {
    std::ostringstream msg;
    msg << "generator: " << report.rejections << " of " << trials
        << " assignments failed the verifier (rejection rate " << *report.rejection_rate << ")";
    report.failures.push_back(msg.str());
    for (auto& s : samples) report.failures.push_back(std::move(s));
  }
  report.accepted = report.failures.empty();
  return report;
}

}  // namespace tabmath
