#include "tabmath/features.hpp"

#include <cmath>
#include <limits>

#include "tabmath/io.hpp"
#include "tabmath/version.hpp"

namespace tabmath {

namespace {

constexpr int kModuli[] = {3, 5, 7, 10};

bool has_code(const SlotSpec& slot) { return !is_numeric(slot.kind) && !slot.categories.empty(); }

double sign_of(double x) { return static_cast<double>((x > 0) - (x < 0)); }

}  // namespace

double floor_mod(double x, double k) {
  double r = std::fmod(x, k);
  if (r != 0 && ((r < 0) != (k < 0))) r += k;
  return r;
}

std::vector<std::string> FeatureMatrix::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::size_t>& positions) const {
  FeatureMatrix out;
  out.operator_id = operator_id;
  out.columns = columns;
  out.dictionaries = dictionaries;
  const std::size_t nc = cols();
  out.values.reserve(positions.size() * nc);
  for (auto p : positions) {
    out.row_ids.push_back(row_ids.at(p));
    out.y.push_back(y[p]);
    out.values.insert(out.values.end(), values.begin() + p * nc, values.begin() + (p + 1) * nc);
  }
  return out;
}

std::vector<FeatureColumn> feature_schema(const OperatorSpec& spec) {
  std::vector<FeatureColumn> cols;
  for (const auto& slot : spec.slots) {
    const std::string base = "slot_" + slot.name;
    if (is_numeric(slot.kind)) {
      cols.push_back({base, slot.name, "raw"});
      cols.push_back({base + "_abs_log1p", slot.name, "abs_log1p"});
      cols.push_back({base + "_sign", slot.name, "sign"});
      if (slot.kind == SlotKind::kInt) {
        cols.push_back({base + "_parity", slot.name, "parity"});
        for (int k : kModuli) {
          const std::string tag = "mod_" + std::to_string(k);
          cols.push_back({base + "_" + tag, slot.name, tag});
        }
      } else {
        cols.push_back({base + "_frac", slot.name, "frac"});
      }
    } else if (has_code(slot)) {
      cols.push_back({base + "_code", slot.name, "code"});
    }
  }
  cols.push_back({"text_char_count", "", "char_count"});
  cols.push_back({"text_char_delta", "", "char_delta"});
  return cols;
}

FeatureMatrix engineer_features(const Table& table, const OperatorSpec& spec) {
  FeatureMatrix m;
  m.operator_id = spec.id;
  m.columns = feature_schema(spec);
  for (const auto& slot : spec.slots) {
    if (!has_code(slot)) continue;
    CategoricalDictionary dict{slot.name, {}};
    for (const auto& v : slot.categories) dict.values.push_back(lang::format_value(v));
    m.dictionaries.push_back(std::move(dict));
  }

  const double base_chars = static_cast<double>(
      utf8_length(render_text(spec, normalize_assignment(spec, spec.base_assignment), 0)));
  const std::size_t nc = m.columns.size();
  m.values.reserve(table.rows.size() * nc);
  m.y.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const Row& row = table.rows[r];
    for (std::size_t s = 0; s < spec.slots.size(); ++s) {
      const SlotSpec& slot = spec.slots[s];
      const lang::Value& v = row.values[s];
      if (is_numeric(slot.kind)) {
        const double x = v.as_float();
        m.values.push_back(x);
        m.values.push_back(std::log1p(std::fabs(x)));
        m.values.push_back(sign_of(x));
        if (slot.kind == SlotKind::kInt) {
          m.values.push_back(floor_mod(x, 2));
          for (int k : kModuli) m.values.push_back(floor_mod(x, k));
        } else {
          m.values.push_back(x - std::floor(x));
        }
      } else if (has_code(slot)) {
        const auto code = slot.category_code(v);
        m.values.push_back(code ? static_cast<double>(*code)
                                : std::numeric_limits<double>::quiet_NaN());
      }
    }
    const double chars =
        static_cast<double>(utf8_length(render_text(spec, table, r, row.template_index)));
    m.values.push_back(chars);
    m.values.push_back(chars - base_chars);
    m.row_ids.push_back(r);
    m.y.push_back(row.y.as_float());
  }
  return m;
}

std::string features_to_csv(const FeatureMatrix& m) {
  std::string out = "row_id";
  for (const auto& c : m.columns) {
    out += ',';
    out += csv_escape(c.name);
  }
  out += ",y\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += std::to_string(m.row_ids[r]);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out += ',';
      const double v = m.at(r, c);
      if (!std::isnan(v)) out += lang::format_double(v);
    }
    out += ',';
    out += lang::format_double(m.y[r]);
    out += '\n';
  }
  return out;
}

Json feature_manifest(const FeatureMatrix& m, std::string_view csv_file,
                      std::string_view csv_sha256, std::uint64_t seed) {
  Json j = Json::object();
  j["schema_version"] = 1;
  j["kind"] = "features";
  j["operator_id"] = m.operator_id;
  j["seed"] = seed;
  j["n_rows"] = m.rows();
  Json cols = Json::array();
  for (const auto& c : m.columns) {
    cols.push_back({{"name", c.name}, {"slot", c.slot}, {"transform", c.transform}});
  }
  j["columns"] = std::move(cols);
  Json dicts = Json::object();
  for (const auto& d : m.dictionaries) dicts[d.slot] = d.values;
  j["categorical"] = std::move(dicts);
  j["csv_file"] = std::string(csv_file);
  j["sha256"] = std::string(csv_sha256);
  j["software_version"] = kSoftwareVersion;
  return j;
}

}  // namespace tabmath
