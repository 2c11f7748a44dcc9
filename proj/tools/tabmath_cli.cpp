// tabmath: synthesize verified tabular benchmarks from operator files and
// evaluate regression models on RANDOM and OOD splits.
//
// Exit codes: 0 success, 1 validation rejection, 2 usage or I/O error.

#include <CLI11.hpp>
#include <glob.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tabmath/errors.hpp"
#include "tabmath/evaluation.hpp"
#include "tabmath/features.hpp"
#include "tabmath/icl.hpp"
#include "tabmath/io.hpp"
#include "tabmath/models.hpp"
#include "tabmath/operator_spec.hpp"
#include "tabmath/pipeline.hpp"
#include "tabmath/report.hpp"
#include "tabmath/synthesis.hpp"
#include "tabmath/version.hpp"

namespace fs = std::filesystem;
using namespace tabmath;

namespace {

constexpr int kOk = 0;
constexpr int kRejected = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Expands shell-style patterns; a pattern without matches is kept verbatim so
// the later open reports the missing file.
std::vector<fs::path> expand(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& p : patterns) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
      continue;
    }
    glob_t g{};
    if (::glob(p.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    } else {
      out.emplace_back(p);
    }
    ::globfree(&g);
  }
  return out;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return read_file(path);
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::vector<std::string> specs;
  std::uint64_t seed = 2025;
  std::size_t trials = 1000;
  bool json = false;
};

int cmd_validate(const ValidateArgs& a) {
  int status = kOk;
  Json all = Json::array();
  for (const auto& path : expand(a.specs)) {
    if (!fs::exists(path)) {
      std::cerr << "error: " << path.string() << ": no such file\n";
      return kUsage;
    }
    ValidationReport report;
    std::string id = path.stem().string();
    try {
      const OperatorSpec spec = load_spec_file(path.string());
      id = spec.id;
      report = verify_base(spec);
      const ValidationReport gen = check_generator(spec, a.seed, a.trials);
      report.failures.insert(report.failures.end(), gen.failures.begin(), gen.failures.end());
      report.trials = gen.trials;
      report.rejections = gen.rejections;
      report.rejection_rate = gen.rejection_rate;
      report.accepted = report.failures.empty();
    } catch (const IoError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const std::exception& e) {
      report.accepted = false;
      report.failures.push_back(e.what());
    }
    if (!report.accepted) status = kRejected;
    if (a.json) {
      all.push_back({{"file", path.string()},
                     {"id", id},
                     {"accepted", report.accepted},
                     {"failures", report.failures},
                     {"trials", report.trials},
                     {"rejection_rate", report.rejection_rate ? Json(*report.rejection_rate)
                                                              : Json(nullptr)}});
    } else {
      std::cout << (report.accepted ? "ACCEPT " : "REJECT ") << id << " (" << path.string()
                << ")\n";
      for (const auto& f : report.failures) std::cout << "  - " << f << "\n";
    }
  }
  if (a.json) std::cout << all.dump(2) << "\n";
  return status;
}

// -------------------------------------------------------------- synthesize

struct SynthesizeArgs {
  std::string spec;
  std::size_t rows = 2048;
  std::uint64_t seed = 2025;
  std::string out = ".";
  unsigned threads = 1;
};

int cmd_synthesize(const SynthesizeArgs& a) {
  const OperatorSpec spec = load_spec_file(a.spec);
  const ValidationReport gate = verify_base(spec);
  if (!gate.accepted) {
    std::cerr << "REJECT " << spec.id << "\n";
    for (const auto& f : gate.failures) std::cerr << "  - " << f << "\n";
    return kRejected;
  }
  SynthesisOptions opts;
  opts.threads = a.threads;
  const Table table = synthesize_table(spec, a.rows, a.seed, opts);
  const std::string csv = table_to_csv(table);
  const std::string digest = sha256_hex(csv);
  const fs::path csv_path = fs::path(a.out) / (spec.id + ".csv");
  const fs::path manifest_path = fs::path(a.out) / (spec.id + ".json");
  write_file(csv_path, csv);
  write_file(manifest_path,
             table_manifest(table, csv_path.filename().string(), digest).dump(2) + "\n");
  std::cout << csv_path.string() << " rows=" << table.rows.size() << " attempts=" << table.attempts
            << " sha256=" << digest << "\n";
  return kOk;
}

// ---------------------------------------------------------------- features

struct FeaturesArgs {
  std::string spec;
  std::string table;  // table CSV; synthesized when empty
  std::size_t rows = 2048;
  std::uint64_t seed = 2025;
  std::string out = ".";
};

int cmd_features(const FeaturesArgs& a) {
  const OperatorSpec spec = load_spec_file(a.spec);
  Table table;
  if (a.table.empty()) {
    table = synthesize_table(spec, a.rows, a.seed);
  } else {
    const fs::path csv(a.table);
    fs::path manifest = csv;
    manifest.replace_extension(".json");
    const std::string text = read_file(csv);
    const Json m = Json::parse(read_file(manifest));
    if (m.value("sha256", std::string()) != sha256_hex(text)) {
      throw DigestMismatch("table " + csv.string() + " does not match its manifest digest");
    }
    table = read_table(spec, text, m);
  }
  const FeatureMatrix fm = engineer_features(table, spec);
  const std::string csv = features_to_csv(fm);
  const fs::path csv_path = fs::path(a.out) / (spec.id + ".features.csv");
  write_file(csv_path, csv);
  write_file(fs::path(a.out) / (spec.id + ".features.json"),
             feature_manifest(fm, csv_path.filename().string(), sha256_hex(csv), table.seed)
                     .dump(2) +
                 "\n");
  std::cout << csv_path.string() << " rows=" << fm.rows() << " columns=" << fm.cols() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::vector<std::string> operators;
  std::string out = "tabmath_out";
  std::size_t rows = 2048;
  std::uint64_t synthesis_seed = 2025;
  std::uint64_t split_seed = 2025;
  std::uint64_t model_seed = 42;
  std::vector<std::string> caps;
  std::vector<std::string> splits;
  std::vector<std::string> models;
  bool allow_any_cap = false;
  bool no_standardize = false;
  unsigned jobs = 1;
  std::string external;
  std::vector<std::string> external_models;
  std::string icl_model;
  std::string icl_replay;
  std::string icl_endpoint;
  std::string icl_api_model;
  bool icl_colon_format = false;
  std::size_t icl_chunk = 0;
  std::size_t icl_max_cap = 128;
  int icl_retries = 10;
  std::string icl_dump;
  bool quiet = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  SweepConfig cfg;
  cfg.operator_files = expand(a.operators);
  for (const auto& f : cfg.operator_files) {
    if (!fs::exists(f)) throw IoError(f.string() + ": no such file");
  }
  cfg.out_dir = a.out;
  cfg.n_rows = a.rows;
  cfg.seeds = {a.synthesis_seed, a.split_seed, a.model_seed};
  cfg.standardize = !a.no_standardize;
  cfg.jobs = std::max(1u, a.jobs);
  if (!a.caps.empty()) {
    cfg.caps.clear();
    for (const auto& c : split_list(a.caps)) {
      std::size_t v = 0;
      try {
        v = std::stoul(c);
      } catch (const std::exception&) {
        throw UsageError("invalid cap '" + c + "'");
      }
      if (v == 0 || (!a.allow_any_cap && !is_grid_cap(v))) {
        throw UsageError("cap " + c +
                         " is not in {32, 64, 128, 256, 512, 1024, 2048} (use --allow-any-cap)");
      }
      cfg.caps.push_back(v);
    }
  }
  if (!a.splits.empty()) {
    cfg.splits.clear();
    for (const auto& s : split_list(a.splits)) {
      auto k = parse_split_kind(s);
      if (!k) throw UsageError("unknown split '" + s + "' (RANDOM or OOD)");
      cfg.splits.push_back(*k);
    }
  }
  if (!a.models.empty()) cfg.models = split_list(a.models);
  for (const auto& m : cfg.models) {
    if (!model_spec(m)) {
      std::string known;
      for (const auto& n : model_names()) known += (known.empty() ? "" : ", ") + n;
      throw UsageError("unknown model '" + m + "' (known: " + known + ")");
    }
  }
  if (!a.external.empty()) {
    ExternalSettings ext;
    ext.command = a.external;
    ext.models = split_list(a.external_models);
    if (ext.models.empty()) throw UsageError("--external needs --external-models");
    cfg.external = ext;
  }
  if (!a.icl_replay.empty() || !a.icl_endpoint.empty()) {
    if (!a.icl_replay.empty() && !a.icl_endpoint.empty()) {
      throw UsageError("--icl-replay and --icl-endpoint are mutually exclusive");
    }
    IclSettings icl;
    icl.model_name = a.icl_model.empty() ? "icl" : a.icl_model;
    icl.prompt.colon_format = a.icl_colon_format;
    icl.chunk_size = a.icl_chunk;
    icl.max_cap = a.icl_max_cap;
    icl.max_retries = a.icl_retries;
    if (!a.icl_dump.empty()) icl.dump_dir = a.icl_dump;
    if (!a.icl_replay.empty()) {
      icl.client = std::make_shared<ReplayCompletionClient>(a.icl_replay);
      icl.initial_backoff = std::chrono::milliseconds(0);
    } else {
      CompletionClientConfig cc;
      cc.endpoint = a.icl_endpoint;
      cc.model = a.icl_api_model.empty() ? icl.model_name : a.icl_api_model;
      if (const char* key = std::getenv("TABMATH_API_KEY")) cc.api_key = key;
      cc.max_retries = a.icl_retries;
      icl.initial_backoff = cc.initial_backoff;
      icl.max_backoff = cc.max_backoff;
      icl.client = std::make_shared<HttpCompletionClient>(cc);
    }
    cfg.icl = std::move(icl);
  } else if (!a.icl_model.empty()) {
    throw UsageError("--icl-model needs --icl-replay or --icl-endpoint");
  }

  const Report report = run_sweep(cfg, [&](const std::string& msg) {
    if (!a.quiet) std::cerr << msg << "\n";
  });
  std::size_t failed = 0;
  for (const auto& c : report.cells) failed += c.ok ? 0 : 1;
  std::cout << (fs::path(a.out) / "report.json").string() << " cells=" << report.cells.size()
            << " failed=" << failed << "\n";
  return kOk;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;     // summary CSV; stdout when empty
  std::string merged;  // merged report JSON, optional
};

int cmd_report(const ReportArgs& a) {
  std::map<std::tuple<std::string, std::string, std::string, std::size_t, std::string>, Cell>
      cells;
  std::vector<std::tuple<std::string, std::string, std::string, std::size_t, std::string>> order;
  auto add = [&](Cell c) {
    auto key = std::make_tuple(c.problem_id, c.model, std::string(to_string(c.split)), c.cap,
                               std::string(to_string(c.source)));
    if (!cells.count(key)) order.push_back(key);
    cells[key] = std::move(c);
  };
  Json config = Json::object();
  Json inputs = Json::array();
  for (const auto& path : expand(a.inputs)) {
    const Json doc = Json::parse(read_file(path));
    inputs.push_back(path.generic_string());
    const std::string kind = doc.is_object() ? doc.value("kind", std::string()) : std::string();
    if (kind == "predictions") {
      const PredictionFile pf = prediction_file_from_json(doc);
      add(score_prediction_file(pf, path, CellSource::kExternal));
    } else if (kind == "report") {
      if (!doc.contains("schema_version") || doc["schema_version"] != kReportSchemaVersion) {
        throw SchemaError(path.string() + ": schema_version " +
                          (doc.contains("schema_version") ? doc["schema_version"].dump() : "?") +
                          " conflicts with " + std::to_string(kReportSchemaVersion));
      }
      for (auto& c : report_from_json(doc).cells) add(std::move(c));
    } else {
      throw SchemaError(path.string() + ": not a report or prediction file");
    }
  }
  Report merged;
  merged.config = {{"inputs", inputs}};
  for (const auto& k : order) merged.cells.push_back(cells[k]);
  merged.aggregates = aggregate(merged.cells);
  const std::string csv = summary_csv(merged.aggregates);
  if (a.out.empty()) std::cout << csv;
  else write_file(a.out, csv);
  if (!a.merged.empty()) write_file(a.merged, report_to_json(merged).dump(2) + "\n");
  return kOk;
}

// --------------------------------------------------------------------- icl

struct IclSerializeArgs {
  std::string spec;
  std::string manifest;
  bool colon_format = false;
  std::size_t chunk = 0;
  std::string out;
};

int cmd_icl_serialize(const IclSerializeArgs& a) {
  const OperatorSpec spec = load_spec_file(a.spec);
  const fs::path mpath(a.manifest);
  const SplitManifest m = manifest_from_json(Json::parse(read_file(mpath)));
  const fs::path table_csv = resolve_path(m.table_path, mpath.parent_path());
  const std::string text = read_file(table_csv);
  if (sha256_hex(text) != m.table_sha256) {
    throw DigestMismatch("table " + table_csv.string() + " does not match the manifest digest");
  }
  fs::path table_manifest_path = table_csv;
  table_manifest_path.replace_extension(".json");
  const Table table = read_table(spec, text, Json::parse(read_file(table_manifest_path)));
  PromptOptions opts;
  opts.colon_format = a.colon_format;
  const auto bundles = serialize_prompts(icl_rows(table, m.context), icl_rows(table, m.query),
                                         spec.id, icl_columns(spec), a.chunk, opts);
  std::string out;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (a.out.empty()) {
      std::cout << bundles[i].text;
      if (i + 1 < bundles.size()) std::cout << "\n";
    } else {
      const fs::path p = bundles.size() == 1
                             ? fs::path(a.out)
                             : fs::path(a.out + "." + std::to_string(i));
      write_file(p, bundles[i].text);
      std::cerr << p.string() << " expected=" << bundles[i].expected
                << " chars=" << bundles[i].char_count()
                << " key=" << ReplayCompletionClient::key(bundles[i].text) << "\n";
    }
  }
  return kOk;
}

struct IclParseArgs {
  std::string input = "-";
  std::size_t expected = 0;
};

int cmd_icl_parse(const IclParseArgs& a) {
  const auto preds = parse_predictions(read_input(a.input), a.expected);
  std::cout << Json(preds).dump() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabmath: verified tabular benchmark synthesis and evaluation"};
  app.set_version_flag("--version", std::string("tabmath ") + kSoftwareVersion);
  app.require_subcommand(1);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Gate operator files (gold check + generator check)");
  validate->add_option("specs", va.specs, "Operator files, directories or glob patterns")->required();
  validate->add_option("--seed", va.seed, "Generator-check seed")->capture_default_str();
  validate->add_option("--trials", va.trials, "Generator-check trials")->capture_default_str();
  validate->add_flag("--json", va.json, "Print reports as JSON");

  SynthesizeArgs sa;
  auto* synthesize = app.add_subcommand("synthesize", "Write a verified table CSV and its manifest");
  synthesize->add_option("spec", sa.spec, "Operator file")->required();
  synthesize->add_option("--rows", sa.rows, "Number of unique rows")->capture_default_str();
  synthesize->add_option("--seed", sa.seed, "Synthesis seed")->capture_default_str();
  synthesize->add_option("--out", sa.out, "Output directory")->capture_default_str();
  synthesize->add_option("--threads", sa.threads, "Worker threads (output does not depend on it)")
      ->capture_default_str();

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Write the engineered feature CSV and manifest");
  features->add_option("spec", fa.spec, "Operator file")->required();
  features->add_option("--table", fa.table, "Table CSV (its manifest sits beside it as .json)");
  features->add_option("--rows", fa.rows, "Rows to synthesize when no table is given")
      ->capture_default_str();
  features->add_option("--seed", fa.seed, "Synthesis seed when no table is given")
      ->capture_default_str();
  features->add_option("--out", fa.out, "Output directory")->capture_default_str();

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Run the problem x model x split x cap sweep");
  evaluate->add_option("operators", ea.operators, "Operator files, directories or glob patterns")
      ->required();
  evaluate->add_option("--out", ea.out, "Output directory")->capture_default_str();
  evaluate->add_option("--rows", ea.rows, "Rows synthesized per problem")->capture_default_str();
  evaluate->add_option("--synthesis-seed", ea.synthesis_seed)->capture_default_str();
  evaluate->add_option("--split-seed", ea.split_seed, "Seed for row caps and RANDOM splits")
      ->capture_default_str();
  evaluate->add_option("--model-seed", ea.model_seed)->capture_default_str();
  evaluate->add_option("--caps", ea.caps, "Row caps, comma separated (default: full grid)");
  evaluate->add_option("--splits", ea.splits, "RANDOM, OOD or both (default: both)");
  evaluate->add_option("--models", ea.models,
                       "Native models: mean, ols, knn, cart, rf, gbt-xgb, gbt-cat "
                       "(default: mean,ols,knn,cart,rf,gbt-xgb)");
  evaluate->add_flag("--allow-any-cap", ea.allow_any_cap, "Accept caps outside the study grid");
  evaluate->add_flag("--no-standardize", ea.no_standardize, "Skip feature z-scoring");
  evaluate->add_option("--jobs,-j", ea.jobs, "Parallel cells")->capture_default_str();
  evaluate->add_option("--external", ea.external,
                       "Adapter command, run as CMD --model M --table T --manifest S --out P");
  evaluate->add_option("--external-models", ea.external_models, "Adapter model names");
  evaluate->add_option("--icl-model", ea.icl_model, "Cell name for ICL results (default: icl)");
  evaluate->add_option("--icl-replay", ea.icl_replay,
                       "Directory of canned replies named <sha256(prompt)>.txt");
  evaluate->add_option("--icl-endpoint", ea.icl_endpoint,
                       "Chat-completion URL (bearer token from TABMATH_API_KEY)");
  evaluate->add_option("--icl-api-model", ea.icl_api_model, "Model id sent to the endpoint");
  evaluate->add_flag("--icl-colon-format", ea.icl_colon_format,
                     "Use 'CONTEXT: ..., y=' / 'QUERY i:' lines");
  evaluate->add_option("--icl-chunk", ea.icl_chunk, "Query rows per prompt (0: one prompt)")
      ->capture_default_str();
  evaluate->add_option("--icl-max-cap", ea.icl_max_cap, "Largest cap evaluated with ICL")
      ->capture_default_str();
  evaluate->add_option("--icl-retries", ea.icl_retries, "Attempts per prompt")
      ->capture_default_str();
  evaluate->add_option("--icl-dump", ea.icl_dump, "Directory to write every ICL prompt to");
  evaluate->add_flag("--quiet,-q", ea.quiet, "No progress output");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Merge reports and prediction files into a summary CSV");
  report->add_option("inputs", ra.inputs, "Report JSON or prediction files");
  report->add_option("--out", ra.out, "Summary CSV path (default: stdout)");
  report->add_option("--merged", ra.merged, "Also write the merged report JSON here");

  auto* icl = app.add_subcommand("icl", "Serialize ICL prompts or parse replies");
  icl->require_subcommand(1);
  IclSerializeArgs isa;
  auto* serialize = icl->add_subcommand("serialize", "Render the prompt for a split manifest");
  serialize->add_option("--operator", isa.spec, "Operator file")->required();
  serialize->add_option("--manifest", isa.manifest, "Split manifest JSON")->required();
  serialize->add_flag("--colon-format", isa.colon_format,
                      "Use 'CONTEXT: ..., y=' / 'QUERY i:' lines");
  serialize->add_option("--chunk", isa.chunk, "Query rows per prompt (0: one prompt)")
      ->capture_default_str();
  serialize->add_option("--out", isa.out, "Prompt file (default: stdout)");
  IclParseArgs ipa;
  auto* parse = icl->add_subcommand("parse", "Extract the prediction list from a reply");
  parse->add_option("input", ipa.input, "Reply file, or - for stdin")->capture_default_str();
  parse->add_option("--expected", ipa.expected, "Number of query rows")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(va);
    if (*synthesize) return cmd_synthesize(sa);
    if (*features) return cmd_features(fa);
    if (*evaluate) return cmd_evaluate(ea);
    if (*report) return cmd_report(ra);
    if (*serialize) return cmd_icl_serialize(isa);
    if (*parse) return cmd_icl_parse(ipa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return kUsage;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRejected;
  }
  return kUsage;
}
