#include "tabmath/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sys/wait.h>
#include <thread>

#include "tabmath/errors.hpp"
#include "tabmath/features.hpp"
#include "tabmath/io.hpp"
#include "tabmath/version.hpp"

namespace fs = std::filesystem;

namespace tabmath {

std::string relative_to(const fs::path& target, const fs::path& base) {
  return fs::absolute(target).lexically_normal().lexically_relative(
                                                     fs::absolute(base).lexically_normal())
      .generic_string();
}

std::vector<std::string> icl_columns(const OperatorSpec& spec) {
  std::vector<std::string> cols;
  for (const auto& s : spec.slots) cols.push_back("slot_" + s.name);
  return cols;
}

std::vector<IclRow> icl_rows(const Table& table, const std::vector<std::size_t>& row_ids) {
  std::vector<IclRow> rows;
  rows.reserve(row_ids.size());
  for (auto id : row_ids) {
    const Row& r = table.rows.at(id);
    rows.push_back({r.values, r.y});
  }
  return rows;
}

ProblemData prepare_problem(const OperatorSpec& spec, const SweepConfig& config) {
  SynthesisOptions opts;
  opts.threads = config.jobs;
  ProblemData p{spec, synthesize_table(spec, config.n_rows, config.seeds.synthesis, opts), {}, {}};
  p.features = engineer_features(p.table, spec);

  const fs::path tables = config.out_dir / "tables";
  p.table_csv = tables / (spec.id + ".csv");
  const std::string csv = table_to_csv(p.table);
  const std::string digest = sha256_hex(csv);
  write_file(p.table_csv, csv);
  write_file(tables / (spec.id + ".json"),
             table_manifest(p.table, p.table_csv.filename().string(), digest).dump(2) + "\n");

  const fs::path features = config.out_dir / "features";
  const std::string fcsv = features_to_csv(p.features);
  const fs::path fpath = features / (spec.id + ".csv");
  write_file(fpath, fcsv);
  write_file(features / (spec.id + ".json"),
             feature_manifest(p.features, fpath.filename().string(), sha256_hex(fcsv),
                              config.seeds.synthesis)
                     .dump(2) +
                 "\n");
  return p;
}

CellResult evaluate_native(const FeatureMatrix& capped, const SplitManifest& manifest,
                           const ModelSpec& model, bool standardize) {
  const Preprocessor pre = fit_preprocessor(capped, manifest, standardize);
  const DenseMatrix Xc = transform(pre, capped, manifest.context);
  const DenseMatrix Xq = transform(pre, capped, manifest.query);
  const std::vector<double> yc = targets(capped, manifest.context);
  CellResult r;
  r.query_targets = targets(capped, manifest.query);
  const auto trained = train(model, Xc, yc);
  r.predictions = trained->predict(Xq);
  r.degenerate = trained->degenerate();
  r.kept_columns = pre.kept.size();
  r.metrics = score_predictions(r.predictions, r.query_targets, yc);
  return r;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string cell_stem(const std::string& id, const std::string& model, SplitKind split,
                      std::size_t cap) {
  return id + "__" + model + "__" + to_string(split) + "__" + std::to_string(cap);
}

struct Unit {
  std::size_t problem = 0;
  std::size_t cap = 0;
  SplitKind split = SplitKind::kRandom;
};

struct Task {
  std::size_t unit = 0;
  std::string model;
  CellSource source = CellSource::kNative;
};

struct PreparedUnit {
  Unit key;
  FeatureMatrix capped;
  SplitManifest manifest;
  fs::path manifest_file;
  std::string manifest_sha256;
};

template <typename Fn>
void run_pool(std::size_t count, unsigned jobs, Fn fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < std::min<std::size_t>(jobs, count); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

Report run_sweep(const SweepConfig& config, const ProgressLog& log) {
  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    log(msg);
  };
  fs::create_directories(config.out_dir);

  Report report;
  report.software_version = kSoftwareVersion;
  {
    Json cfg = Json::object();
    Json ops = Json::array();
    for (const auto& f : config.operator_files) ops.push_back(f.generic_string());
    cfg["operators"] = std::move(ops);
    cfg["n_rows"] = config.n_rows;
    cfg["seeds"] = {{"synthesis", config.seeds.synthesis},
                    {"split", config.seeds.split},
                    {"model", config.seeds.model}};
    cfg["caps"] = config.caps;
    Json splits = Json::array();
    for (auto s : config.splits) splits.push_back(to_string(s));
    cfg["splits"] = std::move(splits);
    cfg["models"] = config.models;
    cfg["standardize"] = config.standardize;
    if (config.external) {
      cfg["external"] = {{"command", config.external->command},
                         {"models", config.external->models}};
    }
    if (config.icl) {
      cfg["icl"] = {{"model", config.icl->model_name},
                    {"colon_format", config.icl->prompt.colon_format},
                    {"chunk_size", config.icl->chunk_size},
                    {"max_cap", config.icl->max_cap},
                    {"max_retries", config.icl->max_retries}};
    }
    report.config = std::move(cfg);
  }

  std::vector<std::optional<ProblemData>> problems;
  std::vector<Cell> failed_cells;
  auto fail_all = [&](const std::string& id, const std::string& why,
                      std::optional<std::size_t> only_cap = std::nullopt) {
    auto add = [&](const std::string& model, CellSource source) {
      for (auto cap : config.caps) {
        if (only_cap && cap != *only_cap) continue;
        for (auto split : config.splits) {
          Cell c;
          c.problem_id = id;
          c.model = model;
          c.split = split;
          c.cap = cap;
          c.source = source;
          c.error = why;
          c.seeds = config.seeds;
          failed_cells.push_back(std::move(c));
        }
      }
    };
    for (const auto& m : config.models) add(m, CellSource::kNative);
    if (config.external) {
      for (const auto& m : config.external->models) add(m, CellSource::kExternal);
    }
    if (config.icl) add(config.icl->model_name, CellSource::kIcl);
  };

  for (const auto& file : config.operator_files) {
    std::string id = file.stem().string();
    try {
      const OperatorSpec spec = load_spec_file(file.string());
      id = spec.id;
      const ValidationReport gate = verify_base(spec);
      if (!gate.accepted) {
        std::string why = "operator rejected:";
        for (const auto& f : gate.failures) why += " " + f;
        throw PreconditionError(why);
      }
      say("synthesizing " + spec.id);
      problems.push_back(prepare_problem(spec, config));
    } catch (const std::exception& e) {
      say("problem " + id + " failed: " + e.what());
      fail_all(id, e.what());
    }
  }

  // Caps and splits are cheap and shared by every model of a cell group.
  std::vector<PreparedUnit> units;
  const fs::path manifest_dir = config.out_dir / "manifests";
  for (std::size_t p = 0; p < problems.size(); ++p) {
    const ProblemData& pd = *problems[p];
    for (auto cap : config.caps) {
      if (cap > pd.features.rows()) {
        fail_all(pd.spec.id, "row cap " + std::to_string(cap) + " exceeds the table size", cap);
        continue;
      }
      const FeatureMatrix capped = apply_row_cap(pd.features, cap, config.seeds.split);
      for (auto split : config.splits) {
        PreparedUnit u;
        u.key = {p, cap, split};
        u.capped = capped;
        u.manifest = make_split(capped, split, config.seeds.split);
        u.manifest_file =
            manifest_dir / (pd.spec.id + "__" + to_string(split) + "__" + std::to_string(cap) +
                            ".json");
        u.manifest.table_path = relative_to(pd.table_csv, manifest_dir);
        u.manifest.table_sha256 = sha256_file(pd.table_csv);
        const std::string text = manifest_to_json(u.manifest).dump(2) + "\n";
        u.manifest_sha256 = sha256_hex(text);
        write_file(u.manifest_file, text);
        units.push_back(std::move(u));
      }
    }
  }

  std::vector<Task> tasks;
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (const auto& m : config.models) tasks.push_back({u, m, CellSource::kNative});
    if (config.external) {
      for (const auto& m : config.external->models) tasks.push_back({u, m, CellSource::kExternal});
    }
    if (config.icl && units[u].key.cap <= config.icl->max_cap) {
      tasks.push_back({u, config.icl->model_name, CellSource::kIcl});
    }
  }

  std::vector<Cell> cells(tasks.size());
  run_pool(tasks.size(), config.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const PreparedUnit& u = units[t.unit];
    const ProblemData& pd = *problems[u.key.problem];
    Cell& c = cells[i];
    c.problem_id = pd.spec.id;
    c.model = t.model;
    c.split = u.key.split;
    c.cap = u.key.cap;
    c.source = t.source;
    c.seeds = config.seeds;
    c.manifest_path = relative_to(u.manifest_file, config.out_dir);
    const fs::path pred_dir = config.out_dir / "predictions" / to_string(t.source);
    const fs::path pred_file = pred_dir / (cell_stem(pd.spec.id, t.model, u.key.split, u.key.cap) +
                                           ".json");
    c.predictions_path = relative_to(pred_file, config.out_dir);
    try {
      PredictionFile pf;
      pf.problem_id = pd.spec.id;
      pf.model = t.model;
      pf.manifest_path = relative_to(u.manifest_file, pred_dir);
      pf.manifest_sha256 = u.manifest_sha256;
      pf.cap = u.key.cap;
      pf.split = u.key.split;
      pf.adapter_version = std::string("tabmath ") + kSoftwareVersion;
      switch (t.source) {
        case CellSource::kNative: {
          const auto spec = model_spec(t.model, config.seeds.model);
          if (!spec) throw PreconditionError("unknown model '" + t.model + "'");
          c.model_spec = spec->to_json();
          CellResult r = evaluate_native(u.capped, u.manifest, *spec, config.standardize);
          if (r.degenerate) {
            c.warnings.push_back("no usable feature columns; fell back to the mean model");
          }
          c.metrics = r.metrics;
          pf.predictions = std::move(r.predictions);
          write_file(pred_file, prediction_file_to_json(pf).dump(2) + "\n");
          break;
        }
        case CellSource::kExternal: {
          fs::create_directories(pred_dir);
          const std::string cmd = config.external->command + " --model " + shell_quote(t.model) +
                                  " --table " + shell_quote(fs::absolute(pd.table_csv).string()) +
                                  " --manifest " +
                                  shell_quote(fs::absolute(u.manifest_file).string()) + " --out " +
                                  shell_quote(fs::absolute(pred_file).string());
          const int status = std::system(cmd.c_str());
          if (status != 0) {
            const int code = WIFEXITED(status) ? WEXITSTATUS(status) : status;
            throw IoError("external adapter exited with status " + std::to_string(code));
          }
          const PredictionFile got = prediction_file_from_json(Json::parse(read_file(pred_file)));
          Cell scored = score_prediction_file(got, pred_file, CellSource::kExternal);
          c.metrics = scored.metrics;
          c.model_spec = scored.model_spec;
          break;
        }
        case CellSource::kIcl: {
          const auto& icl = *config.icl;
          const auto bundles = serialize_prompts(
              icl_rows(pd.table, u.manifest.context), icl_rows(pd.table, u.manifest.query),
              pd.spec.id, icl_columns(pd.spec), icl.chunk_size, icl.prompt);
          for (std::size_t k = 0; k < bundles.size(); ++k) {
            if (!icl.dump_dir.empty()) {
              write_file(icl.dump_dir / (cell_stem(pd.spec.id, t.model, u.key.split, u.key.cap) +
                                         "__" + std::to_string(k) + ".txt"),
                         bundles[k].text);
            }
            const auto part = complete_predictions(
                *icl.client, bundles[k], icl.max_retries, icl.initial_backoff, icl.max_backoff,
                [&](int attempt, const std::string& msg) {
                  say("icl " + c.predictions_path + " attempt " + std::to_string(attempt) +
                      ": " + msg);
                });
            pf.predictions.insert(pf.predictions.end(), part.begin(), part.end());
          }
          c.model_spec = {{"name", t.model},
                          {"colon_format", icl.prompt.colon_format},
                          {"chunk_size", icl.chunk_size},
                          {"prompts", bundles.size()}};
          c.metrics = score_predictions(pf.predictions, targets(u.capped, u.manifest.query),
                                        targets(u.capped, u.manifest.context));
          write_file(pred_file, prediction_file_to_json(pf).dump(2) + "\n");
          break;
        }
      }
      c.ok = true;
    } catch (const std::exception& e) {
      c.ok = false;
      c.metrics.reset();
      c.error = e.what();
    }
    say(std::string(c.ok ? "ok    " : "FAIL  ") + cell_stem(c.problem_id, c.model, c.split, c.cap) +
        (c.ok ? "" : ": " + c.error));
  });

  report.cells = std::move(failed_cells);
  report.cells.insert(report.cells.end(), std::make_move_iterator(cells.begin()),
                      std::make_move_iterator(cells.end()));
  report.aggregates = aggregate(report.cells);
  write_file(config.out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_file(config.out_dir / "summary.csv", summary_csv(report.aggregates));
  return report;
}

}  // namespace tabmath
