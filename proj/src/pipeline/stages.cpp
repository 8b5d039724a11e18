#include "eegrob/pipeline/stages.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "eegrob/attribution/topomap.hpp"
#include "eegrob/core/error.hpp"
#include "eegrob/core/io.hpp"
#include "eegrob/core/parallel.hpp"
#include "eegrob/core/tensor_blob.hpp"
#include "eegrob/dsp/preprocess.hpp"
#include "eegrob/eval/predictions.hpp"
#include "eegrob/pipeline/reference_model.hpp"

using nlohmann::json;

namespace eegrob {

namespace {

std::vector<TrialTensor> load_trials(const fs::path& root, const DatasetManifest& m, unsigned jobs) {
  std::vector<std::optional<TrialTensor>> slots(m.trials.size());
  parallel_for(m.trials.size(), jobs, [&](std::size_t i) { slots[i].emplace(read_trial(root, m, i)); });
  std::vector<TrialTensor> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void write_dataset(const fs::path& root, const DatasetManifest& m, const std::vector<TrialTensor>& trials,
                   unsigned jobs) {
  write_manifest(m, root / "manifest.json");
  parallel_for(trials.size(), jobs, [&](std::size_t i) { write_trial(root, m.trials[i].id, trials[i]); });
}

json ingest_summary(const DatasetManifest& m, const fs::path& out) {
  return {{"stage", "ingest"},
          {"dataset", m.name},
          {"trials", m.trials.size()},
          {"channels", m.montage.channel_names.size()},
          {"rate_hz", m.rate_hz},
          {"folds", m.folds.size()},
          {"out", out.string()}};
}

// Names safe for file names: anything outside [A-Za-z0-9._-] becomes '_'.
std::string file_token(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
  }
  return out;
}

}  // namespace

json ingest_synthetic_stage(const SyntheticConfig& config, const dsp::FilterSpec& filter, const fs::path& out,
                            unsigned jobs) {
  config.validate();
  filter.validate();
  auto data = make_synthetic(config);
  const auto manifest = preprocessed_manifest(data.manifest, filter);
  std::vector<std::optional<TrialTensor>> done(data.trials.size());
  parallel_for(data.trials.size(), jobs, [&](std::size_t i) { done[i].emplace(dsp::preprocess(data.trials[i], filter)); });
  std::vector<TrialTensor> trials;
  for (auto& d : done) trials.push_back(std::move(*d));
  StagedDirectory stage(out);
  write_dataset(stage.path(), manifest, trials, jobs);
  stage.commit();
  auto summary = ingest_summary(manifest, out);
  summary["synthetic"] = to_json(config);
  return summary;
}

json ingest_stage(const fs::path& manifest_path, const fs::path& raw_dir, const dsp::FilterSpec& filter,
                  const fs::path& out, unsigned jobs) {
  filter.validate();
  const auto raw = read_manifest(manifest_path);
  const auto manifest = preprocessed_manifest(raw, filter);
  const auto inputs = load_trials(raw_dir, raw, jobs);
  std::vector<std::optional<TrialTensor>> done(inputs.size());
  parallel_for(inputs.size(), jobs, [&](std::size_t i) { done[i].emplace(dsp::preprocess(inputs[i], filter)); });
  std::vector<TrialTensor> trials;
  for (auto& d : done) trials.push_back(std::move(*d));
  StagedDirectory stage(out);
  write_dataset(stage.path(), manifest, trials, jobs);
  stage.commit();
  return ingest_summary(manifest, out);
}

json perturb_stage(const fs::path& manifest_path, const fs::path& dataset, const std::vector<PerturbationSpec>& specs,
                   const PerturbationContext& context, const fs::path& out, unsigned jobs) {
  const auto manifest = read_manifest(manifest_path);
  if (manifest.rate_hz != context.filter.resample_to_hz) {
    throw ValidationError("filter.resample_to_hz",
                          fmt::format("dataset is at {} Hz but the filter chain targets {} Hz", manifest.rate_hz,
                                      context.filter.resample_to_hz));
  }
  std::set<std::string> ids;
  for (const auto& s : specs) {
    s.validate();
    if (s.scope == MaskScope::per_trial && s.mode == DropoutMode::remove) {
      throw ValidationError("scope", "per_trial masks with mode remove give every trial a different montage");
    }
    if (!ids.insert(condition_id(s)).second) throw ValidationError("perturbations", "duplicate spec " + condition_id(s));
  }
  const auto trials = load_trials(dataset, manifest, jobs);

  StagedDirectory stage(out);
  json conditions = json::array();
  auto emit = [&](const std::string& id, const json& spec, const std::vector<TrialTensor>& data) {
    auto m = manifest;
    if (!data.empty()) {
      for (const auto& t : data) {
        if (t.channel_names() != data.front().channel_names()) {
          throw ValidationError(id, "perturbed trials do not share one montage");
        }
      }
      if (data.front().channel_names() != m.montage.channel_names) {
        Montage reduced;
        reduced.channel_names = data.front().channel_names();
        if (m.montage.positions_2d) {
          reduced.positions_2d.emplace();
          for (const auto& name : reduced.channel_names) {
            reduced.positions_2d->push_back((*m.montage.positions_2d)[*m.montage.index_of(name)]);
          }
        }
        m.montage = std::move(reduced);
      }
    }
    const auto dir = stage.path() / id;
    write_dataset(dir, m, data, jobs);
    write_file_atomic(dir / "condition.json", json{{"condition", id}, {"spec", spec}}.dump(2) + "\n");
    conditions.push_back({{"condition", id}, {"channels", m.montage.channel_names.size()}});
  };

  emit(std::string(kCleanCondition), nullptr, trials);
  for (const auto& spec : specs) {
    std::vector<std::optional<TrialTensor>> done(trials.size());
    parallel_for(trials.size(), jobs,
                 [&](std::size_t i) { done[i].emplace(apply_perturbation(trials[i], spec, i, context)); });
    std::vector<TrialTensor> data;
    for (auto& d : done) data.push_back(std::move(*d));
    emit(condition_id(spec), to_json(spec), data);
  }
  stage.commit();
  return {{"stage", "perturb"}, {"conditions", conditions}, {"trials", manifest.trials.size()}, {"out", out.string()}};
}

std::vector<std::string> list_conditions(const fs::path& conditions) {
  std::vector<std::string> out;
  if (!fs::is_directory(conditions)) throw ValidationError("conditions", conditions.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(conditions)) {
    if (entry.is_directory() && fs::exists(entry.path() / "condition.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

json baseline_stage(const fs::path& manifest_path, const fs::path& dataset, const fs::path& conditions,
                    const fs::path& out, unsigned jobs) {
  const auto manifest = read_manifest(manifest_path);
  const auto clean = load_trials(dataset, manifest, jobs);
  const auto n_classes = static_cast<int>(manifest.classes.size());
  std::vector<int> fold_of(manifest.trials.size());
  for (std::size_t i = 0; i < manifest.trials.size(); ++i) fold_of[i] = manifest.fold_of_trial(manifest.trials[i]);

  std::map<int, ReferenceModel> models;
  for (const auto& [fold, subjects] : manifest.folds) {
    std::vector<const TrialTensor*> train;
    std::vector<int> labels;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      if (fold_of[i] != fold) {
        train.push_back(&clean[i]);
        labels.push_back(manifest.trials[i].label);
      }
    }
    models.emplace(fold, ReferenceModel(train, labels, n_classes));
  }

  StagedDirectory stage(out);
  std::vector<PredictionRecord> predictions;
  const auto names = list_conditions(conditions);
  for (const auto& condition : names) {
    const auto root = conditions / condition;
    const auto cm = read_manifest(root / "manifest.json");
    if (cm.trials != manifest.trials) throw ValidationError(condition, "trials differ from the dataset manifest");
    std::vector<PredictionRecord> part(cm.trials.size());
    parallel_for(cm.trials.size(), jobs, [&](std::size_t i) {
      const auto out_i = models.at(fold_of[i]).predict(read_trial(root, cm, i));
      part[i] = {cm.trials[i].id, fold_of[i], condition, cm.trials[i].label, out_i.pred, out_i.confidence,
                 out_i.probs, std::string(ReferenceModel::kName)};
    });
    predictions.insert(predictions.end(), part.begin(), part.end());
  }
  write_predictions(predictions, stage.path() / "predictions.jsonl");

  // Relevance for the clean condition, target = predicted class.
  std::vector<RelevanceRecord> relevance(clean.size());
  parallel_for(clean.size(), jobs, [&](std::size_t i) {
    const auto& model = models.at(fold_of[i]);
    const auto pred = model.predict(clean[i]);
    const auto r = model.gradient_times_input(clean[i], pred.pred);
    const std::string file = manifest.trials[i].id + ".eegt";
    write_tensor_blob(Tensor::from_matrix(r, Dtype::float32), stage.path() / "relevance" / file);
    relevance[i] = {manifest.trials[i].id, fold_of[i], manifest.trials[i].label, pred.pred, pred.confidence, file,
                    RelevanceMethod::gxi, std::string(kCleanCondition), std::string(ReferenceModel::kName)};
  });
  write_file_atomic(stage.path() / "relevance" / "index.jsonl", to_jsonl(relevance));

  // Embeddings: per block and fold, train and test rows in manifest order.
  const auto emb_dir = stage.path() / "embeddings";
  probe::EmbeddingIndex index;
  for (int b = 0; b < ReferenceModel::kBlocks; ++b) index.blocks.push_back(b);
  for (const auto& [fold, subjects] : manifest.folds) {
    for (std::size_t i = 0; i < clean.size(); ++i) {
      (fold_of[i] == fold ? index.test_ids : index.train_ids)[fold].push_back(manifest.trials[i].id);
    }
  }
  // Token matrices do not depend on the fold model's statistics, only on
  // its channel order, which is the montage for every fold.
  const auto& embedder = models.begin()->second;
  std::vector<std::vector<Matrix>> tokens(ReferenceModel::kBlocks, std::vector<Matrix>(clean.size()));
  parallel_for(clean.size() * ReferenceModel::kBlocks, jobs, [&](std::size_t k) {
    const auto b = static_cast<int>(k / clean.size());
    const auto i = k % clean.size();
    tokens[static_cast<std::size_t>(b)][i] = embedder.embed(clean[i], b);
  });
  for (int b = 0; b < ReferenceModel::kBlocks; ++b) {
    for (const auto& [fold, subjects] : manifest.folds) {
      for (const bool test : {false, true}) {
        Tensor t;
        t.dtype = Dtype::float32;
        t.shape = {0, ReferenceModel::kTokens, manifest.montage.channel_names.size()};
        for (std::size_t i = 0; i < clean.size(); ++i) {
          if ((fold_of[i] == fold) != test) continue;
          const auto& m = tokens[static_cast<std::size_t>(b)][i];
          t.values.insert(t.values.end(), m.values().begin(), m.values().end());
          ++t.shape[0];
        }
        write_tensor_blob(t, emb_dir / probe::embedding_file_name(b, fold, test ? "test" : "train"));
      }
    }
  }
  probe::write_embedding_index(index, emb_dir);
  stage.commit();
  return {{"stage", "baseline"},       {"model", ReferenceModel::kName}, {"conditions", names},
          {"predictions", predictions.size()}, {"relevance", relevance.size()},
          {"blocks", ReferenceModel::kBlocks}, {"out", out.string()}};
}

json eval_stage(const fs::path& manifest_path, const fs::path& predictions, const std::string& clean_condition,
                const ReportOptions& options, const fs::path& out) {
  const auto manifest = read_manifest(manifest_path);
  const auto records = read_predictions(predictions);
  check_predictions(manifest, records);
  const auto cells = evaluate(manifest, records, clean_condition);
  StagedDirectory stage(out);
  emit_report(cells, stage.path(), options);
  stage.commit();
  json clean = json::object();
  for (const auto& c : cells.cells) {
    if (c.condition == clean_condition) clean[c.model] = {{"mean", c.stats.mean}, {"std", c.stats.std}};
  }
  return {{"stage", "eval"}, {"cells", cells.cells.size()}, {"clean", clean}, {"out", out.string()}};
}

json attribute_stage(const fs::path& manifest_path, const fs::path& index_path, const AttributeOptions& options,
                     const fs::path& out) {
  const auto manifest = read_manifest(manifest_path);
  const auto records = read_relevance_index(index_path);
  if (records.empty()) throw ValidationError("index", "no relevance records");
  const auto positions = topomap_positions(manifest.montage);
  const std::string task = options.task.empty() ? manifest.name : options.task;

  using Key = std::tuple<std::string, std::string, std::string>;  // model, condition, method
  std::map<Key, std::vector<RelevanceRecord>> groups;
  for (const auto& r : records) {
    const auto i = manifest.trial_index(r.trial_id);
    if (!i) throw ValidationError("trial_id", "\"" + r.trial_id + "\" is not in the manifest");
    if (manifest.trials[*i].label != r.true_class) throw ValidationError("true", "label mismatch for " + r.trial_id);
    groups[{r.model.value_or("model"), r.condition.value_or("all"), std::string(to_string(r.method))}].push_back(r);
  }

  StagedDirectory stage(out);
  json summary_groups = json::array();
  for (const auto& [key, recs] : groups) {
    const auto& [model, condition, method] = key;
    const auto selected = select_samples(recs, options.population);
    if (selected.empty()) {
      throw ValidationError("selection", fmt::format("{}/{}/{}: no record lies above the 75th-percentile confidence",
                                                     model, condition, method));
    }
    std::vector<SelectedMap> maps;
    for (auto idx : selected) {
      const auto& r = recs[idx];
      const fs::path p = r.tensor_path;
      auto m = read_tensor_blob(p.is_absolute() ? p : index_path.parent_path() / p).to_matrix();
      if (m.rows() != manifest.montage.channel_names.size()) {
        throw ValidationError(r.tensor_path, fmt::format("{} rows for a {}-channel montage", m.rows(),
                                                         manifest.montage.channel_names.size()));
      }
      maps.push_back({r.fold, r.true_class, std::move(m)});
    }
    const std::string stem = file_token(model) + "_" + file_token(condition) + "_" + method;
    auto write_map = [&](const std::string& label, std::vector<double> values) {
      TopoMap map{manifest.montage.channel_names, std::move(values), method, task, label, condition};
      write_file_atomic(stage.path() / (stem + "_" + file_token(label) + ".csv"), topomap_csv(map));
      write_file_atomic(stage.path() / (stem + "_" + file_token(label) + ".svg"), render_topomap_svg(map, positions));
    };
    write_map("average", aggregate_topo(maps));
    if (options.per_class) {
      for (auto& [k, values] : aggregate_topo_per_class(maps)) write_map(manifest.classes.at(static_cast<std::size_t>(k)), values);
    }
    summary_groups.push_back(
        {{"model", model}, {"condition", condition}, {"method", method}, {"records", recs.size()}, {"selected", maps.size()}});
  }
  write_file_atomic(stage.path() / "selection.json", summary_groups.dump(2) + "\n");
  stage.commit();
  return {{"stage", "attribute"}, {"groups", summary_groups}, {"out", out.string()}};
}

json probe_stage(const fs::path& manifest_path, const fs::path& embeddings,
                 const std::vector<probe::Pooling>& poolings, const probe::ProbeConfig& config, const fs::path& out_file,
                 unsigned jobs) {
  if (poolings.empty()) throw ValidationError("pooling", "at least one pooling mode is required");
  const auto manifest = read_manifest(manifest_path);
  const auto blocks = probe::load_embeddings(embeddings, manifest);
  probe::ProbeReport all;
  json rows = json::array();
  for (auto pooling : poolings) {
    auto report = probe::blockwise_sweep(blocks, static_cast<int>(manifest.classes.size()), pooling, config, jobs);
    for (auto& r : report.rows) {
      rows.push_back({{"block", r.block}, {"pooling", to_string(pooling)}, {"bacc_mean", r.stats.mean}});
      all.rows.push_back(std::move(r));
    }
  }
  write_file_atomic(out_file, probe::probe_report_csv(all));
  return {{"stage", "probe"}, {"rows", rows}, {"out", out_file.string()}};
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("config", "expected an object");
  static const std::set<std::string> known{"seed",   "out",          "filter", "synthetic", "manifest",  "data",
                                           "perturbations", "task", "report", "probe",     "attribution"};
  for (const auto& [key, v] : doc.items()) {
    if (!known.count(key)) throw ValidationError(key, "unknown field");
  }
  auto resolve = [&](const fs::path& p) { return (p.is_absolute() ? p : base_dir / p).lexically_normal(); };
  auto path_field = [&](const char* key) -> std::optional<fs::path> {
    auto it = doc.find(key);
    if (it == doc.end()) return std::nullopt;
    if (!it->is_string()) throw ValidationError(key, "expected a path string");
    return resolve(it->get<std::string>());
  };

  RunConfig c;
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
      throw ValidationError("seed", "expected a non-negative integer");
    }
    c.seed = it->get<std::uint64_t>();
  }
  if (auto p = path_field("out")) c.out = *p;
  if (auto it = doc.find("filter"); it != doc.end()) {
    try {
      c.filter = dsp::filter_spec_from_json(*it);
    } catch (const ValidationError& e) {
      throw ValidationError("filter." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
  }
  const bool has_manifest = doc.contains("manifest") || doc.contains("data");
  if (auto it = doc.find("synthetic"); it != doc.end()) {
    if (has_manifest) throw ValidationError("synthetic", "give either synthetic or manifest + data, not both");
    json s = *it;
    if (s.is_object() && !s.contains("seed")) s["seed"] = c.seed;
    c.synthetic = synthetic_config_from_json(s);
  } else {
    const auto m = path_field("manifest");
    const auto d = path_field("data");
    if (!m || !d) throw ValidationError("manifest", "either synthetic or both manifest and data are required");
    if (!fs::exists(*m)) throw ValidationError("manifest", m->string() + " does not exist");
    if (!fs::is_directory(*d)) throw ValidationError("data", d->string() + " is not a directory");
    c.manifest = *m;
    c.raw_dir = *d;
  }
  if (auto it = doc.find("perturbations"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError("perturbations", "expected an array of specs");
    for (std::size_t i = 0; i < it->size(); ++i) {
      c.perturbations.push_back(
          perturbation_spec_from_json((*it)[i], "perturbations[" + std::to_string(i) + "]", c.seed));
    }
  }
  if (auto it = doc.find("task"); it != doc.end()) {
    if (!it->is_string()) throw ValidationError("task", "expected a string");
    c.task = it->get<std::string>();
    builtin_regions().task(*c.task);
  }
  for (const auto& s : c.perturbations) {
    if ((s.kind == PerturbationKind::region_dropout || s.kind == PerturbationKind::region_noise) && !s.task && !c.task) {
      throw ValidationError("task", "region perturbations need a task");
    }
    if (s.task) builtin_regions().task(*s.task);
  }
  if (auto it = doc.find("report"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("report", "expected an object");
    for (const auto& [key, v] : it->items()) {
      if (key == "clean_condition" && v.is_string()) {
        c.clean_condition = v.get<std::string>();
      } else if (key == "exclude_from_average" && v.is_array()) {
        for (const auto& t : v) {
          if (!t.is_string()) throw ValidationError("report.exclude_from_average", "expected task names");
          c.report.exclude_from_average.insert(t.get<std::string>());
        }
      } else {
        throw ValidationError("report." + key, "unknown field or wrong type");
      }
    }
  }
  if (auto it = doc.find("probe"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("probe", "expected an object");
    json p = *it;
    if (auto pool = p.find("pooling"); pool != p.end()) {
      c.poolings.clear();
      const json list = pool->is_array() ? *pool : json::array({*pool});
      for (const auto& v : list) {
        if (!v.is_string()) throw ValidationError("probe.pooling", "expected mean or flatten");
        try {
          c.poolings.push_back(probe::pooling_from_string(v.get<std::string>()));
        } catch (const ValidationError& e) {
          throw ValidationError("probe.pooling", e.what());
        }
      }
      p.erase("pooling");
    }
    if (!p.contains("seed")) p["seed"] = c.seed;
    try {
      c.probe = probe::probe_config_from_json(p);
    } catch (const ValidationError& e) {
      throw ValidationError("probe." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
  } else {
    c.probe.seed = c.seed;
  }
  if (auto it = doc.find("attribution"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("attribution", "expected an object");
    for (const auto& [key, v] : it->items()) {
      if (key == "per_class" && v.is_boolean()) {
        c.attribution.per_class = v.get<bool>();
      } else if (key == "population" && v.is_string() && (v == "correct" || v == "all")) {
        c.attribution.population = v == "all" ? PercentilePopulation::all : PercentilePopulation::correct;
      } else if (key == "task" && v.is_string()) {
        c.attribution.task = v.get<std::string>();
      } else {
        throw ValidationError("attribution." + key, "unknown field or wrong type");
      }
    }
  }
  return c;
}

void run_pipeline(const RunConfig& config, unsigned jobs, const std::function<void(const json&)>& on_stage) {
  if (config.out.empty()) throw ValidationError("out", "an output directory is required");
  const auto& out = config.out;
  fs::create_directories(out);
  const auto dataset = out / "dataset";
  const auto conditions = out / "conditions";
  const auto model = out / "model";

  on_stage(config.synthetic ? ingest_synthetic_stage(*config.synthetic, config.filter, dataset, jobs)
                            : ingest_stage(config.manifest, config.raw_dir, config.filter, dataset, jobs));
  const auto manifest_path = dataset / "manifest.json";
  PerturbationContext context;
  context.filter = config.filter;
  context.dataset = read_manifest(manifest_path).name;
  context.task = config.task;
  on_stage(perturb_stage(manifest_path, dataset, config.perturbations, context, conditions, jobs));
  on_stage(baseline_stage(manifest_path, dataset, conditions, model, jobs));
  on_stage(eval_stage(manifest_path, model / "predictions.jsonl", config.clean_condition, config.report, out / "report"));
  auto attribution = config.attribution;
  if (attribution.task.empty() && config.task) attribution.task = *config.task;
  on_stage(attribute_stage(manifest_path, model / "relevance" / "index.jsonl", attribution, out / "topomap"));
  fs::create_directories(out / "probe");
  on_stage(probe_stage(manifest_path, model / "embeddings", config.poolings, config.probe,
                       out / "probe" / "probe_report.csv", jobs));
}

}  // namespace eegrob
