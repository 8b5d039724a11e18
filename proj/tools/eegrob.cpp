// eegrob: command-line front end over the pipeline stages. Every stage
// prints one JSON summary line on stdout; errors go to stderr with a
// nonzero exit (2 for invalid input, 1 for anything else).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eegrob/core/error.hpp"
#include "eegrob/core/io.hpp"
#include "eegrob/pipeline/stages.hpp"
#include "eegrob/regions/regions.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eegrob;

namespace {

json read_json_file(const fs::path& path, const std::string& field) {
  if (!fs::exists(path)) throw ValidationError(field, path.string() + " does not exist");
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(field, path.string() + ": invalid JSON: " + e.what());
  }
}

dsp::FilterSpec load_filter(const std::string& path) {
  if (path.empty()) return dsp::FilterSpec::default_chain();
  try {
    return dsp::filter_spec_from_json(read_json_file(path, "filter"));
  } catch (const ValidationError& e) {
    if (e.field() == "filter") throw;
    throw ValidationError("filter." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
}

void print(const json& summary) { std::cout << summary.dump() << std::endl; }

fs::path manifest_or(const std::string& manifest, const fs::path& dir) {
  return manifest.empty() ? dir / "manifest.json" : fs::path(manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG robustness toolkit: preprocessing, perturbation, evaluation, attribution and probing"};
  app.require_subcommand(1);
  unsigned jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads (output does not depend on it)")->check(CLI::PositiveNumber);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Preprocess a raw dataset (or generate the synthetic one)");
  bool synthetic = false;
  std::string ingest_manifest, ingest_in, ingest_filter, ingest_out, synth_config;
  std::uint64_t ingest_seed = 0;
  ingest->add_flag("--synthetic", synthetic, "Generate the bundled synthetic dataset");
  ingest->add_option("--synthetic-config", synth_config, "JSON overrides for the synthetic generator");
  ingest->add_option("--manifest", ingest_manifest, "Raw manifest (defaults to <in>/manifest.json)");
  ingest->add_option("--in", ingest_in, "Raw dataset directory");
  ingest->add_option("--filter", ingest_filter, "Filter spec JSON");
  ingest->add_option("--seed", ingest_seed, "Synthetic generator seed");
  ingest->add_option("--out", ingest_out, "Output dataset directory")->required();

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Write clean and perturbed copies of a dataset");
  std::string p_manifest, p_spec, p_in, p_out, p_filter, p_task;
  std::optional<std::uint64_t> p_seed;
  perturb->add_option("--manifest", p_manifest, "Manifest (defaults to <in>/manifest.json)");
  perturb->add_option("--spec", p_spec, "Perturbation spec JSON (object or array)");
  perturb->add_option("--in", p_in, "Preprocessed dataset directory")->required();
  perturb->add_option("--out", p_out, "Conditions directory")->required();
  perturb->add_option("--filter", p_filter, "Filter spec JSON the data went through");
  perturb->add_option("--task", p_task, "Task for region perturbations");
  perturb->add_option("--seed", p_seed, "Seed for specs that omit one");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Run the reference model over every condition");
  std::string b_manifest, b_in, b_conditions, b_out;
  baseline->add_option("--manifest", b_manifest, "Manifest (defaults to <in>/manifest.json)");
  baseline->add_option("--in", b_in, "Clean dataset directory")->required();
  baseline->add_option("--conditions", b_conditions, "Conditions directory from perturb")->required();
  baseline->add_option("--out", b_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions and write report tables");
  std::string e_manifest, e_pred, e_clean = "clean", e_out;
  std::vector<std::string> e_exclude;
  eval->add_option("--manifest", e_manifest, "Manifest")->required();
  eval->add_option("--pred", e_pred, "Predictions JSON Lines")->required();
  eval->add_option("--clean-condition", e_clean, "Condition treated as clean");
  eval->add_option("--exclude", e_exclude, "Tasks left out of the Average column");
  eval->add_option("--out", e_out, "Report directory")->required();

  // attribute
  auto* attribute = app.add_subcommand("attribute", "Aggregate relevance maps into topomaps");
  std::string a_manifest, a_index, a_out, a_population = "correct", a_task;
  bool a_per_class = false;
  attribute->add_option("--manifest", a_manifest, "Manifest")->required();
  attribute->add_option("--index", a_index, "Relevance index JSON Lines")->required();
  attribute->add_option("--out", a_out, "Output directory")->required();
  attribute->add_flag("--per-class", a_per_class, "Also write one map per true class");
  attribute->add_option("--population", a_population, "Percentile population")->check(CLI::IsMember({"correct", "all"}));
  attribute->add_option("--task", a_task, "Task label for the maps");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Block-wise linear probes over exported embeddings");
  std::string pr_manifest, pr_embeddings, pr_out, pr_config;
  std::vector<std::string> pr_pooling{"mean"};
  std::optional<std::uint64_t> pr_seed;
  probe_cmd->add_option("--manifest", pr_manifest, "Manifest")->required();
  probe_cmd->add_option("--embeddings", pr_embeddings, "Embedding directory")->required();
  probe_cmd->add_option("--pooling", pr_pooling, "mean and/or flatten")->check(CLI::IsMember({"mean", "flatten"}));
  probe_cmd->add_option("--config", pr_config, "Probe config JSON");
  probe_cmd->add_option("--seed", pr_seed, "Probe seed");
  probe_cmd->add_option("--out", pr_out, "CSV output file")->required();

  // regions
  auto* regions = app.add_subcommand("regions", "Region tables");
  regions->require_subcommand(1);
  auto* dump = regions->add_subcommand("dump", "Print the embedded region tables as JSON");
  std::string dump_out;
  dump->add_option("--out", dump_out, "Write to a file instead of stdout");

  // report
  auto* report = app.add_subcommand("report", "Merge cells.json files from several eval runs into one report");
  std::vector<std::string> r_cells;
  std::vector<std::string> r_exclude;
  std::string r_out;
  report->add_option("--cells", r_cells, "cells.json files")->required();
  report->add_option("--exclude", r_exclude, "Tasks left out of the Average column");
  report->add_option("--out", r_out, "Report directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Run every stage from one config file");
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  run->add_option("--config", run_config, "Run config JSON")->required();
  run->add_option("--out", run_out, "Output directory (overrides the config)");
  run->add_option("--seed", run_seed, "Master seed (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto filter = load_filter(ingest_filter);
      if (synthetic) {
        json overrides = synth_config.empty() ? json::object() : read_json_file(synth_config, "synthetic-config");
        if (!overrides.contains("seed")) overrides["seed"] = ingest_seed;
        print(ingest_synthetic_stage(synthetic_config_from_json(overrides), filter, ingest_out, jobs));
      } else {
        if (ingest_in.empty()) throw ValidationError("in", "--in is required unless --synthetic is given");
        print(ingest_stage(manifest_or(ingest_manifest, ingest_in), ingest_in, filter, ingest_out, jobs));
      }
    } else if (*perturb) {
      std::vector<PerturbationSpec> specs;
      if (!p_spec.empty()) specs = perturbation_specs_from_json(read_json_file(p_spec, "spec"), p_seed);
      PerturbationContext context;
      context.filter = load_filter(p_filter);
      const auto manifest_path = manifest_or(p_manifest, p_in);
      context.dataset = read_manifest(manifest_path).name;
      if (!p_task.empty()) context.task = p_task;
      print(perturb_stage(manifest_path, p_in, specs, context, p_out, jobs));
    } else if (*baseline) {
      print(baseline_stage(manifest_or(b_manifest, b_in), b_in, b_conditions, b_out, jobs));
    } else if (*eval) {
      ReportOptions options;
      options.exclude_from_average.insert(e_exclude.begin(), e_exclude.end());
      print(eval_stage(e_manifest, e_pred, e_clean, options, e_out));
    } else if (*attribute) {
      AttributeOptions options;
      options.per_class = a_per_class;
      options.population = a_population == "all" ? PercentilePopulation::all : PercentilePopulation::correct;
      options.task = a_task;
      print(attribute_stage(a_manifest, a_index, options, a_out));
    } else if (*probe_cmd) {
      json cfg = pr_config.empty() ? json::object() : read_json_file(pr_config, "config");
      if (pr_seed) cfg["seed"] = *pr_seed;
      std::vector<probe::Pooling> poolings;
      for (const auto& p : pr_pooling) poolings.push_back(probe::pooling_from_string(p));
      print(probe_stage(pr_manifest, pr_embeddings, poolings, probe::probe_config_from_json(cfg), pr_out, jobs));
    } else if (*regions) {
      const auto text = to_json(builtin_regions()).dump(2) + "\n";
      if (dump_out.empty()) {
        std::cout << text;
      } else {
        write_file_atomic(dump_out, text);
        print({{"stage", "regions"}, {"groups", builtin_regions().groups.size()}, {"out", dump_out}});
      }
    } else if (*report) {
      std::vector<EvalCells> parts;
      for (const auto& path : r_cells) parts.push_back(eval_cells_from_json(read_json_file(path, "cells")));
      const auto merged = merge_cells(parts);
      ReportOptions options;
      options.exclude_from_average.insert(r_exclude.begin(), r_exclude.end());
      StagedDirectory stage(r_out);
      emit_report(merged, stage.path(), options);
      stage.commit();
      print({{"stage", "report"}, {"cells", merged.cells.size()}, {"out", r_out}});
    } else if (*run) {
      json doc = read_json_file(run_config, "config");
      if (!doc.is_object()) throw ValidationError("config", "expected an object");
      if (run_seed) doc["seed"] = *run_seed;
      auto config = run_config_from_json(doc, fs::absolute(run_config).parent_path());
      if (!run_out.empty()) config.out = run_out;
      run_pipeline(config, jobs, print);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
