#pragma once

// The CLI stages as library calls. Each writes its outputs through a staging
// directory (or an atomic file write) and returns a one-line JSON summary.
// Outputs depend only on inputs and seeds, never on `jobs`.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegrob/attribution/relevance.hpp"
#include "eegrob/dsp/filter_spec.hpp"
#include "eegrob/eval/report.hpp"
#include "eegrob/pipeline/dataset.hpp"
#include "eegrob/pipeline/perturbation.hpp"
#include "eegrob/probe/probe.hpp"

namespace eegrob {

namespace fs = std::filesystem;

/// Generates the synthetic set and preprocesses it into a dataset directory.
nlohmann::json ingest_synthetic_stage(const SyntheticConfig& config, const dsp::FilterSpec& filter, const fs::path& out,
                                      unsigned jobs);

/// Preprocesses a raw dataset directory (manifest at the raw rate).
nlohmann::json ingest_stage(const fs::path& manifest_path, const fs::path& raw_dir, const dsp::FilterSpec& filter,
                            const fs::path& out, unsigned jobs);

/// Writes out/clean (a copy of the inputs) and out/<condition_id> per spec.
/// Every condition directory is itself a dataset directory plus
/// condition.json.
nlohmann::json perturb_stage(const fs::path& manifest_path, const fs::path& dataset, const std::vector<PerturbationSpec>& specs,
                             const PerturbationContext& context, const fs::path& out, unsigned jobs);

/// Condition directories under `conditions`, sorted by name.
std::vector<std::string> list_conditions(const fs::path& conditions);

/// Fits the reference model per fold on clean training trials and writes
/// predictions.jsonl (every condition), relevance/ (clean, gradient x input)
/// and embeddings/ (three blocks).
nlohmann::json baseline_stage(const fs::path& manifest_path, const fs::path& dataset, const fs::path& conditions,
                              const fs::path& out, unsigned jobs);

nlohmann::json eval_stage(const fs::path& manifest_path, const fs::path& predictions, const std::string& clean_condition,
                          const ReportOptions& options, const fs::path& out);

struct AttributeOptions {
  bool per_class = false;
  PercentilePopulation population = PercentilePopulation::correct;
  std::string task;  // label carried into the maps; defaults to the manifest name
};

/// Topomaps (CSV + SVG) per (model, condition, method) group of the index.
nlohmann::json attribute_stage(const fs::path& manifest_path, const fs::path& index, const AttributeOptions& options,
                               const fs::path& out);

nlohmann::json probe_stage(const fs::path& manifest_path, const fs::path& embeddings,
                           const std::vector<probe::Pooling>& poolings, const probe::ProbeConfig& config,
                           const fs::path& out_file, unsigned jobs);

/// Single JSON document driving every stage. Relative paths resolve against
/// `base_dir` (the config file's directory).
struct RunConfig {
  std::uint64_t seed = 0;
  fs::path out;
  dsp::FilterSpec filter;
  std::optional<SyntheticConfig> synthetic;
  fs::path manifest;  // with raw_dir, when not synthetic
  fs::path raw_dir;
  std::vector<PerturbationSpec> perturbations;
  std::optional<std::string> task;
  std::string clean_condition = "clean";
  ReportOptions report;
  probe::ProbeConfig probe;
  std::vector<probe::Pooling> poolings{probe::Pooling::mean, probe::Pooling::flatten};
  AttributeOptions attribution;
};

/// Validates every section; errors name the failing field.
RunConfig run_config_from_json(const nlohmann::json& doc, const fs::path& base_dir);

/// ingest -> perturb -> baseline -> eval -> attribute -> probe under
/// config.out; `on_stage` receives each summary as it completes.
void run_pipeline(const RunConfig& config, unsigned jobs, const std::function<void(const nlohmann::json&)>& on_stage);

}  // namespace eegrob
