#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eegrob/core/matrix.hpp"

namespace eegrob {

enum class RelevanceMethod { attnlrp, gxi, gradcam };
std::string_view to_string(RelevanceMethod method);
RelevanceMethod relevance_method_from_string(std::string_view s);

/// One line of a relevance index. `tensor_path` is relative to the index
/// file unless absolute; condition and model are optional extensions.
struct RelevanceRecord {
  std::string trial_id;
  int fold = 0;
  int true_class = 0;
  int pred = 0;
  double confidence = 0.0;
  std::string tensor_path;
  RelevanceMethod method = RelevanceMethod::attnlrp;
  std::optional<std::string> condition;
  std::optional<std::string> model;

  friend bool operator==(const RelevanceRecord&, const RelevanceRecord&) = default;
};

nlohmann::json to_json(const RelevanceRecord& record);
RelevanceRecord relevance_record_from_json(const nlohmann::json& doc, const std::string& where = {});
std::string to_jsonl(const std::vector<RelevanceRecord>& records);
std::vector<RelevanceRecord> parse_relevance_jsonl(std::string_view text);
std::vector<RelevanceRecord> read_relevance_index(const std::filesystem::path& path);

/// Linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Whose confidences define the cut-off: the correctly classified records
/// (default) or every record.
enum class PercentilePopulation { correct, all };

/// Indices (ascending) of correctly classified records whose confidence is
/// strictly above the 75th percentile. Throws when nothing is correct.
std::vector<std::size_t> select_samples(std::span<const RelevanceRecord> records,
                                        PercentilePopulation population = PercentilePopulation::correct);

/// R / q99(|R|), clipped to [-1, 1]; all zeros when q99 is zero.
Matrix normalize_relevance(const Matrix& relevance);

struct SelectedMap {
  int fold = 0;
  int true_class = 0;
  Matrix relevance;  // raw, channels x time
};

/// Per channel: mean over folds of the mean over trials of the time-mean of
/// |normalized R|.
std::vector<double> aggregate_topo(std::span<const SelectedMap> maps);

/// The same reduction within each true class.
std::map<int, std::vector<double>> aggregate_topo_per_class(std::span<const SelectedMap> maps);

/// Per-class maps averaged with equal class weight.
std::vector<double> aggregate_topo_class_averaged(std::span<const SelectedMap> maps);

/// Spearman rank correlation (average ranks for ties). Throws when either
/// map is constant.
double spearman_channels(std::span<const double> a, std::span<const double> b);

}  // namespace eegrob
