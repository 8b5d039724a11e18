#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "eegrob/core/manifest.hpp"
#include "eegrob/core/tensor_blob.hpp"
#include "eegrob/eval/metrics.hpp"

namespace eegrob::probe {

enum class Pooling { mean, flatten };
std::string_view to_string(Pooling pooling);
Pooling pooling_from_string(std::string_view s);

inline constexpr double kRmsEpsilon = 1e-8;

/// Column means of a tokens x dim block.
Eigen::VectorXd pool_mean(const Eigen::MatrixXd& tokens);
/// Row-major concatenation scaled by 1 / sqrt(mean(v^2) + eps).
Eigen::VectorXd pool_flatten(const Eigen::MatrixXd& tokens);

/// trials x tokens x dim tensor -> trials x features design matrix.
Eigen::MatrixXd pool_tensor(const Tensor& embeddings, Pooling pooling);

struct ProbeConfig {
  int epochs = 20;
  int patience = 5;
  double learning_rate = 1e-2;
  double validation_fraction = 0.1;
  int batch_size = 32;
  double init_scale = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const ProbeConfig& config);
/// Missing keys keep their defaults.
ProbeConfig probe_config_from_json(const nlohmann::json& doc);

/// One held-out fold: the probe is fit on `train` and scored on `test`.
struct FoldSplit {
  int fold = 0;
  Eigen::MatrixXd x_train;
  std::vector<int> y_train;
  Eigen::MatrixXd x_test;
  std::vector<int> y_test;
};

struct FoldOutcome {
  int fold = 0;
  double bacc = 0.0;
  int best_epoch = 0;     // 1-based
  int epochs_run = 0;
  double best_val_bacc = 0.0;
};

/// Softmax-regression probe. Features are ZCA-whitened with statistics of
/// the fitting portion; a stratified validation slice drives early stopping
/// and the best epoch's weights score the test set.
FoldOutcome train_fold(const FoldSplit& split, int n_classes, const ProbeConfig& config);

/// Leave-one-fold-out over the distinct values of `folds`.
std::vector<FoldOutcome> train_probe(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<int>& folds,
                                     int n_classes, const ProbeConfig& config, unsigned jobs = 1);

/// Embeddings of one block for one fold, trials x tokens x dim.
struct BlockFold {
  int fold = 0;
  Tensor train;
  std::vector<int> y_train;
  Tensor test;
  std::vector<int> y_test;
};

/// block index -> folds.
using BlockSet = std::map<int, std::vector<BlockFold>>;

struct ProbeRow {
  int block = 0;
  double relative_depth = 0.0;
  Pooling pooling = Pooling::mean;
  std::vector<FoldOutcome> folds;
  FoldStats stats;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;
};

/// One probe per block; depth = block / max block (0 for a single block).
ProbeReport blockwise_sweep(const BlockSet& blocks, int n_classes, Pooling pooling, const ProbeConfig& config,
                            unsigned jobs = 1);

/// block,relative_depth,pooling,bacc_mean,bacc_std
std::string probe_report_csv(const ProbeReport& report);

// On-disk layout: block{N}_fold{K}_{train|test}.eegt plus index.json, which
// lists the blocks and, per fold, the trial ids in tensor row order.
struct EmbeddingIndex {
  std::vector<int> blocks;
  std::map<int, std::vector<std::string>> train_ids;
  std::map<int, std::vector<std::string>> test_ids;

  friend bool operator==(const EmbeddingIndex&, const EmbeddingIndex&) = default;
};

std::string embedding_file_name(int block, int fold, std::string_view split);
nlohmann::json to_json(const EmbeddingIndex& index);
EmbeddingIndex embedding_index_from_json(const nlohmann::json& doc);
void write_embedding_index(const EmbeddingIndex& index, const std::filesystem::path& dir);

/// Reads every listed tensor and labels rows from the manifest. Throws
/// listing every missing file; row counts must match the index.
BlockSet load_embeddings(const std::filesystem::path& dir, const DatasetManifest& manifest);

}  // namespace eegrob::probe
