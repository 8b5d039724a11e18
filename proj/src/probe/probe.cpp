#include "eegrob/probe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "eegrob/core/error.hpp"
#include "eegrob/core/io.hpp"
#include "eegrob/core/parallel.hpp"
#include "eegrob/core/rng.hpp"

using nlohmann::json;

namespace eegrob::probe {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kShrinkage = 0.1;

// ZCA whitening fitted on the training portion, with the covariance shrunk
// towards its mean eigenvalue so that wide inputs (features >= samples) stay
// well conditioned. Any invertible affine map of the inputs then changes the
// whitened features by little more than a rotation.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd transform;

  explicit Standardizer(const Eigen::MatrixXd& x) {
    mean = x.colwise().mean();
    const Eigen::MatrixXd centred = x.rowwise() - mean;
    Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(x.rows());
    const double shrink = kShrinkage * std::max(cov.trace() / static_cast<double>(cov.rows()), 1e-300);
    cov = (1.0 - kShrinkage) * cov;
    cov.diagonal().array() += shrink;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd inv = eig.eigenvalues().unaryExpr([](double v) { return 1.0 / std::sqrt(v); });
    transform = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return (x.rowwise() - mean) * transform; }
};

struct Linear {
  Eigen::MatrixXd w;  // features x classes
  Eigen::RowVectorXd b;

  std::vector<int> predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd scores = (x * w).rowwise() + b;
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index arg = 0;
      scores.row(i).maxCoeff(&arg);
      out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return out;
  }
};

void shuffle(std::vector<Eigen::Index>& v, rng::CounterStream& stream) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[stream.below(i)]);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> take(const std::vector<int>& y, const std::vector<Eigen::Index>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

void check_labels(const std::vector<int>& y, Eigen::Index rows, int n_classes, const std::string& what) {
  if (static_cast<Eigen::Index>(y.size()) != rows) {
    throw ValidationError(what, fmt::format("{} labels for {} rows", y.size(), rows));
  }
  for (int v : y) {
    if (v < 0 || v >= n_classes) throw ValidationError(what, fmt::format("label {} outside 0..{}", v, n_classes - 1));
  }
}

}  // namespace

std::string_view to_string(Pooling pooling) { return pooling == Pooling::mean ? "mean" : "flatten"; }

Pooling pooling_from_string(std::string_view s) {
  if (s == "mean") return Pooling::mean;
  if (s == "flatten") return Pooling::flatten;
  throw ValidationError("pooling", "expected mean or flatten, got \"" + std::string(s) + "\"");
}

Eigen::VectorXd pool_mean(const Eigen::MatrixXd& tokens) {
  if (tokens.rows() < 1) throw ValidationError("tokens", "at least one token is required");
  return tokens.colwise().mean().transpose();
}

Eigen::VectorXd pool_flatten(const Eigen::MatrixXd& tokens) {
  if (tokens.rows() < 1) throw ValidationError("tokens", "at least one token is required");
  Eigen::VectorXd v(tokens.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    for (Eigen::Index c = 0; c < tokens.cols(); ++c) v(k++) = tokens(r, c);
  }
  return v / std::sqrt(v.squaredNorm() / static_cast<double>(v.size()) + kRmsEpsilon);
}

Eigen::MatrixXd pool_tensor(const Tensor& embeddings, Pooling pooling) {
  if (embeddings.shape.size() != 3) {
    throw ValidationError("embeddings", fmt::format("expected trials x tokens x dim, got {} dims", embeddings.shape.size()));
  }
  const auto n = static_cast<Eigen::Index>(embeddings.shape[0]);
  const auto tokens = static_cast<Eigen::Index>(embeddings.shape[1]);
  const auto dim = static_cast<Eigen::Index>(embeddings.shape[2]);
  if (tokens < 1 || dim < 1) throw ValidationError("embeddings", "empty token axis");
  Eigen::MatrixXd out(n, pooling == Pooling::mean ? dim : tokens * dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* base = embeddings.values.data() + i * tokens * dim;
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(base, tokens,
                                                                                                         dim);
    if (!block.allFinite()) throw ValidationError("embeddings", fmt::format("trial {} holds non-finite values", i));
    out.row(i) = (pooling == Pooling::mean ? pool_mean(block) : pool_flatten(block)).transpose();
  }
  return out;
}

void ProbeConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs", "must be at least 1");
  if (patience < 1) throw ValidationError("patience", "must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate", "must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw ValidationError("validation_fraction", "must lie in (0, 0.5)");
  }
  if (batch_size < 1) throw ValidationError("batch_size", "must be at least 1");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) throw ValidationError("init_scale", "must be non-negative");
}

json to_json(const ProbeConfig& c) {
  return {{"epochs", c.epochs},         {"patience", c.patience},
          {"learning_rate", c.learning_rate}, {"validation_fraction", c.validation_fraction},
          {"batch_size", c.batch_size}, {"init_scale", c.init_scale},
          {"seed", c.seed}};
}

ProbeConfig probe_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("probe", "expected an object");
  ProbeConfig c;
  auto integer = [&](const char* key, int& slot) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_number_integer()) throw ValidationError(key, "expected an integer");
      slot = it->get<int>();
    }
  };
  auto number = [&](const char* key, double& slot) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_number()) throw ValidationError(key, "expected a number");
      slot = it->get<double>();
    }
  };
  integer("epochs", c.epochs);
  integer("patience", c.patience);
  integer("batch_size", c.batch_size);
  number("learning_rate", c.learning_rate);
  number("validation_fraction", c.validation_fraction);
  number("init_scale", c.init_scale);
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) throw ValidationError("seed", "expected a non-negative integer");
    c.seed = it->get<std::uint64_t>();
  }
  c.validate();
  return c;
}

FoldOutcome train_fold(const FoldSplit& split, int n_classes, const ProbeConfig& config) {
  config.validate();
  if (n_classes < 2) throw ValidationError("n_classes", "a probe needs at least two classes");
  const std::string where = fmt::format("fold {}", split.fold);
  check_labels(split.y_train, split.x_train.rows(), n_classes, where + " train");
  check_labels(split.y_test, split.x_test.rows(), n_classes, where + " test");
  if (split.x_train.cols() != split.x_test.cols()) throw ValidationError(where, "train and test widths differ");
  if (split.y_test.empty()) throw ValidationError(where, "empty test set");
  const std::set<int> present(split.y_train.begin(), split.y_train.end());
  if (present.size() < 2) {
    throw ValidationError(where, fmt::format("training set holds a single class ({})",
                                             present.empty() ? -1 : *present.begin()));
  }

  // Stratified validation slice.
  const auto fold_key = static_cast<std::uint64_t>(static_cast<std::uint32_t>(split.fold));
  std::vector<Eigen::Index> fit_rows, val_rows;
  for (int c : present) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < split.y_train.size(); ++i) {
      if (split.y_train[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
    }
    rng::CounterStream stream({config.seed, rng::Purpose::probe_split, fold_key, static_cast<std::uint32_t>(c)});
    shuffle(rows, stream);
    const std::size_t n_val =
        rows.size() < 2 ? 0
                        : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                       std::lround(config.validation_fraction * rows.size())));
    val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    fit_rows.insert(fit_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(val_rows.begin(), val_rows.end());

  const Standardizer norm(take_rows(split.x_train, fit_rows));
  const Eigen::MatrixXd x_fit = norm.apply(take_rows(split.x_train, fit_rows));
  const std::vector<int> y_fit = take(split.y_train, fit_rows);
  const Eigen::MatrixXd x_val = val_rows.empty() ? x_fit : norm.apply(take_rows(split.x_train, val_rows));
  const std::vector<int> y_val = val_rows.empty() ? y_fit : take(split.y_train, val_rows);

  const Eigen::Index d = x_fit.cols();
  Linear model{Eigen::MatrixXd(d, n_classes), Eigen::RowVectorXd::Zero(n_classes)};
  {
    rng::CounterStream init({config.seed, rng::Purpose::probe_init, fold_key, 0});
    for (Eigen::Index j = 0; j < n_classes; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) model.w(i, j) = config.init_scale * init.normal();
    }
  }
  Eigen::MatrixXd mw = Eigen::MatrixXd::Zero(d, n_classes), vw = mw;
  Eigen::RowVectorXd mb = Eigen::RowVectorXd::Zero(n_classes), vb = mb;
  long step = 0;

  FoldOutcome out;
  out.fold = split.fold;
  out.best_val_bacc = -1.0;
  Linear best = model;
  int since_best = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_fit.rows()));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / static_cast<double>(config.epochs)));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    rng::CounterStream shuffler({config.seed, rng::Purpose::probe_shuffle, fold_key,
                                 static_cast<std::uint32_t>(epoch)});
    shuffle(order, shuffler);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto n = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd xb(n, d);
      Eigen::MatrixXd target = Eigen::MatrixXd::Zero(n, n_classes);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = order[start + static_cast<std::size_t>(i)];
        xb.row(i) = x_fit.row(row);
        target(i, y_fit[static_cast<std::size_t>(row)]) = 1.0;
      }
      Eigen::MatrixXd logits = (xb * model.w).rowwise() + model.b;
      const Eigen::VectorXd peak = logits.rowwise().maxCoeff();
      logits.colwise() -= peak;
      const Eigen::VectorXd log_z = logits.array().exp().rowwise().sum().log();
      const Eigen::MatrixXd log_p = logits.colwise() - log_z;
      const double loss = -(log_p.array() * target.array()).sum() / static_cast<double>(n);
      if (!std::isfinite(loss)) {
        throw Error(fmt::format("probe {}: non-finite loss at epoch {} batch {} (lr {:.3g}, |W| {:.3g})", where,
                                epoch + 1, start / static_cast<std::size_t>(config.batch_size), lr, model.w.norm()));
      }
      const Eigen::MatrixXd delta = (log_p.array().exp().matrix() - target) / static_cast<double>(n);
      const Eigen::MatrixXd gw = xb.transpose() * delta;
      const Eigen::RowVectorXd gb = delta.colwise().sum();

      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      mw = kBeta1 * mw + (1.0 - kBeta1) * gw;
      vw = kBeta2 * vw + (1.0 - kBeta2) * gw.cwiseProduct(gw);
      mb = kBeta1 * mb + (1.0 - kBeta1) * gb;
      vb = kBeta2 * vb + (1.0 - kBeta2) * gb.cwiseProduct(gb);
      model.w.array() -= lr * (mw.array() / c1) / ((vw.array() / c2).sqrt() + kAdamEps);
      model.b.array() -= lr * (mb.array() / c1) / ((vb.array() / c2).sqrt() + kAdamEps);
    }
    out.epochs_run = epoch + 1;
    const double val = balanced_accuracy(y_val, model.predict(x_val), n_classes);
    if (val > out.best_val_bacc) {
      out.best_val_bacc = val;
      out.best_epoch = epoch + 1;
      best = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  out.bacc = balanced_accuracy(split.y_test, best.predict(norm.apply(split.x_test)), n_classes);
  return out;
}

std::vector<FoldOutcome> train_probe(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<int>& folds,
                                     int n_classes, const ProbeConfig& config, unsigned jobs) {
  check_labels(y, x.rows(), n_classes, "y");
  if (folds.size() != y.size()) throw ValidationError("folds", "one fold index per row is required");
  const std::set<int> ids(folds.begin(), folds.end());
  if (ids.size() < 2) throw ValidationError("folds", "need at least two folds");
  const std::vector<int> order(ids.begin(), ids.end());
  std::vector<FoldOutcome> out(order.size());
  parallel_for(order.size(), jobs, [&](std::size_t k) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == order[k] ? test : train).push_back(static_cast<Eigen::Index>(i));
    FoldSplit split{order[k], take_rows(x, train), take(y, train), take_rows(x, test), take(y, test)};
    out[k] = train_fold(split, n_classes, config);
  });
  return out;
}

ProbeReport blockwise_sweep(const BlockSet& blocks, int n_classes, Pooling pooling, const ProbeConfig& config,
                            unsigned jobs) {
  if (blocks.empty()) throw ValidationError("blocks", "no embedding blocks");
  const int max_block = blocks.rbegin()->first;
  struct Job {
    int block;
    const BlockFold* fold;
  };
  std::vector<Job> work;
  for (const auto& [block, folds] : blocks) {
    if (block < 0) throw ValidationError("blocks", fmt::format("negative block index {}", block));
    if (folds.size() < 2) throw ValidationError(fmt::format("block {}", block), "needs at least two folds");
    for (const auto& f : folds) {
      for (const Tensor* t : {&f.train, &f.test}) {
        if (t->shape.size() != 3 || t->shape[1] != folds.front().train.shape.at(1) ||
            t->shape[2] != folds.front().train.shape.at(2)) {
          throw ValidationError(fmt::format("block {} fold {}", block, f.fold), "token shape differs within the block");
        }
      }
      work.push_back({block, &f});
    }
  }
  std::vector<FoldOutcome> outcomes(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    const auto& f = *work[i].fold;
    FoldSplit split{f.fold, pool_tensor(f.train, pooling), f.y_train, pool_tensor(f.test, pooling), f.y_test};
    outcomes[i] = train_fold(split, n_classes, config);
  });

  ProbeReport report;
  std::size_t next = 0;
  for (const auto& [block, folds] : blocks) {
    ProbeRow row;
    row.block = block;
    row.relative_depth = max_block == 0 ? 0.0 : static_cast<double>(block) / max_block;
    row.pooling = pooling;
    std::vector<double> bacc;
    for (std::size_t k = 0; k < folds.size(); ++k, ++next) {
      row.folds.push_back(outcomes[next]);
      bacc.push_back(outcomes[next].bacc);
    }
    row.stats = aggregate_folds(bacc);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string probe_report_csv(const ProbeReport& report) {
  std::string out = "block,relative_depth,pooling,bacc_mean,bacc_std\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{:.4f},{},{:.6f},{:.6f}\n", r.block, r.relative_depth, to_string(r.pooling), r.stats.mean,
                       r.stats.std);
  }
  return out;
}

std::string embedding_file_name(int block, int fold, std::string_view split) {
  return fmt::format("block{}_fold{}_{}.eegt", block, fold, split);
}

json to_json(const EmbeddingIndex& index) {
  json folds = json::object();
  for (const auto& [fold, ids] : index.train_ids) {
    folds[std::to_string(fold)] = {{"train", ids}, {"test", index.test_ids.count(fold) ? index.test_ids.at(fold)
                                                                                        : std::vector<std::string>{}}};
  }
  return {{"blocks", index.blocks}, {"folds", folds}};
}

EmbeddingIndex embedding_index_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("index", "expected an object");
  EmbeddingIndex index;
  const auto blocks = doc.find("blocks");
  if (blocks == doc.end() || !blocks->is_array() || blocks->empty()) {
    throw ValidationError("blocks", "expected a non-empty array of block indices");
  }
  for (const auto& b : *blocks) {
    if (!b.is_number_integer() || b.get<int>() < 0) throw ValidationError("blocks", "expected non-negative integers");
    index.blocks.push_back(b.get<int>());
  }
  std::sort(index.blocks.begin(), index.blocks.end());
  if (std::adjacent_find(index.blocks.begin(), index.blocks.end()) != index.blocks.end()) {
    throw ValidationError("blocks", "repeated block index");
  }
  const auto folds = doc.find("folds");
  if (folds == doc.end() || !folds->is_object()) throw ValidationError("folds", "expected an object");
  for (const auto& [key, entry] : folds->items()) {
    int fold = 0;
    try {
      std::size_t used = 0;
      fold = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ValidationError("folds." + key, "fold keys must be integers");
    }
    for (const char* split : {"train", "test"}) {
      const auto it = entry.find(split);
      if (it == entry.end() || !it->is_array()) {
        throw ValidationError("folds." + key + "." + split, "expected an array of trial ids");
      }
      auto& slot = std::string_view(split) == "train" ? index.train_ids[fold] : index.test_ids[fold];
      for (const auto& id : *it) {
        if (!id.is_string()) throw ValidationError("folds." + key + "." + split, "expected trial id strings");
        slot.push_back(id.get<std::string>());
      }
    }
  }
  return index;
}

void write_embedding_index(const EmbeddingIndex& index, const std::filesystem::path& dir) {
  write_file_atomic(dir / "index.json", to_json(index).dump(2) + "\n");
}

BlockSet load_embeddings(const std::filesystem::path& dir, const DatasetManifest& manifest) {
  json doc;
  try {
    doc = json::parse(read_file(dir / "index.json"));
  } catch (const json::parse_error& e) {
    throw ValidationError("index.json", e.what());
  }
  const auto index = embedding_index_from_json(doc);
  std::vector<std::string> missing;
  for (int block : index.blocks) {
    for (const auto& [fold, ids] : index.train_ids) {
      for (const char* split : {"train", "test"}) {
        const auto name = embedding_file_name(block, fold, split);
        if (!std::filesystem::exists(dir / name)) missing.push_back(name);
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("embeddings", "missing block files: " + list);
  }
  auto labels = [&](const std::vector<std::string>& ids, const std::string& where) {
    std::vector<int> y;
    for (const auto& id : ids) {
      const auto i = manifest.trial_index(id);
      if (!i) throw ValidationError(where, "trial \"" + id + "\" is not in the manifest");
      y.push_back(manifest.trials[*i].label);
    }
    return y;
  };
  BlockSet out;
  for (int block : index.blocks) {
    auto& folds = out[block];
    for (const auto& [fold, ids] : index.train_ids) {
      BlockFold f;
      f.fold = fold;
      f.train = read_tensor_blob(dir / embedding_file_name(block, fold, "train"));
      f.test = read_tensor_blob(dir / embedding_file_name(block, fold, "test"));
      f.y_train = labels(ids, fmt::format("folds.{}.train", fold));
      f.y_test = labels(index.test_ids.at(fold), fmt::format("folds.{}.test", fold));
      for (const auto& [t, n, split] : {std::tuple{&f.train, f.y_train.size(), "train"},
                                        std::tuple{&f.test, f.y_test.size(), "test"}}) {
        if (t->shape.size() != 3 || t->shape[0] != n) {
          throw ValidationError(embedding_file_name(block, fold, split),
                                fmt::format("expected {} trials x tokens x dim", n));
        }
      }
      folds.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace eegrob::probe
