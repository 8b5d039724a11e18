#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "eegrob/core/error.hpp"
#include "eegrob/probe/probe.hpp"
#include "probe_fixtures.hpp"
#include "test_util.hpp"

using namespace eegrob;
using namespace eegrob::probe;

namespace {

double mean_bacc(const std::vector<FoldOutcome>& folds) {
  double s = 0;
  for (const auto& f : folds) s += f.bacc;
  return s / static_cast<double>(folds.size());
}

// Splits a pooled-row tensor into per-fold BlockFolds by round-robin folds.
std::vector<BlockFold> split_folds(const Tensor& t, const std::vector<int>& y, int k) {
  const std::size_t stride = t.shape[1] * t.shape[2];
  std::vector<BlockFold> out;
  for (int f = 0; f < k; ++f) {
    BlockFold bf;
    bf.fold = f;
    for (Tensor* part : {&bf.train, &bf.test}) part->shape = {0, t.shape[1], t.shape[2]};
    for (std::size_t i = 0; i < t.shape[0]; ++i) {
      const bool test = static_cast<int>(i % static_cast<std::size_t>(k)) == f;
      Tensor& part = test ? bf.test : bf.train;
      part.values.insert(part.values.end(), t.values.begin() + static_cast<std::ptrdiff_t>(i * stride),
                         t.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
      ++part.shape[0];
      (test ? bf.y_test : bf.y_train).push_back(y[i]);
    }
    out.push_back(std::move(bf));
  }
  return out;
}

}  // namespace

TEST_CASE("pool_mean") {
  Eigen::MatrixXd one(1, 3);
  one << 1, -2, 3;
  CHECK(pool_mean(one) == one.row(0).transpose());
  Eigen::MatrixXd sym(2, 3);
  sym << 1, -2, 3, -1, 2, -3;
  CHECK(pool_mean(sym).isZero());

  std::mt19937_64 gen(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd r(8, 16);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = g(gen);
  const auto m = pool_mean(r);
  for (int j = 0; j < 16; ++j) {
    double s = 0;
    for (int i = 0; i < 8; ++i) s += r(i, j);
    CHECK(m(j) == doctest::Approx(s / 8).epsilon(1e-14));
  }
  Eigen::MatrixXd swapped = r;
  swapped.row(0).swap(swapped.row(5));
  CHECK(pool_mean(swapped).isApprox(m, 1e-14));
  CHECK_THROWS_AS(pool_mean(Eigen::MatrixXd(0, 3)), ValidationError);
}

TEST_CASE("pool_flatten") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 4, -2.5);
  const auto v = pool_flatten(c);
  CHECK(v.size() == 12);
  for (Eigen::Index i = 0; i < v.size(); ++i) CHECK(v(i) == doctest::Approx(-1.0).epsilon(1e-8));

  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  const auto f = pool_flatten(x);
  for (int i = 0; i < 5; ++i) CHECK(f(i) < f(i + 1));
  CHECK(f(1) / f(0) == doctest::Approx(2.0));

  std::mt19937_64 gen(2);
  std::normal_distribution<double> g(0.0, 7.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd r(5, 7);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = g(gen);
    const auto p = pool_flatten(r);
    CHECK(std::sqrt(p.squaredNorm() / p.size()) == doctest::Approx(1.0).epsilon(1e-6));
    Eigen::MatrixXd swapped = r;
    swapped.row(0).swap(swapped.row(3));
    CHECK_FALSE(pool_flatten(swapped).isApprox(p));
  }
}

TEST_CASE("pool_tensor layouts") {
  Tensor t;
  t.shape = {2, 2, 3};
  t.values = {1, 2, 3, 3, 2, 1, 0, 0, 0, 2, 2, 2};
  const auto m = pool_tensor(t, Pooling::mean);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(0, 0) == 2);
  CHECK(m(1, 2) == 1);
  CHECK(pool_tensor(t, Pooling::flatten).cols() == 6);
  t.shape = {2, 6};
  CHECK_THROWS_AS(pool_tensor(t, Pooling::mean), ValidationError);
  CHECK(pooling_from_string("flatten") == Pooling::flatten);
  CHECK_THROWS_WITH_AS(pooling_from_string("max"), doctest::Contains("pooling"), ValidationError);
}

TEST_CASE("probe config") {
  ProbeConfig c;
  CHECK_NOTHROW(c.validate());
  c.validation_fraction = 0.5;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("validation_fraction"), ValidationError);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  const auto parsed = probe_config_from_json(nlohmann::json{{"learning_rate", 0.01}, {"seed", 9}});
  CHECK(parsed.learning_rate == 0.01);
  CHECK(parsed.seed == 9);
  CHECK(parsed.epochs == 20);
  CHECK(probe_config_from_json(to_json(parsed)).learning_rate == 0.01);
}

TEST_CASE("separable blobs are decoded") {
  const auto d = fixtures::blobs(600, 10, 4.0, 3);
  const auto folds = train_probe(d.x, d.y, d.folds, 2, {});
  REQUIRE(folds.size() == 10);
  CHECK(mean_bacc(folds) >= 0.95);
  for (const auto& f : folds) {
    CHECK(f.best_epoch >= 1);
    CHECK(f.epochs_run <= 20);
    CHECK(f.epochs_run - f.best_epoch <= 5);
  }
}

TEST_CASE("shuffled labels sit at chance") {
  auto d = fixtures::blobs(2000, 10, 4.0, 4);
  fixtures::shuffle_labels(d, 99);
  const double b = mean_bacc(train_probe(d.x, d.y, d.folds, 2, {}));
  CHECK(b == doctest::Approx(0.5).epsilon(0.14));
}

TEST_CASE("training is deterministic and independent of jobs") {
  const auto d = fixtures::blobs(300, 6, 2.0, 5);
  const auto a = train_probe(d.x, d.y, d.folds, 2, {}, 1);
  const auto b = train_probe(d.x, d.y, d.folds, 2, {}, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].bacc == b[i].bacc);
    CHECK(a[i].best_epoch == b[i].best_epoch);
  }
}

TEST_CASE("accuracy is stable under a shared affine transform") {
  const auto d = fixtures::blobs(1000, 8, 3.0, 6);
  std::mt19937_64 gen(7);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(8, 8);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(gen);
  a += 3.0 * Eigen::MatrixXd::Identity(8, 8);
  Eigen::RowVectorXd shift(8);
  for (int j = 0; j < 8; ++j) shift(j) = 10.0 * g(gen);
  const Eigen::MatrixXd xt = (d.x * a).rowwise() + shift;
  const double base = mean_bacc(train_probe(d.x, d.y, d.folds, 2, {}));
  const double moved = mean_bacc(train_probe(xt, d.y, d.folds, 2, {}));
  CHECK(std::abs(base - moved) < 0.02);
}

TEST_CASE("training errors") {
  FoldSplit s;
  s.fold = 3;
  s.x_train = Eigen::MatrixXd::Ones(4, 2);
  s.y_train = {1, 1, 1, 1};
  s.x_test = Eigen::MatrixXd::Ones(2, 2);
  s.y_test = {0, 1};
  CHECK_THROWS_WITH_AS(train_fold(s, 2, {}), doctest::Contains("fold 3: training set holds a single class"),
                       ValidationError);
  s.y_train = {0, 1, 0, 5};
  CHECK_THROWS_WITH_AS(train_fold(s, 2, {}), doctest::Contains("label 5"), ValidationError);

  s.y_train = {0, 1, 0, 1};
  s.x_train(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(train_fold(s, 2, {}), doctest::Contains("non-finite loss"), Error);
}

TEST_CASE("flatten pooling recovers a single-token signal that mean pooling dilutes") {
  const auto y = fixtures::alternating_labels(2000);
  const auto t = fixtures::single_token_signal(2000, 16, 8, 5, 0.5, y, 8);
  const auto folds = fixtures::round_robin_folds(2000, 10);
  const double flat = mean_bacc(train_probe(pool_tensor(t, Pooling::flatten), y, folds, 2, {}));
  const double mean = mean_bacc(train_probe(pool_tensor(t, Pooling::mean), y, folds, 2, {}));
  MESSAGE("flatten " << flat << " mean " << mean);
  CHECK(flat - mean >= 0.10);
}

TEST_CASE("blockwise sweep") {
  const auto y = fixtures::alternating_labels(400);
  const auto informative = fixtures::single_token_signal(400, 4, 4, 0, 2.5, y, 9);
  const auto noise = fixtures::single_token_signal(400, 4, 4, 0, 0.0, y, 10);

  SUBCASE("one block is a single point at depth 0") {
    BlockSet set{{0, split_folds(informative, y, 5)}};
    const auto r = blockwise_sweep(set, 2, Pooling::mean, {});
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].relative_depth == 0.0);
    CHECK(r.rows[0].folds.size() == 5);
  }
  SUBCASE("identical blocks give a flat curve") {
    BlockSet set;
    for (int b = 0; b < 3; ++b) set[b] = split_folds(informative, y, 5);
    const auto r = blockwise_sweep(set, 2, Pooling::flatten, {}, 3);
    CHECK(std::abs(r.rows[0].stats.mean - r.rows[2].stats.mean) < 0.01);
    CHECK(r.rows[1].relative_depth == 0.5);
  }
  SUBCASE("the curve rises where the signal appears") {
    BlockSet set;
    for (int b = 0; b < 4; ++b) set[b] = split_folds(b >= 2 ? informative : noise, y, 5);
    const auto r = blockwise_sweep(set, 2, Pooling::mean, {});
    CHECK(r.rows[1].stats.mean < 0.65);
    CHECK(r.rows[2].stats.mean > 0.9);
    CHECK(r.rows[2].relative_depth == doctest::Approx(2.0 / 3.0));
    const auto csv = probe_report_csv(r);
    CHECK(csv.rfind("block,relative_depth,pooling,bacc_mean,bacc_std\n0,0.0000,mean,", 0) == 0);
    CHECK(csv.find("\n2,0.6667,mean,") != std::string::npos);
  }
}

TEST_CASE("embedding files") {
  TempDir dir;
  DatasetManifest m;
  m.name = "emb";
  m.rate_hz = 200;
  m.montage.channel_names = {"Cz"};
  m.classes = {"a", "b"};
  EmbeddingIndex index;
  index.blocks = {0, 1};
  const auto y = fixtures::alternating_labels(40);
  const auto t = fixtures::single_token_signal(40, 2, 3, 0, 2.0, y, 11);
  for (std::size_t i = 0; i < 40; ++i) {
    m.trials.push_back({"t" + std::to_string(i), "s" + std::to_string(i % 4), y[i]});
  }
  const auto folds = split_folds(t, y, 4);
  for (const auto& f : folds) {
    for (std::size_t i = 0; i < 40; ++i) {
      (static_cast<int>(i % 4) == f.fold ? index.test_ids : index.train_ids)[f.fold].push_back(m.trials[i].id);
    }
    for (int b : index.blocks) {
      write_tensor_blob(f.train, dir.path / embedding_file_name(b, f.fold, "train"));
      write_tensor_blob(f.test, dir.path / embedding_file_name(b, f.fold, "test"));
    }
  }
  write_embedding_index(index, dir.path);
  CHECK(embedding_index_from_json(to_json(index)) == index);

  const auto loaded = load_embeddings(dir.path, m);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at(1)[2].train == folds[2].train);
  CHECK(loaded.at(1)[2].y_test == folds[2].y_test);

  std::filesystem::remove(dir.path / "block1_fold0_test.eegt");
  std::filesystem::remove(dir.path / "block0_fold3_train.eegt");
  CHECK_THROWS_WITH_AS(load_embeddings(dir.path, m),
                       doctest::Contains("block0_fold3_train.eegt, block1_fold0_test.eegt"), ValidationError);
}
