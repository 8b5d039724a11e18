#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>

#include "eegrob/core/error.hpp"
#include "eegrob/core/folds.hpp"
#include "eegrob/core/io.hpp"
#include "eegrob/core/manifest.hpp"
#include "eegrob/core/rng.hpp"
#include "eegrob/core/tensor_blob.hpp"
#include "test_util.hpp"

using namespace eegrob;
namespace fs = std::filesystem;

TEST_CASE("philox4x32-10 matches the Random123 known-answer vectors") {
  using rng::philox4x32_10;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter streams are addressable and independent") {
  rng::CounterStream a({7, rng::Purpose::white_noise, 3, 5});
  rng::CounterStream b({7, rng::Purpose::white_noise, 3, 5});
  rng::CounterStream other_channel({7, rng::Purpose::white_noise, 3, 6});
  rng::CounterStream other_purpose({7, rng::Purpose::pink_noise, 3, 5});
  bool differs_channel = false, differs_purpose = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_channel |= x != other_channel.next_u64();
    differs_purpose |= x != other_purpose.next_u64();
  }
  CHECK(differs_channel);
  CHECK(differs_purpose);

  rng::CounterStream u({1, rng::Purpose::synthetic, 0, 0});
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = u.uniform();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("assign_folds: 54 subjects into 10 folds") {
  std::vector<std::string> subjects;
  for (int i = 1; i <= 54; ++i) subjects.push_back(fmt_subject(i));
  const auto folds = assign_folds(subjects, 10, FoldSeed{2024});
  REQUIRE(folds.size() == 10);
  int fives = 0, sixes = 0;
  std::set<std::string> seen;
  for (const auto& [f, members] : folds) {
    if (members.size() == 5) ++fives;
    if (members.size() == 6) ++sixes;
    for (const auto& s : members) CHECK(seen.insert(s).second);
  }
  CHECK(fives == 6);
  CHECK(sixes == 4);
  CHECK(seen.size() == 54);
}

TEST_CASE("assign_folds: 10 subjects into 10 folds gives singletons") {
  std::vector<std::string> subjects;
  for (int i = 0; i < 10; ++i) subjects.push_back(fmt_subject(i));
  for (const auto& [f, members] : assign_folds(subjects, 10, FoldSeed{1})) CHECK(members.size() == 1);
}

TEST_CASE("assign_folds is deterministic and independent of input order") {
  std::vector<std::string> subjects;
  for (int i = 0; i < 37; ++i) subjects.push_back(fmt_subject(i));
  const auto a = assign_folds(subjects, 10, FoldSeed{99});
  const auto b = assign_folds(subjects, 10, FoldSeed{99});
  CHECK(manifest_json_of_folds(a) == manifest_json_of_folds(b));
  std::mt19937_64 gen(3);
  std::shuffle(subjects.begin(), subjects.end(), gen);
  CHECK(assign_folds(subjects, 10, FoldSeed{99}) == a);
  CHECK(assign_folds(subjects, 10, FoldSeed{100}) != a);
}

TEST_CASE("assign_folds rejects too few subjects and k < 2") {
  CHECK_THROWS_AS(assign_folds({"a", "b"}, 3, FoldSeed{0}), ValidationError);
  CHECK_THROWS_AS(assign_folds({"a", "b"}, 1, FoldSeed{0}), ValidationError);
}

TEST_CASE("property: assign_folds partitions with balanced sizes") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(gen() % 11);
    const int n = k + static_cast<int>(gen() % 60);
    std::vector<std::string> subjects;
    for (int i = 0; i < n; ++i) subjects.push_back(fmt_subject(static_cast<int>(gen() % 100000)) + "_" + std::to_string(i));
    const auto folds = assign_folds(subjects, k, FoldSeed{gen()});
    std::set<std::string> all;
    std::size_t lo = SIZE_MAX, hi = 0, total = 0;
    for (const auto& [f, members] : folds) {
      lo = std::min(lo, members.size());
      hi = std::max(hi, members.size());
      total += members.size();
      all.insert(members.begin(), members.end());
    }
    CHECK(total == all.size());
    CHECK(all == std::set<std::string>(subjects.begin(), subjects.end()));
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("manifest round trip and invariant checks") {
  TempDir dir;
  const auto m = small_manifest();
  write_manifest(m, dir.path / "m.json");
  CHECK(read_manifest(dir.path / "m.json") == m);

  SUBCASE("overlapping folds name both fold indices") {
    auto doc = manifest_to_json(m);
    doc["folds"]["1"].push_back("s0");
    try {
      manifest_from_json(doc);
      FAIL("expected rejection");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("folds 0 and 1") != std::string::npos);
    }
  }
  SUBCASE("label beyond class count") {
    auto doc = manifest_to_json(m);
    doc["trials"][2]["label"] = 5;
    CHECK_THROWS_WITH_AS(manifest_from_json(doc), doctest::Contains("label < class count"), ValidationError);
  }
  SUBCASE("schema errors name the field") {
    auto doc = manifest_to_json(m);
    doc["trials"][1]["subject"] = 3;
    CHECK_THROWS_WITH_AS(manifest_from_json(doc), doctest::Contains("trials[1].subject"), ValidationError);
    doc = manifest_to_json(m);
    doc.erase("rate_hz");
    CHECK_THROWS_WITH_AS(manifest_from_json(doc), doctest::Contains("rate_hz"), ValidationError);
  }
  SUBCASE("positions outside the unit disc") {
    auto doc = manifest_to_json(m);
    doc["positions_2d"] = nlohmann::json::array();
    for (std::size_t i = 0; i < m.montage.channel_names.size(); ++i) doc["positions_2d"].push_back({0.0, 0.0});
    doc["positions_2d"][0] = {1.5, 0.0};
    CHECK_THROWS_AS(manifest_from_json(doc), ValidationError);
  }
}

TEST_CASE("property: random valid manifests round trip") {
  std::mt19937_64 gen(5);
  TempDir dir;
  for (int trial = 0; trial < 50; ++trial) {
    DatasetManifest m;
    m.name = "ds" + std::to_string(trial);
    m.rate_hz = 100.0 + static_cast<double>(gen() % 1000) / 7.0;
    const int nch = 1 + static_cast<int>(gen() % 8);
    for (int c = 0; c < nch; ++c) m.montage.channel_names.push_back("E" + std::to_string(c));
    if (gen() % 2) {
      std::uniform_real_distribution<double> u(-0.7, 0.7);
      std::vector<Point2> pos;
      for (int c = 0; c < nch; ++c) pos.push_back({u(gen), u(gen)});
      m.montage.positions_2d = pos;
    }
    const int ncls = 2 + static_cast<int>(gen() % 4);
    for (int c = 0; c < ncls; ++c) m.classes.push_back("class " + std::to_string(c));
    const int nsub = 2 + static_cast<int>(gen() % 10);
    for (int t = 0; t < nsub * 3; ++t) {
      m.trials.push_back({"t" + std::to_string(t), fmt_subject(t % nsub), static_cast<int>(gen() % ncls)});
    }
    m.folds = assign_folds(m.subjects(), 2, FoldSeed{gen()});
    write_manifest(m, dir.path / "m.json");
    CHECK(read_manifest(dir.path / "m.json") == m);
  }
}

TEST_CASE("tensor blob: 3x4 float32 zeros") {
  Tensor t{{3, 4}, std::vector<double>(12, 0.0), Dtype::float32};
  const auto bytes = encode_tensor_blob(t);
  CHECK(bytes.size() == 8 + 2 * 8 + 48);
  CHECK(std::to_integer<char>(bytes[0]) == 'E');
  CHECK(std::to_integer<int>(bytes[4]) == 1);
  CHECK(std::to_integer<int>(bytes[5]) == 1);
  CHECK(std::to_integer<int>(bytes[6]) == 2);
  CHECK(std::to_integer<int>(bytes[7]) == 0);
  CHECK(std::to_integer<int>(bytes[8]) == 3);
  CHECK(decode_tensor_blob(bytes) == t);
}

TEST_CASE("tensor blob: float64 scalar round trips bit-exactly") {
  TempDir dir;
  Tensor t{{1}, {1.5}, Dtype::float64};
  write_tensor_blob(t, dir.path / "x.eegt");
  const auto back = read_tensor_blob(dir.path / "x.eegt");
  CHECK(back == t);
  CHECK(fs::file_size(dir.path / "x.eegt") == 8 + 8 + 8);
}

TEST_CASE("tensor blob: distinct decode errors") {
  auto expect_code = [](std::vector<std::byte> bytes, BlobErrc code) {
    try {
      decode_tensor_blob(bytes);
      FAIL("expected BlobError");
    } catch (const BlobError& e) {
      CHECK(e.code() == code);
    }
  };
  Tensor t{{10}, std::vector<double>(10, 2.0), Dtype::float32};
  auto bytes = encode_tensor_blob(t);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 8);  // 8 of 10 elements present
  expect_code(truncated, BlobErrc::truncated);

  auto dtype = bytes;
  dtype[5] = std::byte{7};
  expect_code(dtype, BlobErrc::unknown_dtype);

  auto trailing = bytes;
  trailing.push_back(std::byte{0});
  expect_code(trailing, BlobErrc::size_mismatch);

  auto magic = bytes;
  magic[0] = std::byte{'X'};
  expect_code(magic, BlobErrc::bad_magic);

  auto ndim = bytes;
  ndim[6] = std::byte{5};
  expect_code(ndim, BlobErrc::bad_ndim);

  CHECK_THROWS_AS(encode_tensor_blob(Tensor{{2, 2}, {1.0, 2.0, 3.0}, Dtype::float64}), BlobError);
}

TEST_CASE("property: tensor blob round trip over random shapes") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal(0.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor t;
    t.dtype = gen() % 2 ? Dtype::float32 : Dtype::float64;
    const int ndim = 1 + static_cast<int>(gen() % 4);
    for (int d = 0; d < ndim; ++d) t.shape.push_back(1 + gen() % 6);
    t.values.resize(t.element_count());
    for (auto& v : t.values) {
      v = normal(gen);
      if (t.dtype == Dtype::float32) v = static_cast<float>(v);
    }
    const auto back = decode_tensor_blob(encode_tensor_blob(t));
    CHECK(back == t);
  }
}

TEST_CASE("trial tensor invariants") {
  CHECK_NOTHROW(TrialTensor(Matrix(2, 3), 200.0, {"C3", "C4"}));
  CHECK_THROWS_AS(TrialTensor(Matrix(2, 3), 200.0, {"C3"}), ValidationError);
  CHECK_THROWS_AS(TrialTensor(Matrix(2, 3), 200.0, {"C3", "C3"}), ValidationError);
  CHECK_THROWS_AS(TrialTensor(Matrix(2, 0), 200.0, {"C3", "C4"}), ValidationError);
  CHECK_THROWS_AS(TrialTensor(Matrix(2, 3), 0.0, {"C3", "C4"}), ValidationError);
  Matrix bad(1, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(TrialTensor(bad, 200.0, {"Cz"}), ValidationError);
}

TEST_CASE("staged directory is removed unless committed") {
  TempDir dir;
  const auto target = dir.path / "out";
  {
    StagedDirectory staged(target);
    write_file_atomic(staged.path() / "a.txt", "x");
  }
  CHECK_FALSE(fs::exists(target));
  CHECK_FALSE(fs::exists(dir.path / "out.partial"));
  {
    StagedDirectory staged(target);
    write_file_atomic(staged.path() / "a.txt", "x");
    staged.commit();
  }
  CHECK(read_file(target / "a.txt") == "x");
}
