#pragma once

// Shared helpers for the unit and acceptance suites.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <unistd.h>

#include "eegrob/core/manifest.hpp"
#include "eegrob/core/matrix.hpp"

namespace eegrob {

inline std::string fmt_subject(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%03d", i);
  return buf;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("eegrob_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string manifest_json_of_folds(const FoldMap& folds) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [f, members] : folds) j[std::to_string(f)] = members;
  return j.dump();
}

inline DatasetManifest small_manifest() {
  DatasetManifest m;
  m.name = "tiny";
  m.rate_hz = 200.0;
  m.montage.channel_names = {"C3", "Cz", "C4"};
  m.classes = {"left", "right"};
  m.trials = {{"t0", "s0", 0}, {"t1", "s0", 1}, {"t2", "s1", 0}, {"t3", "s2", 1}, {"t4", "s3", 0}};
  m.folds = {{0, {"s0", "s1"}}, {1, {"s2", "s3"}}};
  return m;
}

/// rows x cols sine matrix: amplitude * sin(2 pi f t / rate + phase_per_row * r).
inline Matrix sine_matrix(std::size_t rows, std::size_t cols, double freq_hz, double rate_hz, double amplitude,
                          double phase_per_row = 0.0) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < cols; ++t) {
      m(r, t) = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(t) / rate_hz +
                                     phase_per_row * static_cast<double>(r));
    }
  }
  return m;
}

/// Centred mean-square of a matrix by direct summation (test oracle).
inline double oracle_power(const Matrix& m) {
  long double total = 0.0L;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    long double mean = 0.0L;
    for (std::size_t t = 0; t < m.cols(); ++t) mean += m(r, t);
    mean /= static_cast<long double>(m.cols());
    for (std::size_t t = 0; t < m.cols(); ++t) {
      const long double d = m(r, t) - mean;
      total += d * d;
    }
  }
  return static_cast<double>(total / static_cast<long double>(m.size()));
}

}  // namespace eegrob

namespace eegrob {

inline std::vector<std::string> numbered_labels(std::size_t n, const std::string& prefix = "ch") {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

/// Mixture of sines plus broadband jitter with per-channel offsets; the kind
/// of trial the perturbation tests need (nonzero power, non-trivial means).
inline Matrix mixture_matrix(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> amp(0.5, 30.0), freq(1.0, 40.0), phase(0.0, 6.28), offset(-50.0, 50.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double a1 = amp(gen), f1 = freq(gen), p1 = phase(gen), a2 = amp(gen), f2 = freq(gen), off = offset(gen);
    for (std::size_t t = 0; t < cols; ++t) {
      const double x = static_cast<double>(t) / rate;
      m(r, t) = off + a1 * std::sin(2 * std::numbers::pi * f1 * x + p1) + a2 * std::sin(2 * std::numbers::pi * f2 * x) +
                jitter(gen);
    }
  }
  return m;
}

}  // namespace eegrob

namespace eegrob {

/// Relevance with one planted channel at 10x the amplitude of the others
/// (N(0, 100) against N(0, 1)). Overall scale is random per map.
inline Matrix planted_relevance(std::size_t channels, std::size_t samples, std::size_t hot, std::mt19937_64& gen) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  const double s = scale(gen);
  Matrix m(channels, samples);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < samples; ++t) {
      m(c, t) = s * (c == hot ? 10.0 : 1.0) * noise(gen);
    }
  }
  return m;
}

}  // namespace eegrob

#include <fstream>
#include <map>
#include <sstream>

namespace eegrob {

/// Relative path -> file bytes for every regular file under `root`.
inline std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[std::filesystem::relative(e.path(), root).generic_string()] = ss.str();
  }
  return out;
}

/// First differing relative path, or empty when the trees are identical.
inline std::string first_tree_difference(const std::filesystem::path& a, const std::filesystem::path& b) {
  const auto ta = read_tree(a), tb = read_tree(b);
  for (const auto& [k, v] : ta) {
    auto it = tb.find(k);
    if (it == tb.end()) return k + " (only in " + a.string() + ")";
    if (it->second != v) return k;
  }
  for (const auto& [k, v] : tb) {
    if (!ta.count(k)) return k + " (only in " + b.string() + ")";
  }
  return {};
}

}  // namespace eegrob
