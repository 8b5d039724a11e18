#pragma once

// Synthetic probe data with known answers, shared by the unit and
// acceptance suites.

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "eegrob/core/tensor_blob.hpp"

namespace eegrob::fixtures {

struct Labelled {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<int> folds;
};

inline std::vector<int> round_robin_folds(std::size_t n, int k) {
  std::vector<int> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = static_cast<int>(i % static_cast<std::size_t>(k));
  return f;
}

/// Two Gaussian blobs with unit variance whose means are `separation`
/// apart along a random unit direction.
inline Labelled blobs(std::size_t n, int dim, double separation, std::uint64_t seed, int k = 10) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd dir(dim);
  for (int j = 0; j < dim; ++j) dir(j) = g(gen);
  dir.normalize();
  Labelled out{Eigen::MatrixXd(static_cast<Eigen::Index>(n), dim), {}, round_robin_folds(n, k)};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i / 2 % 2);
    for (int j = 0; j < dim; ++j) out.x(static_cast<Eigen::Index>(i), j) = g(gen);
    out.x.row(static_cast<Eigen::Index>(i)) += ((label ? 0.5 : -0.5) * separation * dir).transpose();
    out.y.push_back(label);
  }
  return out;
}

inline void shuffle_labels(Labelled& d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::shuffle(d.y.begin(), d.y.end(), gen);
}

/// trials x tokens x dim, i.i.d. N(0, 1) everywhere; token `signal_token`
/// additionally carries +-amplitude on every dimension by class.
inline Tensor single_token_signal(std::size_t trials, std::size_t tokens, std::size_t dim, std::size_t signal_token,
                                  double amplitude, const std::vector<int>& labels, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor t;
  t.shape = {trials, tokens, dim};
  t.values.resize(trials * tokens * dim);
  for (std::size_t i = 0; i < trials; ++i) {
    for (std::size_t k = 0; k < tokens; ++k) {
      for (std::size_t j = 0; j < dim; ++j) {
        double v = g(gen);
        if (k == signal_token) v += labels[i] ? amplitude : -amplitude;
        t.values[(i * tokens + k) * dim + j] = v;
      }
    }
  }
  return t;
}

inline std::vector<int> alternating_labels(std::size_t n) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
  return y;
}

}  // namespace eegrob::fixtures
