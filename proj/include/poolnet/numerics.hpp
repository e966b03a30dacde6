// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "poolnet/errors.hpp"

namespace poolnet {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Row-major so that the flat `data()` order matches the checkpoint layout.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Array1 = Vector<double>;
using Array2 = Matrix<double>;

/// A sequence of feature vectors, one column per time step.
using Sequence = Eigen::MatrixXd;

enum class EwiseOp { add, sub, mul, max, avg };

/// m * x with an explicit conformance check.
template <typename DerivedM, typename DerivedX>
Vector<typename DerivedM::Scalar> matvec(const Eigen::MatrixBase<DerivedM>& m,
                                         const Eigen::MatrixBase<DerivedX>& x) {
  if (m.cols() != x.size()) {
    throw ShapeError("matvec: matrix has " + std::to_string(m.cols()) +
                     " columns, vector has " + std::to_string(x.size()) + " entries");
  }
  return m * x;
}

template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> ewise(EwiseOp op, const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw ShapeError("ewise: lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " differ");
  }
  switch (op) {
    case EwiseOp::add: return a + b;
    case EwiseOp::sub: return a - b;
    case EwiseOp::mul: return a.cwiseProduct(b);
    case EwiseOp::max: return a.cwiseMax(b);
    case EwiseOp::avg: return (a + b) * Scalar(0.5);
  }
  throw ArgumentError("ewise: unknown operator");
}

/// Outer product flattened row-major: result[i * b.size() + j] = a[i] * b[j].
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> outer(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Matrix<Scalar> product = a * b.transpose();
  return Eigen::Map<const Vector<Scalar>>(product.data(), product.size());
}

template <typename Derived>
Vector<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

template <typename Scalar>
Scalar sigmoid_scalar(Scalar x) {
  // Branches keep exp() from overflowing on either tail.
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Derived>
Vector<typename Derived::Scalar> sigmoid(const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([](typename Derived::Scalar v) { return sigmoid_scalar(v); });
}

template <typename Derived>
Vector<typename Derived::Scalar> tanh(const Eigen::MatrixBase<Derived>& x) {
  return x.array().tanh().matrix();
}

/// Seedable generator with a fully specified, platform-independent draw sequence.
///
/// The engine is std::mt19937_64, whose output is fixed by the standard. All
/// derived draws (uniform reals, Bernoulli, bounded integers) are computed here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Unbiased integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Sub-seed for an independent stream, via one splitmix64 round over (seed, stream).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// rows x cols matrix with entries i.i.d. uniform on [-scale, scale].
Array2 init_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale);
Array1 init_uniform(Rng& rng, Eigen::Index len, double scale);

/// Named flat view over one parameter array, used by the optimizer, the
/// gradient checker and the checkpoint writer.
struct ParamView {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::span<double> values;
};

struct ConstParamView {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::span<const double> values;
};

template <typename Derived>
ParamView view_of(std::string name, Eigen::PlainObjectBase<Derived>& a) {
  return {std::move(name), a.rows(), a.cols(),
          std::span<double>(a.data(), static_cast<std::size_t>(a.size()))};
}

template <typename Derived>
ConstParamView view_of(std::string name, const Eigen::PlainObjectBase<Derived>& a) {
  return {std::move(name), a.rows(), a.cols(),
          std::span<const double>(a.data(), static_cast<std::size_t>(a.size()))};
}

void set_zero(const std::vector<ParamView>& params);

}  // namespace poolnet
