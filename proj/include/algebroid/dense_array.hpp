#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace algebroid {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised whenever the dimensions of two operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void requireDims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

/// Dense multi-index array with C ordering (last index fastest).
///
/// Used for structure-constant tensors, p-form coefficients and residual
/// blocks. A rank-0 array holds exactly one value.
template <typename Scalar>
class DenseArray {
 public:
  DenseArray() : data_(Vec<Scalar>::Zero(1)) {}

  explicit DenseArray(std::vector<int> shape) : shape_(std::move(shape)) {
    for (int s : shape_) requireDims(s >= 0, "DenseArray: negative extent");
    data_ = Vec<Scalar>::Zero(static_cast<Eigen::Index>(count(shape_)));
  }

  static DenseArray zeros(std::vector<int> shape) { return DenseArray(std::move(shape)); }

  /// Array of the given rank with every extent equal to `extent`.
  static DenseArray cube(int rank, int extent) {
    return DenseArray(std::vector<int>(static_cast<std::size_t>(rank), extent));
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int extent(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Eigen::Index size() const { return data_.size(); }

  Vec<Scalar>& data() { return data_; }
  const Vec<Scalar>& data() const { return data_; }

  Eigen::Index offset(std::span<const int> idx) const {
    requireDims(idx.size() == shape_.size(), "DenseArray: index rank mismatch");
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) off = off * shape_[i] + idx[i];
    return off;
  }

  Scalar& at(std::span<const int> idx) { return data_(offset(idx)); }
  const Scalar& at(std::span<const int> idx) const { return data_(offset(idx)); }

  template <typename... I>
  Scalar& operator()(I... i) {
    const int idx[] = {static_cast<int>(i)...};
    return data_(offset(std::span<const int>(idx, sizeof...(I))));
  }
  template <typename... I>
  const Scalar& operator()(I... i) const {
    const int idx[] = {static_cast<int>(i)...};
    return data_(offset(std::span<const int>(idx, sizeof...(I))));
  }
  Scalar& operator()() { return data_(0); }
  const Scalar& operator()() const { return data_(0); }

  Scalar maxAbs() const { return data_.size() == 0 ? Scalar(0) : data_.cwiseAbs().maxCoeff(); }

  DenseArray& operator+=(const DenseArray& o) {
    requireDims(o.shape_ == shape_, "DenseArray: shape mismatch in +=");
    data_ += o.data_;
    return *this;
  }
  DenseArray& operator-=(const DenseArray& o) {
    requireDims(o.shape_ == shape_, "DenseArray: shape mismatch in -=");
    data_ -= o.data_;
    return *this;
  }
  DenseArray& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }
  friend DenseArray operator+(DenseArray a, const DenseArray& b) { return a += b; }
  friend DenseArray operator-(DenseArray a, const DenseArray& b) { return a -= b; }
  friend DenseArray operator*(Scalar s, DenseArray a) { return a *= s; }

  static std::size_t count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t acc, int s) { return acc * static_cast<std::size_t>(s); });
  }

 private:
  std::vector<int> shape_;
  Vec<Scalar> data_;
};

/// Calls `fn(idx)` for every multi-index of `shape` in C order.
template <typename Fn>
void forEachIndex(const std::vector<int>& shape, Fn&& fn) {
  for (int s : shape)
    if (s == 0) return;
  std::vector<int> idx(shape.size(), 0);
  while (true) {
    fn(std::span<const int>(idx));
    int axis = static_cast<int>(shape.size()) - 1;
    while (axis >= 0) {
      if (++idx[static_cast<std::size_t>(axis)] < shape[static_cast<std::size_t>(axis)]) break;
      idx[static_cast<std::size_t>(axis)] = 0;
      --axis;
    }
    if (axis < 0) return;
  }
}

/// Sign of the permutation that sorts `idx` (0 when an index repeats).
inline int permutationSign(std::span<const int> idx) {
  std::vector<int> v(idx.begin(), idx.end());
  int sign = 1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (v[i] == v[j]) return 0;
      if (v[i] > v[j]) sign = -sign;
    }
  }
  return sign;
}

/// Projection onto the fully antisymmetric part over all indices.
template <typename Scalar>
DenseArray<Scalar> antisymmetrized(const DenseArray<Scalar>& a) {
  const int p = a.rank();
  if (p < 2) return a;
  DenseArray<Scalar> out(a.shape());
  std::vector<int> perm(static_cast<std::size_t>(p));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::pair<std::vector<int>, int>> perms;
  do {
    perms.emplace_back(perm, permutationSign(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const Scalar norm = Scalar(1) / static_cast<Scalar>(perms.size());
  std::vector<int> permuted(static_cast<std::size_t>(p));
  forEachIndex(a.shape(), [&](std::span<const int> idx) {
    Scalar acc(0);
    for (const auto& [pm, sgn] : perms) {
      for (int i = 0; i < p; ++i) permuted[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(pm[static_cast<std::size_t>(i)])];
      acc += static_cast<Scalar>(sgn) * a.at(permuted);
    }
    out.at(idx) = norm * acc;
  });
  return out;
}

/// Central-difference gradient of an array-valued map. The result carries one
/// trailing axis of extent `x.size()` holding the partial derivatives.
template <typename Scalar, typename Fn>
DenseArray<Scalar> centralGradient(Fn&& fn, const Vec<Scalar>& x, Scalar h) {
  const int n = static_cast<int>(x.size());
  DenseArray<Scalar> f0 = fn(x);
  std::vector<int> shape = f0.shape();
  shape.push_back(n);
  DenseArray<Scalar> out(shape);
  const Eigen::Index m = f0.size();
  Vec<Scalar> xp = x;
  for (int j = 0; j < n; ++j) {
    xp(j) = x(j) + h;
    const DenseArray<Scalar> fp = fn(xp);
    xp(j) = x(j) - h;
    const DenseArray<Scalar> fm = fn(xp);
    xp(j) = x(j);
    for (Eigen::Index q = 0; q < m; ++q) out.data()(q * n + j) = (fp.data()(q) - fm.data()(q)) / (2 * h);
  }
  return out;
}

/// Central-difference Jacobian of a vector-valued map, rows = outputs.
template <typename Scalar, typename Fn>
Mat<Scalar> centralJacobian(Fn&& fn, const Vec<Scalar>& x, Scalar h) {
  const Eigen::Index n = x.size();
  const Vec<Scalar> f0 = fn(x);
  Mat<Scalar> jac(f0.size(), n);
  Vec<Scalar> xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    xp(j) = x(j) + h;
    const Vec<Scalar> fp = fn(xp);
    xp(j) = x(j) - h;
    const Vec<Scalar> fm = fn(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2 * h);
  }
  return jac;
}

}  // namespace algebroid
