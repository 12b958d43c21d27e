#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace algebroid {

/// Seeded smooth map R^n -> R^d built from a few Fourier modes,
///   f_j(x) = c_j + sum_m a_{jm} sin(k_m . x + phi_{jm}),
/// with integer wave vectors so every field is 2*pi periodic in each axis.
/// The wave vectors span min(modes, n) directions whenever maxWave > 0.
class FourierField {
 public:
  struct Options {
    int modes = 3;
    int maxWave = 1;
    double amplitude = 1.0;
    double offset = 0.5;
  };

  FourierField(int inDim, int outDim, std::uint64_t seed);
  FourierField(int inDim, int outDim, std::uint64_t seed, Options opts);

  int inDim() const { return static_cast<int>(waves_.cols()); }
  int outDim() const { return static_cast<int>(offsets_.size()); }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  /// (j, i) = d f_j / d x^i
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  /// Second derivatives of component j, (i, l).
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x, int j) const;

 private:
  Eigen::MatrixXd waves_;   // (mode, i)
  Eigen::MatrixXd amps_;    // (j, mode)
  Eigen::MatrixXd phases_;  // (j, mode)
  Eigen::VectorXd offsets_;
};

}  // namespace algebroid
