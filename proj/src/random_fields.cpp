#include "algebroid/random_fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace algebroid {

FourierField::FourierField(int inDim, int outDim, std::uint64_t seed) : FourierField(inDim, outDim, seed, Options{}) {}

FourierField::FourierField(int inDim, int outDim, std::uint64_t seed, Options opts) {
  if (inDim < 0 || outDim < 0 || opts.modes < 1 || opts.maxWave < 0)
    throw std::invalid_argument("FourierField: invalid options");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> wave(-opts.maxWave, opts.maxWave);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);

  // redraw until the wave vectors span as many directions as they can, so a
  // seeded field never degenerates to a function of fewer coordinates
  waves_.resize(opts.modes, inDim);
  const Eigen::Index target = opts.maxWave > 0 ? std::min(opts.modes, inDim) : 0;
  do {
    for (int m = 0; m < opts.modes; ++m)
      for (int i = 0; i < inDim; ++i) waves_(m, i) = wave(rng);
  } while (inDim > 0 && waves_.fullPivLu().rank() < target);
  amps_.resize(outDim, opts.modes);
  phases_.resize(outDim, opts.modes);
  offsets_.resize(outDim);
  for (int j = 0; j < outDim; ++j) {
    offsets_(j) = opts.offset * unit(rng);
    for (int m = 0; m < opts.modes; ++m) {
      amps_(j, m) = opts.amplitude * unit(rng) / opts.modes;
      phases_(j, m) = phase(rng);
    }
  }
}

Eigen::VectorXd FourierField::operator()(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd arg = waves_ * x;
  Eigen::VectorXd out = offsets_;
  for (Eigen::Index j = 0; j < out.size(); ++j)
    for (Eigen::Index m = 0; m < arg.size(); ++m) out(j) += amps_(j, m) * std::sin(arg(m) + phases_(j, m));
  return out;
}

Eigen::MatrixXd FourierField::jacobian(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd arg = waves_ * x;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(offsets_.size(), waves_.cols());
  for (Eigen::Index j = 0; j < out.rows(); ++j)
    for (Eigen::Index m = 0; m < arg.size(); ++m)
      out.row(j) += amps_(j, m) * std::cos(arg(m) + phases_(j, m)) * waves_.row(m);
  return out;
}

Eigen::MatrixXd FourierField::hessian(const Eigen::VectorXd& x, int j) const {
  const Eigen::VectorXd arg = waves_ * x;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(waves_.cols(), waves_.cols());
  for (Eigen::Index m = 0; m < arg.size(); ++m)
    out -= amps_(j, m) * std::sin(arg(m) + phases_(j, m)) * waves_.row(m).transpose() * waves_.row(m);
  return out;
}

}  // namespace algebroid
