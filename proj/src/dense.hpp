#ifndef BAYGAZE_SRC_DENSE_HPP_
#define BAYGAZE_SRC_DENSE_HPP_

#include <cmath>
#include <span>

#include <Eigen/Core>

#include "baygaze/landmark_net.hpp"

namespace baygaze::detail {

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

inline ConstMatMap weight_of(const DenseLayout& l, std::span<const double> w) {
  return ConstMatMap(w.data() + l.offset, static_cast<Eigen::Index>(l.out),
                     static_cast<Eigen::Index>(l.in));
}

inline ConstVecMap bias_of(const DenseLayout& l, std::span<const double> w) {
  return ConstVecMap(w.data() + l.offset + l.in * l.out, static_cast<Eigen::Index>(l.out));
}

inline double softplus(double r) { return std::max(r, 0.0) + std::log1p(std::exp(-std::abs(r))); }
inline double sigmoid(double r) {
  return r >= 0 ? 1.0 / (1.0 + std::exp(-r)) : std::exp(r) / (1.0 + std::exp(r));
}

// Activated output of one layer for every column of X.
Eigen::MatrixXd dense_forward(const DenseLayout& l, std::span<const double> w,
                              const Eigen::MatrixXd& X);

// dA holds dL/d(activated output) on entry and is overwritten with
// dL/d(pre-activation). Adds dL/dW, dL/db into grad; writes dL/dX when dX is
// non-null.
void dense_backward(const DenseLayout& l, std::span<const double> w, const Eigen::MatrixXd& X,
                    const Eigen::MatrixXd& A, Eigen::MatrixXd& dA, std::span<double> grad,
                    Eigen::MatrixXd* dX);

struct HeadLayout {
  DenseLayout mean;
  DenseLayout var;
  LandmarkVector offset;
  LandmarkVector scale;
};

struct HeadOutput {
  Eigen::MatrixXd mean;      // pixels
  Eigen::MatrixXd variance;  // pixels^2
  Eigen::MatrixXd dvar_draw; // d variance / d raw variance pre-activation
};

HeadOutput head_forward(const HeadLayout& h, std::span<const double> w, const Eigen::MatrixXd& H);

// Summed NLL of targets under the head output, with dL/dmean and
// dL/dvariance per entry.
double head_nll(const HeadOutput& out, const Eigen::MatrixXd& targets, Eigen::MatrixXd* dmean,
                Eigen::MatrixXd* dvar);

// Backpropagates dL/dmean, dL/dvariance through both heads; accumulates
// parameter gradients and adds dL/dH into dH.
void head_backward(const HeadLayout& h, std::span<const double> w, const Eigen::MatrixXd& H,
                   const HeadOutput& out, const Eigen::MatrixXd& dmean,
                   const Eigen::MatrixXd& dvar, std::span<double> grad, Eigen::MatrixXd& dH);

std::vector<LandmarkDistribution> to_distributions(const HeadOutput& out);

// N(0, std^2) weights and zero biases for a layer.
void init_dense(const DenseLayout& l, double std, Rng& rng, std::span<double> w);

}  // namespace baygaze::detail

#endif  // BAYGAZE_SRC_DENSE_HPP_
