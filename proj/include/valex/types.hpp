#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace valex {

// Dense numeric types. Double precision everywhere; the aliases keep the
// scalar swappable for experiments without touching call sites.
template <typename ScalarT>
using VectorX = Eigen::Matrix<ScalarT, Eigen::Dynamic, 1>;
template <typename ScalarT>
using MatrixX = Eigen::Matrix<ScalarT, Eigen::Dynamic, Eigen::Dynamic>;

using Scalar = double;
using Vector = VectorX<Scalar>;
using Matrix = MatrixX<Scalar>;

// Column mean of a token-embedding stack (rows = tokens).
template <typename Derived>
VectorX<typename Derived::Scalar> mean_pool(const Eigen::MatrixBase<Derived>& rows) {
    return rows.colwise().mean().transpose();
}

// Numerically stable softmax.
template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
    using S = typename Derived::Scalar;
    VectorX<S> shifted = logits.derived();
    shifted.array() -= shifted.maxCoeff();
    VectorX<S> e = shifted.array().exp();
    return e / e.sum();
}

// log(softmax(logits)[index]) without forming the exponentials twice.
template <typename Derived>
typename Derived::Scalar log_softmax_at(const Eigen::MatrixBase<Derived>& logits, Eigen::Index index) {
    using S = typename Derived::Scalar;
    VectorX<S> shifted = logits.derived();
    S m = shifted.maxCoeff();
    shifted.array() -= m;
    S logsum = std::log(shifted.array().exp().sum());
    return shifted(index) - logsum;
}

inline Scalar clamp_valence(Scalar v) {
    return std::clamp(v, -5.0, 5.0);
}

}  // namespace valex
