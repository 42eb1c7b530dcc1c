#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tempcal/types.hpp"

namespace tempcal {

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// When the plain factorization fails, a diagonal jitter of 1e-10 * trace / d is added
/// and the factorization retried, growing the jitter tenfold up to three times. A
/// NumericalError is thrown if every attempt fails.
class SpdFactor {
public:
    SpdFactor() = default;
    explicit SpdFactor(const MatrixXd& a);

    Index dim() const { return llt_.rows(); }
    double jitter() const { return jitter_; }

    VectorXd solve(const VectorXd& b) const { return llt_.solve(b); }
    MatrixXd solve(const MatrixXd& b) const { return llt_.solve(b); }
    MatrixXd inverse() const;
    /// Lower-triangular L with A + jitter*I = L L^T.
    MatrixXd lower() const { return llt_.matrixL(); }
    /// L^{-1} b.
    VectorXd whiten(const VectorXd& b) const;
    double log_det() const;

private:
    Eigen::LLT<MatrixXd> llt_;
    double jitter_ = 0.0;
};

/// Inverse of an SPD matrix computed through its Cholesky factor.
MatrixXd spd_inverse(const MatrixXd& a);

/// Largest eigenvalue of a symmetric matrix.
double spectral_norm_sym(const MatrixXd& a);

inline MatrixXd symmetrize(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace tempcal
