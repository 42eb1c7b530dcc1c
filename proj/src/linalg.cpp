#include "tempcal/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace tempcal {

SpdFactor::SpdFactor(const MatrixXd& a) {
    if (a.rows() != a.cols()) throw NumericalError("SPD factorization of a non-square matrix");
    llt_.compute(a);
    if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().allFinite()) return;

    const double d = static_cast<double>(a.rows());
    double jitter = 1e-10 * std::abs(a.trace()) / d;
    if (!(jitter > 0.0) || !std::isfinite(jitter)) jitter = 1e-10;
    for (int attempt = 0; attempt < 3; ++attempt) {
        MatrixXd shifted = a;
        shifted.diagonal().array() += jitter;
        llt_.compute(shifted);
        if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().allFinite()) {
            jitter_ = jitter;
            return;
        }
        jitter *= 10.0;
    }
    throw NumericalError("matrix is not positive definite even after diagonal jitter");
}

MatrixXd SpdFactor::inverse() const {
    return llt_.solve(MatrixXd::Identity(dim(), dim()));
}

VectorXd SpdFactor::whiten(const VectorXd& b) const {
    return llt_.matrixL().solve(b);
}

double SpdFactor::log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

MatrixXd spd_inverse(const MatrixXd& a) {
    return symmetrize(SpdFactor(a).inverse());
}

double spectral_norm_sym(const MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace tempcal
