#include "tempcal/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

namespace tempcal {

Dataset::Dataset(MatrixXd z, VectorXd y, DataKind k) : Z(std::move(z)), Y(std::move(y)), kind(k) {}

void Dataset::validate() const {
    if (Z.rows() < 1 || Z.cols() < 1) throw ConfigError("dataset must have n >= 1 and d >= 1");
    if (Y.size() != Z.rows()) {
        std::ostringstream os;
        os << "response length " << Y.size() << " does not match design rows " << Z.rows();
        throw ConfigError(os.str());
    }
    if (!Z.allFinite()) throw ConfigError("design matrix contains non-finite entries");
    if (!Y.allFinite()) throw ConfigError("responses contain non-finite entries");
    if (kind == DataKind::binary) {
        for (Index i = 0; i < Y.size(); ++i) {
            if (Y(i) != 0.0 && Y(i) != 1.0) {
                std::ostringstream os;
                os << "binary dataset has Y[" << i << "] = " << Y(i) << " outside {0,1}";
                throw ConfigError(os.str());
            }
        }
    }
}

Dataset Dataset::head(Index count) const {
    return {Z.topRows(count), Y.head(count), kind};
}

Dataset Dataset::tail(Index count) const {
    return {Z.bottomRows(count), Y.tail(count), kind};
}

Dataset Dataset::select(std::span<const Index> rows) const {
    Dataset out;
    out.kind = kind;
    out.Z.resize(static_cast<Index>(rows.size()), Z.cols());
    out.Y.resize(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index src = rows[r];
        out.Z.row(static_cast<Index>(r)) = Z.row(src);
        out.Y(static_cast<Index>(r)) = Y(src);
    }
    return out;
}

GaussianPrior GaussianPrior::isotropic(Index d, double scale) {
    return {VectorXd::Zero(d), scale * MatrixXd::Identity(d, d)};
}

void GaussianPrior::validate() const {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
        throw ConfigError("prior mean and covariance dimensions disagree");
    if (!cov.isApprox(cov.transpose(), 1e-12)) throw ConfigError("prior covariance is not symmetric");
    Eigen::LLT<MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw ConfigError("prior covariance is not positive definite");
}

void AlphaBounds::validate() const {
    if (!(lo >= 0.0) || !std::isfinite(lo)) throw ConfigError("alpha bound lo must be finite and >= 0");
    if (!(hi > lo) || !std::isfinite(hi)) throw ConfigError("alpha bound hi must be finite and > lo");
}

double AlphaBounds::clip(double alpha, Index n) const {
    return std::clamp(alpha, lower(n), upper(n));
}

}  // namespace tempcal
