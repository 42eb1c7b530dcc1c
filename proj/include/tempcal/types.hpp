#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tempcal {

using Eigen::Index;
using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Invalid input or configuration. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical failure (non-finite value, failed factorization, ill-posed posterior).
/// The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DataKind { regression, binary };

/// Paired design matrix and responses. Row i is the observation X_i = (Z_i, Y_i).
struct Dataset {
    MatrixXd Z;
    VectorXd Y;
    DataKind kind = DataKind::regression;

    Dataset() = default;
    Dataset(MatrixXd z, VectorXd y, DataKind k = DataKind::regression);

    Index size() const { return Z.rows(); }
    Index dim() const { return Z.cols(); }

    /// Throws ConfigError when any invariant is broken.
    void validate() const;

    Dataset head(Index count) const;
    Dataset tail(Index count) const;
    /// Gathers the given rows, repetitions allowed.
    Dataset select(std::span<const Index> rows) const;
};

struct GaussianPrior {
    VectorXd mean;
    MatrixXd cov;

    /// N(0, scale * I_d).
    static GaussianPrior isotropic(Index d, double scale = 1.0);
    void validate() const;
};

/// Bounds on alpha/n. Strategies clip their output to [lo*n, hi*n].
struct AlphaBounds {
    double lo = 0.0;
    double hi = 3.0;

    void validate() const;
    double lower(Index n) const { return lo * static_cast<double>(n); }
    double upper(Index n) const { return hi * static_cast<double>(n); }
    double clip(double alpha, Index n) const;
};

struct StrategyOutcome {
    double alpha = 0.0;
    double alpha_over_n = 0.0;
    double oracle_risk = 0.0;
    std::int64_t wall_time_ms = 0;
};

/// A draw from a posterior over model parameters. sigma2 is only meaningful for the
/// unknown-variance model; other models leave it at 1.
struct ParamDraw {
    VectorXd theta;
    double sigma2 = 1.0;
};

}  // namespace tempcal
