#pragma once

// Least-squares and inference core: OLS via pivoted QR, CR1 cluster-robust
// covariance, Wald/F tests, correlations and league-table ranking.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vamod/error.hpp"

namespace vamod {

/// Pivots at or below this fraction of the largest column norm count as zero.
inline constexpr double kRankTolerance = 1e-10;

struct FittedModel {
  std::vector<std::string> labels;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inverse;  // (X'X)^-1, K x K
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double rmse = 0.0;  // sqrt(SSR / (N - K))

  /// Errors: UnknownLabel.
  std::size_t index_of(std::string_view label) const;
  double coefficient(std::string_view label) const { return coefficients(static_cast<Eigen::Index>(index_of(label))); }
  /// Homoskedastic standard errors rmse * sqrt(diag((X'X)^-1)).
  Eigen::VectorXd classical_se() const;
};

/// Ordinary least squares through a column-pivoted Householder QR of X.
/// `labels` name the columns; empty means "x0", "x1", ...
///
/// Errors: TooFewRows (N <= K), RankDeficient (names the first column that
/// is linearly dependent on the columns before it), LengthMismatch.
FittedModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> labels = {});

struct ClusterRobustCov {
  Eigen::MatrixXd matrix;
  std::size_t n_clusters = 0;
  double correction = 1.0;  // (M/(M-1)) * ((N-1)/(N-K))
};

/// CR1 sandwich c * B (sum_j X_j' e_j e_j' X_j) B with B = (X'X)^-1.
/// Clusters are formed from equal ids; order of rows and names of ids do
/// not matter.
///
/// Errors: SingleCluster, LengthMismatch.
ClusterRobustCov cluster_robust_cov(const FittedModel& fit, const Eigen::MatrixXd& X,
                                    std::span<const std::string> cluster_ids);

struct WaldResult {
  double wald = 0.0;       // b' V^-1 b
  double statistic = 0.0;  // F = wald / df1
  std::size_t df1 = 0;
  std::size_t df2 = 0;  // clusters - 1
  double p_value = 1.0;
};

/// Joint test that the named coefficients are all zero, referred to
/// F(df1, M - 1).
///
/// Errors: EmptyInput, UnknownLabel, SingularSubmatrix.
WaldResult wald_test(const FittedModel& fit, const ClusterRobustCov& cov, std::span<const std::string> labels);

/// As wald_test, but a rank-deficient covariance block is handled with a
/// Moore-Penrose inverse and df1 reduced to its numerical rank (the usual
/// treatment when a category's only information comes from one cluster).
/// Errors: EmptyInput, UnknownLabel, SingularSubmatrix (rank zero).
WaldResult wald_test_reduced_rank(const FittedModel& fit, const ClusterRobustCov& cov,
                                  std::span<const std::string> labels);

/// Upper tail P(F > x) for F(df1, df2).
double f_upper_tail(double x, double df1, double df2);

/// Errors: LengthMismatch, EmptyInput (fewer than 2 pairs), ZeroVariance.
double pearson_corr(std::span<const double> x, std::span<const double> y);
double spearman_corr(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, ascending values, ties get the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// 1-based ranks with rank 1 for the highest score. Tied scores share the
/// smallest rank of their block and the next distinct score skips ahead.
/// Errors: EmptyInput.
std::vector<std::size_t> rank_competition(std::span<const double> scores);

}  // namespace vamod
