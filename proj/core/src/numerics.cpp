#include "vamod/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>

namespace vamod {

std::size_t FittedModel::index_of(std::string_view label) const {
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (labels[j] == label) return j;
  throw Error(ErrorCode::UnknownLabel, "no coefficient labelled '" + std::string(label) + "'");
}

Eigen::VectorXd FittedModel::classical_se() const { return (xtx_inverse.diagonal().array() * rmse * rmse).sqrt(); }

namespace {

// First column whose distance from the span of the preceding columns is
// negligible. Unpivoted QR makes |R_jj| exactly that distance.
Eigen::Index first_dependent_column(const Eigen::MatrixXd& X) {
  const double max_norm = X.colwise().norm().maxCoeff();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    if (std::abs(packed(j, j)) <= kRankTolerance * max_norm) return j;
  return -1;
}

}  // namespace

FittedModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> labels) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (y.size() != n) throw Error(ErrorCode::LengthMismatch, "response length differs from design rows");
  if (k == 0) throw Error(ErrorCode::EmptyInput, "design has no columns");
  if (n <= k)
    throw Error(ErrorCode::TooFewRows,
                "need more rows than columns (N=" + std::to_string(n) + ", K=" + std::to_string(k) + ")");
  if (labels.empty()) {
    for (Eigen::Index j = 0; j < k; ++j) labels.push_back("x" + std::to_string(j));
  } else if (static_cast<Eigen::Index>(labels.size()) != k) {
    throw Error(ErrorCode::LengthMismatch, "label count differs from design columns");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(n, k);
  qr.setThreshold(kRankTolerance);
  qr.compute(X);
  if (qr.rank() < k) {
    Eigen::Index dep = first_dependent_column(X);
    if (dep < 0) dep = qr.colsPermutation().indices()(qr.rank());
    throw Error(ErrorCode::RankDeficient, "column '" + labels[static_cast<std::size_t>(dep)] +
                                              "' is linearly dependent on earlier columns");
  }

  FittedModel fit;
  fit.labels = std::move(labels);
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_params = static_cast<std::size_t>(k);
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  fit.xtx_inverse = perm * inner * perm.transpose();

  const double ssr = fit.residuals.squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  fit.r_squared = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;
  fit.adj_r_squared = 1.0 - (1.0 - fit.r_squared) * (dn - 1.0) / (dn - dk);
  fit.rmse = std::sqrt(ssr / (dn - dk));
  return fit;
}

ClusterRobustCov cluster_robust_cov(const FittedModel& fit, const Eigen::MatrixXd& X,
                                    std::span<const std::string> cluster_ids) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (static_cast<Eigen::Index>(cluster_ids.size()) != n || fit.residuals.size() != n)
    throw Error(ErrorCode::LengthMismatch, "cluster ids, residuals and design rows must align");

  std::map<std::string_view, Eigen::Index> index;
  for (const auto& id : cluster_ids) index.emplace(id, 0);
  if (index.size() < 2) throw Error(ErrorCode::SingleCluster, "cluster-robust covariance needs at least 2 clusters");
  Eigen::Index next = 0;
  for (auto& [id, j] : index) j = next++;

  // Per-cluster score sums X_j' e_j, one row per cluster.
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(index.size()), k);
  for (Eigen::Index i = 0; i < n; ++i)
    scores.row(index.at(cluster_ids[static_cast<std::size_t>(i)])) += fit.residuals(i) * X.row(i);

  const Eigen::MatrixXd meat = scores.transpose() * scores;
  const double m = static_cast<double>(index.size());
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);

  ClusterRobustCov cov;
  cov.n_clusters = index.size();
  cov.correction = (m / (m - 1.0)) * ((dn - 1.0) / (dn - dk));
  Eigen::MatrixXd v = cov.correction * (fit.xtx_inverse * meat * fit.xtx_inverse);
  cov.matrix = 0.5 * (v + v.transpose());
  return cov;
}

double f_upper_tail(double x, double df1, double df2) {
  if (!(x > 0.0)) return 1.0;
  boost::math::fisher_f_distribution<double> dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, x));
}

namespace {

struct Subset {
  Eigen::VectorXd b;
  Eigen::MatrixXd v;
};

Subset extract(const FittedModel& fit, const ClusterRobustCov& cov, std::span<const std::string> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "wald test needs at least one coefficient");
  std::vector<Eigen::Index> idx;
  for (const auto& l : labels) idx.push_back(static_cast<Eigen::Index>(fit.index_of(l)));
  const auto q = static_cast<Eigen::Index>(idx.size());
  Subset s{Eigen::VectorXd(q), Eigen::MatrixXd(q, q)};
  for (Eigen::Index a = 0; a < q; ++a) {
    s.b(a) = fit.coefficients(idx[a]);
    for (Eigen::Index c = 0; c < q; ++c) s.v(a, c) = cov.matrix(idx[a], idx[c]);
  }
  return s;
}

WaldResult finish(double wald, std::size_t df1, const ClusterRobustCov& cov) {
  WaldResult r;
  r.wald = std::max(0.0, wald);
  r.df1 = df1;
  r.df2 = cov.n_clusters - 1;
  r.statistic = r.wald / static_cast<double>(df1);
  r.p_value = f_upper_tail(r.statistic, static_cast<double>(r.df1), static_cast<double>(r.df2));
  return r;
}

}  // namespace

WaldResult wald_test(const FittedModel& fit, const ClusterRobustCov& cov, std::span<const std::string> labels) {
  const Subset s = extract(fit, cov, labels);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(s.v);
  const double scale = s.v.cwiseAbs().maxCoeff();
  lu.setThreshold(kRankTolerance);
  if (!(scale > 0.0) || !lu.isInvertible())
    throw Error(ErrorCode::SingularSubmatrix, "covariance block of tested coefficients is singular");
  const double wald = s.b.dot(lu.solve(s.b));
  return finish(wald, static_cast<std::size_t>(s.b.size()), cov);
}

WaldResult wald_test_reduced_rank(const FittedModel& fit, const ClusterRobustCov& cov,
                                  std::span<const std::string> labels) {
  const Subset s = extract(fit, cov, labels);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.v);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) throw Error(ErrorCode::SingularSubmatrix, "covariance block of tested coefficients is zero");
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * s.b;
  double wald = 0.0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > kRankTolerance * top) {
      wald += proj(i) * proj(i) / values(i);
      ++rank;
    }
  }
  return finish(wald, rank, cov);
}

// ---------------------------------------------------------------------------
// Correlation and ranking
// ---------------------------------------------------------------------------

double pearson_corr(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "correlation inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::EmptyInput, "correlation needs at least two pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::ZeroVariance, "correlation input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_corr(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "correlation inputs differ in length");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_corr(rx, ry);
}

std::vector<std::size_t> rank_competition(std::span<const double> scores) {
  const std::size_t n = scores.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot rank an empty list");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> ranks(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order[pos];
    if (pos > 0 && scores[i] == scores[order[pos - 1]])
      ranks[i] = ranks[order[pos - 1]];
    else
      ranks[i] = pos + 1;
  }
  return ranks;
}

}  // namespace vamod
