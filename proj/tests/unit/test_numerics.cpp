#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "vamod/numerics.hpp"

using namespace vamod;
using Catch::Approx;

namespace {

oracle::Matrix to_rows(const Eigen::MatrixXd& X) {
  oracle::Matrix m(static_cast<std::size_t>(X.rows()), std::vector<double>(static_cast<std::size_t>(X.cols())));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = X(i, j);
  return m;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::EmptyInput;
}

}  // namespace

TEST_CASE("intercept-only regression") {
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 10;
  const auto fit = fit_ols(Eigen::MatrixXd::Ones(5, 1), y);
  CHECK(fit.coefficients(0) == Approx(4.0).epsilon(1e-14));
  CHECK(fit.r_squared == 0.0);
  CHECK(fit.labels == std::vector<std::string>{"x0"});
}

TEST_CASE("exact linear relation") {
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i * 0.7 - 1.0;
    y(i) = 3.0 + 2.0 * X(i, 1);
  }
  const auto fit = fit_ols(X, y, {"const", "x"});
  CHECK(fit.coefficient("const") == Approx(3.0).margin(1e-12));
  CHECK(fit.coefficient("x") == Approx(2.0).margin(1e-12));
  CHECK(fit.r_squared == Approx(1.0).margin(1e-12));
  CHECK(fit.rmse == Approx(0.0).margin(1e-12));
  CHECK(code_of([&] { fit.index_of("nope"); }) == ErrorCode::UnknownLabel);
}

TEST_CASE("fit statistics against direct formulas") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  const int n = 40, k = 4;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    for (int j = 1; j < k; ++j) X(i, j) = z(rng);
    y(i) = 1 + X(i, 1) - 2 * X(i, 2) + z(rng);
  }
  const auto fit = fit_ols(X, y);
  const Eigen::VectorXd e = y - X * fit.coefficients;
  CHECK((fit.residuals - e).cwiseAbs().maxCoeff() < 1e-12);
  const double ssr = e.squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  CHECK(fit.r_squared == Approx(1 - ssr / sst).epsilon(1e-12));
  CHECK(fit.adj_r_squared == Approx(1 - (1 - fit.r_squared) * (n - 1.0) / (n - k)).epsilon(1e-12));
  CHECK(fit.rmse == Approx(std::sqrt(ssr / (n - k))).epsilon(1e-12));
  const Eigen::MatrixXd inv = (X.transpose() * X).inverse();
  CHECK((fit.xtx_inverse - inv).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.classical_se()(1) == Approx(fit.rmse * std::sqrt(inv(1, 1))).epsilon(1e-10));
}

TEST_CASE("OLS matches the normal-equations oracle on random instances") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> z;
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 1 + static_cast<int>(rng() % 10);
    const int n = k + 1 + static_cast<int>(rng() % (200 - k));
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (int j = 1; j < k; ++j) X(i, j) = z(rng) * (1 + j);
      y(i) = z(rng) * 3 + X.row(i).sum();
    }
    const auto fit = fit_ols(X, y);
    const auto b = oracle::ols_normal_equations(to_rows(X), to_vec(y));
    REQUIRE(b.has_value());
    for (int j = 0; j < k; ++j)
      CHECK(std::abs(fit.coefficients(j) - (*b)[static_cast<std::size_t>(j)]) <=
            1e-8 * std::max(1.0, std::abs((*b)[static_cast<std::size_t>(j)])));
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("rank deficiency is detected and names the dependent column") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 50; ++rep) {
    const int k = 3 + rep % 6, n = 30 + rep;
    Eigen::MatrixXd X(n, k);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1;
      for (int j = 1; j < k; ++j) X(i, j) = z(rng);
    }
    const int dup = 1 + rep % (k - 1);
    const int src = rep % dup;
    X.col(dup) = X.col(src) * 2.5 + X.col(0) * static_cast<double>(rep % 2);
    Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(n, [&] { return z(rng); });
    try {
      fit_ols(X, y);
      FAIL("rank deficiency not detected");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
      CHECK(std::string(e.what()).find("x" + std::to_string(dup)) != std::string::npos);
    }
  }
}

TEST_CASE("fit_ols argument errors") {
  CHECK(code_of([] { fit_ols(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2)); }) == ErrorCode::TooFewRows);
  CHECK(code_of([] { fit_ols(Eigen::MatrixXd::Ones(4, 1), Eigen::VectorXd::Ones(3)); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("CR1 sandwich on 6 observations in 2 clusters") {
  Eigen::MatrixXd X(6, 2);
  X << 1, 0.5, 1, 1.5, 1, -0.3, 1, 2.0, 1, 0.1, 1, -1.2;
  Eigen::VectorXd y(6);
  y << 1.0, 2.2, 0.4, 3.1, 0.9, -0.5;
  const std::vector<std::string> g{"b", "a", "b", "a", "b", "a"};
  const auto fit = fit_ols(X, y);
  const auto cov = cluster_robust_cov(fit, X, g);
  const auto ref = oracle::cr1_sandwich(to_rows(X), to_vec(fit.residuals), g);
  CHECK(cov.n_clusters == 2);
  CHECK(cov.correction == Approx(2.0 * 5.0 / 4.0));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(cov.matrix(r, c) == Approx(ref[r][c]).epsilon(1e-12));
}

TEST_CASE("singleton clusters reduce to scaled HC0") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  const int n = 25, k = 3;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    X(i, 1) = z(rng);
    X(i, 2) = z(rng);
    y(i) = z(rng) * (1 + std::abs(X(i, 1)));
    ids.push_back("c" + std::to_string(i));
  }
  const auto fit = fit_ols(X, y);
  const auto cov = cluster_robust_cov(fit, X, ids);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < n; ++i) meat += X.row(i).transpose() * X.row(i) * fit.residuals(i) * fit.residuals(i);
  const Eigen::MatrixXd hc0 = fit.xtx_inverse * meat * fit.xtx_inverse;
  const double c = (n / (n - 1.0)) * ((n - 1.0) / (n - k));
  CHECK((cov.matrix - c * hc0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cluster covariance ignores row order and id names") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  const int n = 30;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  std::vector<std::string> ids, renamed;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    X(i, 1) = z(rng);
    y(i) = z(rng);
    ids.push_back(std::to_string(i % 4));
    renamed.push_back("zz" + std::to_string(3 - i % 4));
  }
  const auto fit = fit_ols(X, y);
  const auto a = cluster_robust_cov(fit, X, ids);
  const auto b = cluster_robust_cov(fit, X, renamed);
  CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + n, rng);
  const Eigen::MatrixXd Xp = perm * X;
  const Eigen::VectorXd yp = perm * y;
  std::vector<std::string> idp(n);
  for (int i = 0; i < n; ++i) idp[perm.indices()(i)] = ids[i];
  const auto fitp = fit_ols(Xp, yp);
  const auto c = cluster_robust_cov(fitp, Xp, idp);
  CHECK((a.matrix - c.matrix).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single cluster is rejected") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  const auto fit = fit_ols(X, y);
  const std::vector<std::string> ids(4, "one");
  CHECK(code_of([&] { cluster_robust_cov(fit, X, ids); }) == ErrorCode::SingleCluster);
}

TEST_CASE("Wald test identities") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  const int n = 200;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1;
    X(i, 1) = z(rng);
    X(i, 2) = z(rng);
    y(i) = 0.3 * X(i, 1) + z(rng);
    ids.push_back(std::to_string(i % 20));
  }
  auto fit = fit_ols(X, y, {"const", "a", "b"});
  const auto cov = cluster_robust_cov(fit, X, ids);

  const std::vector<std::string> one{"a"};
  const auto w = wald_test(fit, cov, one);
  const double b = fit.coefficient("a");
  CHECK(w.statistic == Approx(b * b / cov.matrix(1, 1)).epsilon(1e-12));
  CHECK(w.df1 == 1);
  CHECK(w.df2 == 19);
  CHECK(w.p_value == Approx(f_upper_tail(w.statistic, 1, 19)).epsilon(1e-14));

  const std::vector<std::string> two{"a", "b"};
  const auto w2 = wald_test(fit, cov, two);
  const auto w2r = wald_test_reduced_rank(fit, cov, two);
  CHECK(w2.df1 == 2);
  CHECK(w2r.df1 == 2);
  CHECK(w2r.statistic == Approx(w2.statistic).epsilon(1e-9));

  fit.coefficients(1) = 0.0;
  const auto w0 = wald_test(fit, cov, one);
  CHECK(w0.wald == 0.0);
  CHECK(w0.p_value == 1.0);

  const std::vector<std::string> none;
  CHECK(code_of([&] { wald_test(fit, cov, none); }) == ErrorCode::EmptyInput);
  const std::vector<std::string> bad{"zzz"};
  CHECK(code_of([&] { wald_test(fit, cov, bad); }) == ErrorCode::UnknownLabel);
}

TEST_CASE("singular covariance block") {
  auto fit = fit_ols(Eigen::MatrixXd::Identity(3, 2) + Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Ones(3),
                     {"a", "b"});
  ClusterRobustCov cov;
  cov.matrix = Eigen::MatrixXd::Ones(2, 2);
  cov.n_clusters = 5;
  const std::vector<std::string> both{"a", "b"};
  CHECK(code_of([&] { wald_test(fit, cov, both); }) == ErrorCode::SingularSubmatrix);
  fit.coefficients << 1.0, 1.0;
  const auto r = wald_test_reduced_rank(fit, cov, both);
  CHECK(r.df1 == 1);
  CHECK(r.wald == Approx(1.0).epsilon(1e-12));  // pinv(J) = J / 4
}

TEST_CASE("F upper tail reference values") {
  CHECK(f_upper_tail(0.0, 3, 10) == 1.0);
  CHECK(f_upper_tail(4.964602743, 1, 10) == Approx(0.05).epsilon(1e-6));
  CHECK(f_upper_tail(3.708264819, 3, 10) == Approx(0.05).epsilon(1e-6));
}

TEST_CASE("correlation examples") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(pearson_corr(x, x) == Approx(1.0).epsilon(1e-15));
  CHECK(spearman_corr(x, x) == Approx(1.0).epsilon(1e-15));
  CHECK(spearman_corr(x, rev) == Approx(-1.0).epsilon(1e-15));
  CHECK(code_of([&] { pearson_corr(x, std::vector<double>{1, 1, 1, 1, 1}); }) == ErrorCode::ZeroVariance);
  CHECK(code_of([&] { pearson_corr(x, std::vector<double>{1, 2}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([&] { pearson_corr(std::vector<double>{1}, std::vector<double>{1}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("correlations match the direct oracle") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> z;
  std::vector<double> x(1000), y(1000);
  for (int i = 0; i < 1000; ++i) {
    x[i] = std::round(z(rng) * 20) / 20;  // ties on purpose
    y[i] = 0.6 * x[i] + 0.8 * z(rng);
  }
  CHECK(std::abs(pearson_corr(x, y) - oracle::pearson(x, y)) < 1e-12);
  CHECK(std::abs(spearman_corr(x, y) - oracle::spearman(x, y)) < 1e-12);
  const auto r = average_ranks(x);
  const auto o = oracle::mid_ranks(x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(r[i] == o[i]);
}

TEST_CASE("competition ranking") {
  CHECK(rank_competition(std::vector<double>{0.5, 0.2, -0.1}) == std::vector<std::size_t>{1, 2, 3});
  CHECK(rank_competition(std::vector<double>{0.5, 0.5, 0.1}) == std::vector<std::size_t>{1, 1, 3});
  CHECK(rank_competition(std::vector<double>{2, 2, 2}) == std::vector<std::size_t>{1, 1, 1});
  std::mt19937_64 rng(4);
  std::vector<double> v(300);
  for (auto& s : v) s = static_cast<double>(rng() % 40);
  CHECK(rank_competition(v) == oracle::competition_ranks(v));
  CHECK(code_of([] { rank_competition(std::vector<double>{}); }) == ErrorCode::EmptyInput);
}
