#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "partforest/error.hpp"
#include "partforest/gp.hpp"
#include "partforest/rng.hpp"

using namespace partforest;

namespace {

Eigen::MatrixXd random_inputs(int n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, kPose2dDim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < kPose2dDim; ++j) x(i, j) = scale * rng.gaussian();
    return x;
}

// Smooth nonlinear target over the first few input coordinates.
Eigen::VectorXd smooth_targets(const Eigen::MatrixXd& x, std::uint64_t seed,
                               double noise_sigma) {
    Rng rng(seed);
    Eigen::VectorXd y(x.rows());
    for (int i = 0; i < x.rows(); ++i)
        y(i) = std::sin(x(i, 0)) + 0.5 * std::cos(1.3 * x(i, 1)) + 0.2 * x(i, 2) +
               noise_sigma * rng.gaussian();
    return y;
}

}  // namespace

TEST_CASE("se_kernel basics") {
    const SeHyperparams h = SeHyperparams::from_values(2.5, 3.0, 0.1);
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(kPose2dDim);
    Eigen::RowVectorXd y = x;
    CHECK(se_kernel(x, y, h) == doctest::Approx(2.5));

    y(0) = 3.0 * std::sqrt(2.0);  // |x-y| = l*sqrt(2)
    const SeHyperparams unit = SeHyperparams::from_values(1.0, 3.0, 0.1);
    CHECK(se_kernel(x, y, unit) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    const SeHyperparams wide = SeHyperparams::from_values(2.5, 1e8, 0.1);
    y.setConstant(5.0);
    CHECK(se_kernel(x, y, wide) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("kernel_matrix: single point and duplicated rows") {
    const SeHyperparams h = SeHyperparams::from_values(2.0, 1.5, 0.3);
    Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, kPose2dDim);
    const KernelMatrix km = kernel_matrix(one, h);
    CHECK(km.k(0, 0) == doctest::Approx(2.3));
    CHECK(km.chol(0, 0) == doctest::Approx(std::sqrt(2.3)));

    Eigen::MatrixXd dup(3, kPose2dDim);
    dup.row(0).setConstant(1.0);
    dup.row(1).setConstant(1.0);
    dup.row(2).setConstant(1.0);
    CHECK_NOTHROW(kernel_matrix(dup, h));
}

TEST_CASE("kernel_matrix cholesky reconstructs the matrix") {
    const Eigen::MatrixXd x = random_inputs(5, 3);
    const SeHyperparams h = SeHyperparams::from_values(1.2, 2.0, 0.05);
    const KernelMatrix km = kernel_matrix(x, h);
    const Eigen::MatrixXd recon = km.chol * km.chol.transpose();
    CHECK((recon - km.k).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("log marginal likelihood: single zero observation") {
    const SeHyperparams h = SeHyperparams::from_values(1.7, 2.0, 0.4);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, kPose2dDim);
    Eigen::VectorXd y(1);
    y << 0.0;
    const LogMarginal lml = log_marginal_likelihood(x, y, h);
    CHECK(lml.value ==
          doctest::Approx(-0.5 * std::log(2.1) - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log marginal gradients match central finite differences") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Eigen::MatrixXd x = random_inputs(8, seed);
        const Eigen::VectorXd y0 = smooth_targets(x, seed + 100, 0.1);
        const Eigen::VectorXd y = y0.array() - y0.mean();
        Rng rng(seed + 200);
        const SeHyperparams h = SeHyperparams::from_values(
            std::exp(rng.uniform(-1, 1)), std::exp(rng.uniform(-0.5, 1.5)),
            std::exp(rng.uniform(-3, -1)));

        const LogMarginal lml = log_marginal_likelihood(x, y, h);
        const Eigen::Vector3d fd = oracle::lml_fd_gradient(x, y, h);
        for (int i = 0; i < 3; ++i)
            CHECK(lml.grad(i) == doctest::Approx(fd(i)).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("scaling targets and variances shifts the likelihood by -n log c") {
    const Eigen::MatrixXd x = random_inputs(10, 5);
    Eigen::VectorXd y = smooth_targets(x, 6, 0.05);
    y.array() -= y.mean();
    const double sf2 = 1.3, len = 2.2, sn2 = 0.07, c = 3.5;
    const double a = log_marginal_likelihood(x, y, SeHyperparams::from_values(sf2, len, sn2)).value;
    const double b = log_marginal_likelihood(
                         x, (c * y).eval(),
                         SeHyperparams::from_values(c * c * sf2, len, c * c * sn2)).value;
    CHECK(b == doctest::Approx(a - 10.0 * std::log(c)).epsilon(1e-10));
}

TEST_CASE("non-finite targets are rejected") {
    const Eigen::MatrixXd x = random_inputs(4, 9);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
    y(2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(log_marginal_likelihood(x, y, SeHyperparams::from_values(1, 1, 0.1)),
                    DataError);
}

TEST_CASE("optimize_hyperparams: stationary points stay put") {
    const Eigen::MatrixXd x = random_inputs(12, 10);
    Eigen::VectorXd y = smooth_targets(x, 11, 0.1);
    y.array() -= y.mean();
    SeHyperparams h = SeHyperparams::from_values(std::exp(0.3), std::exp(0.5), 0.05);
    const SeHyperparams opt = optimize_hyperparams(x, y, h);
    // rerunning from the optimum must not move
    const SeHyperparams again = optimize_hyperparams(x, y, opt);
    CHECK(again.log_signal_variance == doctest::Approx(opt.log_signal_variance).epsilon(1e-6));
    CHECK(again.log_length_scale == doctest::Approx(opt.log_length_scale).epsilon(1e-6));
    CHECK(again.log_noise_variance == doctest::Approx(opt.log_noise_variance).epsilon(1e-6));
    // and the optimum dominates the start
    CHECK(log_marginal_likelihood(x, y, opt).value >=
          log_marginal_likelihood(x, y, h).value - 1e-12);
}

TEST_CASE("optimize_hyperparams recovers generating hyperparameters") {
    // draw a function from a known GP and refit
    const double true_sf2 = 2.0, true_len = 2.5, true_sn2 = 0.01;
    const SeHyperparams truth = SeHyperparams::from_values(true_sf2, true_len, true_sn2);
    const Eigen::MatrixXd x = random_inputs(64, 21, 1.2);
    const KernelMatrix km = kernel_matrix(x, truth);
    Rng rng(22);
    Eigen::VectorXd z(64);
    for (int i = 0; i < 64; ++i) z(i) = rng.gaussian();
    Eigen::VectorXd y = km.chol * z;
    y.array() -= y.mean();

    const SeHyperparams init = SeHyperparams::from_values(1.0, 1.0, 0.1);
    const SeHyperparams fit = optimize_hyperparams(x, y, init);
    CHECK(std::abs(fit.log_signal_variance - std::log(true_sf2)) < 0.5);
    CHECK(std::abs(fit.log_length_scale - std::log(true_len)) < 0.5);
    // noise is weakly identified at n=64; just require the fit to dominate
    CHECK(log_marginal_likelihood(x, y, fit).value >=
          log_marginal_likelihood(x, y, truth).value - 0.5);
}

TEST_CASE("gp_predict interpolates training points as noise vanishes") {
    const Eigen::MatrixXd x = random_inputs(10, 31);
    const Eigen::VectorXd y = smooth_targets(x, 32, 0.0);
    const GpModel m = train_gp_fixed(x, y, SeHyperparams::from_values(1.5, 2.0, 1e-8));
    for (int i = 0; i < 10; ++i) {
        const auto [mean, var] = gp_predict(m, x.row(i));
        CHECK(mean == doctest::Approx(y(i)).epsilon(1e-6));
        CHECK(var > 0.0);
    }
}

TEST_CASE("gp_predict reverts to the prior far from data") {
    const Eigen::MatrixXd x = random_inputs(10, 41);
    const Eigen::VectorXd y = smooth_targets(x, 42, 0.05);
    const SeHyperparams h = SeHyperparams::from_values(1.5, 1.0, 0.1);
    const GpModel m = train_gp_fixed(x, y, h);
    Eigen::RowVectorXd far = Eigen::RowVectorXd::Constant(kPose2dDim, 500.0);
    const auto [mean, var] = gp_predict(m, far);
    CHECK(mean == doctest::Approx(y.mean()).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.5 + 0.1).epsilon(1e-9));
}

TEST_CASE("gp_predict matches the dense linear-algebra oracle") {
    const Eigen::MatrixXd x = random_inputs(3, 51);
    const Eigen::VectorXd y = smooth_targets(x, 52, 0.02);
    const SeHyperparams h = SeHyperparams::from_values(1.1, 1.7, 0.05);
    const GpModel m = train_gp_fixed(x, y, h);
    Rng rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::RowVectorXd q(kPose2dDim);
        for (int j = 0; j < kPose2dDim; ++j) q(j) = rng.gaussian();
        const auto [mean, var] = gp_predict(m, q);
        const auto dense = oracle::dense_gp_predict(x, y, h, q);
        CHECK(mean == doctest::Approx(dense.mean).epsilon(1e-9));
        CHECK(var == doctest::Approx(dense.variance).epsilon(1e-9));
    }
}

TEST_CASE("predictive variance is positive and bounded by the prior") {
    const Eigen::MatrixXd x = random_inputs(14, 61);
    const Eigen::VectorXd y = smooth_targets(x, 62, 0.05);
    const GpModel m = train_gp(x, y, true);
    Rng rng(63);
    const double bound = m.hyper.signal_variance() + m.hyper.noise_variance() + 1e-9;
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::RowVectorXd q(kPose2dDim);
        for (int j = 0; j < kPose2dDim; ++j) q(j) = 2.0 * rng.gaussian();
        const auto [mean, var] = gp_predict(m, q);
        CHECK(var > 0.0);
        CHECK(var <= bound);
        CHECK(std::isfinite(mean));
    }
}

TEST_CASE("adding a duplicate training point never raises predictive variance") {
    const Eigen::MatrixXd x = random_inputs(9, 71);
    const Eigen::VectorXd y = smooth_targets(x, 72, 0.05);
    const SeHyperparams h = SeHyperparams::from_values(1.4, 1.9, 0.08);

    Eigen::MatrixXd x2(10, kPose2dDim);
    x2.topRows(9) = x;
    x2.row(9) = x.row(4);
    Eigen::VectorXd y2(10);
    y2.head(9) = y;
    y2(9) = y(4);

    // freeze centering by comparing through the dense oracle on raw data
    Rng rng(73);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::RowVectorXd q(kPose2dDim);
        for (int j = 0; j < kPose2dDim; ++j) q(j) = rng.gaussian();
        const auto small = oracle::dense_gp_predict(x, y, h, q);
        const auto big = oracle::dense_gp_predict(x2, y2, h, q);
        CHECK(big.variance <= small.variance + 1e-9);
    }
}

TEST_CASE("gaussian conditioning consistency: n-point posterior via n-1 points") {
    // posterior with n points == (n-1)-point posterior further conditioned on
    // the held-out noisy observation
    const int n = 7;
    const Eigen::MatrixXd x_raw = random_inputs(n, 81);
    const Eigen::VectorXd y_raw = smooth_targets(x_raw, 82, 0.03);
    const SeHyperparams h = SeHyperparams::from_values(1.3, 2.1, 0.07);

    // center once, by hand, so both routes see identical data
    const Eigen::RowVectorXd mean_in = x_raw.colwise().mean();
    const Eigen::MatrixXd x = x_raw.rowwise() - mean_in;
    const Eigen::VectorXd y = y_raw.array() - y_raw.mean();

    const Eigen::MatrixXd xs = x.topRows(n - 1);
    const Eigen::VectorXd ys = y.head(n - 1);
    const Eigen::RowVectorXd xn = x.row(n - 1);
    const double yn = y(n - 1);

    Rng rng(83);
    for (int trial = 0; trial < 8; ++trial) {
        Eigen::RowVectorXd q(kPose2dDim);
        for (int j = 0; j < kPose2dDim; ++j) q(j) = rng.gaussian();

        // full posterior (centered data, no extra centering in the oracle)
        Eigen::MatrixXd kf(n, n);
        Eigen::VectorXd kq(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) kf(i, j) = se_kernel(x.row(i), x.row(j), h);
            kf(i, i) += h.noise_variance();
            kq(i) = se_kernel(q, x.row(i), h);
        }
        const Eigen::VectorXd alpha = kf.fullPivLu().solve(y);
        const double full_mean = kq.dot(alpha);

        // small posterior at q and xn, plus cross-covariance
        Eigen::MatrixXd ks(n - 1, n - 1);
        Eigen::VectorXd kq_s(n - 1), kn_s(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            for (int j = 0; j < n - 1; ++j) ks(i, j) = se_kernel(xs.row(i), xs.row(j), h);
            ks(i, i) += h.noise_variance();
            kq_s(i) = se_kernel(q, xs.row(i), h);
            kn_s(i) = se_kernel(xn, xs.row(i), h);
        }
        const Eigen::MatrixXd ks_inv = ks.fullPivLu().inverse();
        const double mean_q = kq_s.dot(ks_inv * ys);
        const double mean_n = kn_s.dot(ks_inv * ys);
        const double cov_qn = se_kernel(q, xn, h) - kq_s.dot(ks_inv * kn_s);
        const double var_n =
            se_kernel(xn, xn, h) - kn_s.dot(ks_inv * kn_s) + h.noise_variance();

        const double cond_mean = mean_q + cov_qn / var_n * (yn - mean_n);
        CHECK(cond_mean == doctest::Approx(full_mean).epsilon(1e-8));
    }
}

TEST_CASE("train_lifter basics: constant dims, permutation invariance, interpolation") {
    const int n = 16;
    Rng rng(91);
    Eigen::MatrixXd poses2d(n, kPose2dDim);
    Eigen::MatrixXd poses3d(n, kPose3dDim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < kPose2dDim; ++j) poses2d(i, j) = 10.0 * rng.gaussian();
        for (int j = 0; j < kPose3dDim; ++j)
            poses3d(i, j) = std::sin(0.05 * poses2d(i, j % kPose2dDim)) * 30.0;
    }
    poses3d.col(7).setConstant(123.5);  // constant output dimension

    const GpLifter lifter = train_lifter(poses2d, poses3d);
    std::vector<double> probe(kPose2dDim);
    for (int j = 0; j < kPose2dDim; ++j) probe[j] = 10.0 * rng.gaussian();
    const LiftResult lr = lift(lifter, probe);
    CHECK(lr.pose3d[7] == doctest::Approx(123.5).epsilon(1e-6));

    // training-set prediction error stays tiny on noise-free data
    for (int i = 0; i < 4; ++i) {
        std::vector<double> row(kPose2dDim);
        for (int j = 0; j < kPose2dDim; ++j) row[j] = poses2d(i, j);
        const LiftResult at_train = lift(lifter, row);
        for (int d = 0; d < kPose3dDim; ++d)
            CHECK(std::abs(at_train.pose3d[d] - poses3d(i, d)) < 1.0);
    }

    // permuting training rows changes nothing
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
    perm.setIdentity();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = (i * 7 + 3) % n;
    for (int i = 0; i < n; ++i) perm.indices()(i) = order[i];
    const GpLifter shuffled = train_lifter(perm * poses2d, perm * poses3d);
    const LiftResult lr2 = lift(shuffled, probe);
    for (int d = 0; d < kPose3dDim; ++d)
        CHECK(lr2.pose3d[d] == doctest::Approx(lr.pose3d[d]).epsilon(1e-6));
}

TEST_CASE("train_lifter input validation") {
    Eigen::MatrixXd bad2d(4, kPose2dDim), bad3d(4, kPose3dDim);
    bad2d.setZero();
    bad3d.setZero();
    CHECK_THROWS_AS(train_lifter(bad2d, bad3d), DataError);  // n < 8

    Eigen::MatrixXd wrong(10, 5);
    Eigen::MatrixXd ok3d(10, kPose3dDim);
    CHECK_THROWS_AS(train_lifter(wrong, ok3d), ShapeError);
}

TEST_CASE("lift validates the input length") {
    const Eigen::MatrixXd x = random_inputs(9, 95);
    Eigen::MatrixXd poses3d = Eigen::MatrixXd::Zero(9, kPose3dDim);
    GpLifter lifter;
    for (int d = 0; d < kPose3dDim; ++d) {
        lifter.dims.push_back(
            train_gp_fixed(x, poses3d.col(d), SeHyperparams::from_values(1, 1, 0.1)));
        lifter.output_means.push_back(0.0);
    }
    CHECK_THROWS_AS(lift(lifter, std::vector<double>(11, 0.0)), ShapeError);
}

TEST_CASE("lifter serialization round-trips predictions exactly") {
    const std::string dir = "test_gp_tmp";
    std::filesystem::create_directories(dir);
    const int n = 12;
    Rng rng(97);
    Eigen::MatrixXd poses2d(n, kPose2dDim);
    Eigen::MatrixXd poses3d(n, kPose3dDim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < kPose2dDim; ++j) poses2d(i, j) = 5.0 * rng.gaussian();
        for (int j = 0; j < kPose3dDim; ++j) poses3d(i, j) = 20.0 * rng.gaussian();
    }
    GpLifter lifter;
    for (int d = 0; d < kPose3dDim; ++d) {
        lifter.dims.push_back(train_gp_fixed(
            poses2d, poses3d.col(d), SeHyperparams::from_values(2.0, 3.0, 0.2)));
        lifter.output_means.push_back(lifter.dims.back().targets_mean);
    }
    save_lifter(lifter, dir + "/lifter.gpl");
    const GpLifter back = load_lifter(dir + "/lifter.gpl");

    std::vector<double> probe(kPose2dDim);
    for (int j = 0; j < kPose2dDim; ++j) probe[j] = rng.gaussian();
    const LiftResult a = lift(lifter, probe);
    const LiftResult b = lift(back, probe);
    CHECK(a.pose3d == b.pose3d);
    CHECK(a.variance == b.variance);
    std::filesystem::remove_all(dir);
}
