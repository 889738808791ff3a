#include "partforest/gp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "binary_io.hpp"
#include "partforest/error.hpp"
#include "partforest/log.hpp"

namespace partforest {

namespace {

// Log-parameter box keeping exp() finite and the objective bounded for
// degenerate (e.g. constant) targets.
constexpr double kLogBound = 16.0;

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = sq.replicate(1, x.rows()) + sq.transpose().replicate(x.rows(), 1) -
                         2.0 * x * x.transpose();
    return d2.cwiseMax(0.0);
}

Eigen::MatrixXd se_gram(const Eigen::MatrixXd& d2, const SeHyperparams& h) {
    const double sf2 = h.signal_variance();
    const double inv_2l2 = 0.5 / (h.length_scale() * h.length_scale());
    return sf2 * (-inv_2l2 * d2.array()).exp().matrix();
}

struct Factorization {
    Eigen::MatrixXd k;
    Eigen::MatrixXd chol;
    double jitter = 0.0;
};

Factorization factorize(const Eigen::MatrixXd& d2, const SeHyperparams& h) {
    Factorization out;
    const double sf2 = h.signal_variance();
    Eigen::MatrixXd base = se_gram(d2, h);
    base.diagonal().array() += h.noise_variance();
    for (const double scale : {0.0, 1.0, 10.0, 100.0}) {
        out.jitter = 1e-8 * sf2 * scale;
        out.k = base;
        out.k.diagonal().array() += out.jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(out.k);
        if (llt.info() == Eigen::Success) {
            if (out.jitter > 0.0)
                log_debug("kernel_matrix: jitter ", out.jitter, " applied");
            out.chol = llt.matrixL();
            return out;
        }
    }
    throw NumericalError("kernel matrix not positive definite after max jitter");
}

LogMarginal lml_impl(const Eigen::MatrixXd& d2, const Eigen::VectorXd& y,
                     const SeHyperparams& h) {
    const long n = y.size();
    const Factorization f = factorize(d2, h);

    const Eigen::VectorXd alpha = f.chol.transpose().triangularView<Eigen::Upper>().solve(
        f.chol.triangularView<Eigen::Lower>().solve(y));

    LogMarginal out;
    out.value = -0.5 * y.dot(alpha) - f.chol.diagonal().array().log().sum() -
                0.5 * n * std::log(2.0 * M_PI);

    // Gradients via tr((alpha alpha^T - K^-1) dK/dtheta) / 2.
    Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(n, n);
    f.chol.triangularView<Eigen::Lower>().solveInPlace(kinv);
    f.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
    const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;

    const Eigen::MatrixXd kse = se_gram(d2, h);
    const double inv_l2 = 1.0 / (h.length_scale() * h.length_scale());
    const Eigen::MatrixXd dk_len = kse.cwiseProduct(d2) * inv_l2;
    const double sn2 = h.noise_variance();

    out.grad(0) = 0.5 * w.cwiseProduct(kse).sum();
    out.grad(1) = 0.5 * w.cwiseProduct(dk_len).sum();
    out.grad(2) = 0.5 * sn2 * w.trace();
    return out;
}

}  // namespace

SeHyperparams SeHyperparams::from_values(double sf2, double len, double sn2) {
    if (!(sf2 > 0.0 && len > 0.0 && sn2 > 0.0))
        throw ConfigError("SE hyperparameters must be strictly positive");
    SeHyperparams h;
    h.log_signal_variance = std::log(sf2);
    h.log_length_scale = std::log(len);
    h.log_noise_variance = std::log(sn2);
    return h;
}

double se_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x_prime,
                 const SeHyperparams& h) {
    const double d2 = (x - x_prime).squaredNorm();
    const double l = h.length_scale();
    return h.signal_variance() * std::exp(-d2 / (2.0 * l * l));
}

KernelMatrix kernel_matrix(const Eigen::MatrixXd& x, const SeHyperparams& h) {
    if (x.rows() < 1) throw ShapeError("kernel_matrix needs at least one row");
    const Factorization f = factorize(squared_distances(x), h);
    return KernelMatrix{f.k, f.chol, f.jitter};
}

LogMarginal log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const SeHyperparams& h) {
    if (x.rows() != y.size()) throw ShapeError("input/target count mismatch");
    if (!y.allFinite()) throw DataError("targets contain non-finite values");
    return lml_impl(squared_distances(x), y, h);
}

SeHyperparams optimize_hyperparams(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   SeHyperparams init) {
    const Eigen::MatrixXd d2 = squared_distances(x);
    Eigen::Vector3d theta(init.log_signal_variance, init.log_length_scale,
                          init.log_noise_variance);
    theta = theta.cwiseMax(-kLogBound).cwiseMin(kLogBound);

    auto params = [](const Eigen::Vector3d& t) {
        SeHyperparams h;
        h.log_signal_variance = t(0);
        h.log_length_scale = t(1);
        h.log_noise_variance = t(2);
        return h;
    };
    auto eval = [&](const Eigen::Vector3d& t, LogMarginal& out) {
        try {
            out = lml_impl(d2, y, params(t));
        } catch (const NumericalError&) {
            return false;
        }
        return std::isfinite(out.value);
    };

    LogMarginal cur;
    if (!eval(theta, cur))
        throw NumericalError("hyperparameter optimization: non-finite objective at init");

    double step = 1.0;
    for (int iter = 0; iter < 500; ++iter) {
        if (cur.grad.lpNorm<Eigen::Infinity>() < 1e-6) break;
        const double g2 = cur.grad.squaredNorm();
        bool accepted = false;
        for (double s = step; s > 1e-14; s *= 0.5) {
            const Eigen::Vector3d next =
                (theta + s * cur.grad).cwiseMax(-kLogBound).cwiseMin(kLogBound);
            if ((next - theta).norm() == 0.0) break;  // pinned at the box
            LogMarginal trial;
            if (!eval(next, trial)) continue;
            if (trial.value >= cur.value + 1e-4 * s * g2) {
                theta = next;
                cur = trial;
                step = std::min(s * 2.0, 64.0);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return params(theta);
}

namespace {

GpModel finish_model(const Eigen::MatrixXd& centered, const Eigen::RowVectorXd& mean_in,
                     const Eigen::VectorXd& centered_y, double mean_y,
                     const SeHyperparams& h) {
    GpModel m;
    m.inputs = centered;
    m.input_mean = mean_in;
    m.targets_mean = mean_y;
    m.hyper = h;
    const KernelMatrix km = kernel_matrix(centered, h);
    m.chol = km.chol;
    m.alpha = m.chol.transpose().triangularView<Eigen::Upper>().solve(
        m.chol.triangularView<Eigen::Lower>().solve(centered_y));
    return m;
}

SeHyperparams init_heuristic(const Eigen::MatrixXd& centered,
                             const Eigen::VectorXd& centered_y) {
    const long n = centered.rows();
    const double var_y =
        std::max(centered_y.squaredNorm() / static_cast<double>(n), 1e-10);

    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            dists.push_back((centered.row(i) - centered.row(j)).norm());
    double median = 1.0;
    if (!dists.empty()) {
        std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
        median = dists[dists.size() / 2];
        if (!(median > 0.0)) median = 1.0;
    }
    return SeHyperparams::from_values(var_y, median, 0.1 * var_y);
}

}  // namespace

GpModel train_gp(const Eigen::MatrixXd& inputs_raw, const Eigen::VectorXd& targets_raw,
                 bool optimize) {
    if (inputs_raw.rows() != targets_raw.size())
        throw ShapeError("input/target count mismatch");
    if (inputs_raw.rows() < 1) throw DataError("train_gp needs at least one sample");

    const Eigen::RowVectorXd mean_in = inputs_raw.colwise().mean();
    const Eigen::MatrixXd centered = inputs_raw.rowwise() - mean_in;
    const double mean_y = targets_raw.mean();
    const Eigen::VectorXd centered_y = targets_raw.array() - mean_y;

    SeHyperparams h = init_heuristic(centered, centered_y);
    if (optimize) h = optimize_hyperparams(centered, centered_y, h);
    return finish_model(centered, mean_in, centered_y, mean_y, h);
}

GpModel train_gp_fixed(const Eigen::MatrixXd& inputs_raw,
                       const Eigen::VectorXd& targets_raw, const SeHyperparams& h) {
    if (inputs_raw.rows() != targets_raw.size())
        throw ShapeError("input/target count mismatch");
    const Eigen::RowVectorXd mean_in = inputs_raw.colwise().mean();
    const Eigen::MatrixXd centered = inputs_raw.rowwise() - mean_in;
    const double mean_y = targets_raw.mean();
    const Eigen::VectorXd centered_y = targets_raw.array() - mean_y;
    return finish_model(centered, mean_in, centered_y, mean_y, h);
}

std::pair<double, double> gp_predict(const GpModel& m,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& x_raw) {
    const Eigen::RowVectorXd x = x_raw - m.input_mean;
    const long n = m.inputs.rows();
    Eigen::VectorXd k_star(n);
    for (long i = 0; i < n; ++i) k_star(i) = se_kernel(x, m.inputs.row(i), m.hyper);

    const double mean = k_star.dot(m.alpha) + m.targets_mean;
    const Eigen::VectorXd v = m.chol.triangularView<Eigen::Lower>().solve(k_star);
    const double variance =
        m.hyper.signal_variance() + m.hyper.noise_variance() - v.squaredNorm();
    return {mean, variance};
}

GpLifter train_lifter(const Eigen::MatrixXd& poses2d, const Eigen::MatrixXd& poses3d) {
    if (poses2d.cols() != kPose2dDim || poses3d.cols() != kPose3dDim)
        throw ShapeError("train_lifter expects 26-dim inputs and 60-dim outputs");
    if (poses2d.rows() != poses3d.rows()) throw ShapeError("row count mismatch");
    if (poses2d.rows() < 8) throw DataError("train_lifter needs at least 8 samples");

    // Rank check only as a diagnostic: the jitter path absorbs degeneracy.
    const Eigen::RowVectorXd mean_in = poses2d.colwise().mean();
    const Eigen::MatrixXd centered = poses2d.rowwise() - mean_in;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered);
    if (qr.rank() < std::min<long>(centered.rows(), centered.cols()))
        log_info("train_lifter: rank-deficient inputs (rank ", qr.rank(),
                 "); relying on jitter");

    GpLifter lifter;
    lifter.dims.reserve(kPose3dDim);
    lifter.output_means.reserve(kPose3dDim);
    for (int d = 0; d < kPose3dDim; ++d) {
        lifter.dims.push_back(train_gp(poses2d, poses3d.col(d), true));
        lifter.output_means.push_back(lifter.dims.back().targets_mean);
        log_debug("train_lifter: dim ", d, " l=", lifter.dims.back().hyper.length_scale(),
                  " sf2=", lifter.dims.back().hyper.signal_variance(),
                  " sn2=", lifter.dims.back().hyper.noise_variance());
    }
    return lifter;
}

LiftResult lift(const GpLifter& lifter, const std::vector<double>& pose2d) {
    if (pose2d.size() != kPose2dDim)
        throw ShapeError("lift expects a 26-dim 2D pose");
    Eigen::RowVectorXd x(kPose2dDim);
    for (int i = 0; i < kPose2dDim; ++i) x(i) = pose2d[i];

    LiftResult out;
    out.pose3d.resize(kPose3dDim);
    out.variance.resize(kPose3dDim);
    for (int d = 0; d < kPose3dDim; ++d) {
        const auto [mean, var] = gp_predict(lifter.dims[d], x);
        out.pose3d[d] = mean;
        out.variance[d] = var;
    }
    return out;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {
constexpr char kLifterMagic[4] = {'G', 'P', 'L', '1'};
}

void save_lifter(const GpLifter& lifter, const std::string& path) {
    if (lifter.dims.size() != kPose3dDim) throw DataError("lifter is not fully trained");
    detail::BinaryWriter w(path);
    const auto n = static_cast<std::uint32_t>(lifter.dims[0].inputs.rows());
    w.bytes(kLifterMagic, 4);
    w.u32(n);
    w.u32(kPose2dDim);
    w.u32(kPose3dDim);
    w.bytes(lifter.dims[0].input_mean.data(), kPose2dDim * sizeof(double));
    w.bytes(lifter.dims[0].inputs.data(),
            static_cast<std::size_t>(n) * kPose2dDim * sizeof(double));
    for (const GpModel& m : lifter.dims) {
        w.f64(m.hyper.log_signal_variance);
        w.f64(m.hyper.log_length_scale);
        w.f64(m.hyper.log_noise_variance);
        w.f64(m.targets_mean);
        w.bytes(m.alpha.data(), n * sizeof(double));
        for (std::uint32_t c = 0; c < n; ++c)  // packed lower triangle by column
            w.bytes(m.chol.col(c).data() + c, (n - c) * sizeof(double));
    }
}

GpLifter load_lifter(const std::string& path) {
    detail::BinaryReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kLifterMagic, 4) != 0)
        throw FormatError("bad magic in lifter file " + path, 0);
    const std::uint32_t n = r.u32();
    if (r.u32() != kPose2dDim) throw FormatError("unexpected input dim in " + path, r.offset() - 4);
    if (r.u32() != kPose3dDim) throw FormatError("unexpected output dim in " + path, r.offset() - 4);
    if (n == 0 || n > (1u << 20)) throw FormatError("implausible sample count in " + path, 4);

    Eigen::RowVectorXd mean_in(kPose2dDim);
    r.bytes(mean_in.data(), kPose2dDim * sizeof(double));
    Eigen::MatrixXd inputs(n, kPose2dDim);
    r.bytes(inputs.data(), static_cast<std::size_t>(n) * kPose2dDim * sizeof(double));

    GpLifter lifter;
    lifter.dims.resize(kPose3dDim);
    for (int d = 0; d < kPose3dDim; ++d) {
        GpModel& m = lifter.dims[d];
        m.inputs = inputs;
        m.input_mean = mean_in;
        m.hyper.log_signal_variance = r.f64();
        m.hyper.log_length_scale = r.f64();
        m.hyper.log_noise_variance = r.f64();
        m.targets_mean = r.f64();
        m.alpha.resize(n);
        r.bytes(m.alpha.data(), n * sizeof(double));
        m.chol = Eigen::MatrixXd::Zero(n, n);
        for (std::uint32_t c = 0; c < n; ++c)
            r.bytes(m.chol.col(c).data() + c, (n - c) * sizeof(double));
        lifter.output_means.push_back(m.targets_mean);
    }
    return lifter;
}

}  // namespace partforest
