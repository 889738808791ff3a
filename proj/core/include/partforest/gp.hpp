#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "partforest/skeleton.hpp"

namespace partforest {

// Squared-exponential kernel hyperparameters, held and optimized in log space
// so positivity is structural.
struct SeHyperparams {
    double log_signal_variance = 0.0;
    double log_length_scale = 0.0;
    double log_noise_variance = std::log(0.1);

    double signal_variance() const { return std::exp(log_signal_variance); }
    double length_scale() const { return std::exp(log_length_scale); }
    double noise_variance() const { return std::exp(log_noise_variance); }

    static SeHyperparams from_values(double sf2, double len, double sn2);
};

// sf2 * exp(-|x - x'|^2 / (2 l^2))
double se_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x_prime,
                 const SeHyperparams& h);

struct KernelMatrix {
    Eigen::MatrixXd k;     // K + sn2*I (+ jitter*I if escalation fired)
    Eigen::MatrixXd chol;  // lower triangular, chol * chol^T = k
    double jitter = 0.0;
};

// Cholesky with escalating jitter 1e-8*sf2*{1,10,100}; throws NumericalError
// if all levels fail.
KernelMatrix kernel_matrix(const Eigen::MatrixXd& x, const SeHyperparams& h);

struct LogMarginal {
    double value = 0.0;
    Eigen::Vector3d grad;  // d/d(log sf2, log l, log sn2)
};

// Marginal likelihood of centered targets via the Cholesky route, with
// analytic gradients for the three log hyperparameters.
LogMarginal log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const SeHyperparams& h);

// Gradient ascent with Armijo backtracking in log space; stops at gradient
// inf-norm < 1e-6 or 500 iterations. Deterministic.
SeHyperparams optimize_hyperparams(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   SeHyperparams init);

// One trained scalar-output GP over centered inputs and targets.
struct GpModel {
    Eigen::MatrixXd inputs;       // n x d, centered
    Eigen::RowVectorXd input_mean;
    double targets_mean = 0.0;
    Eigen::VectorXd alpha;        // (K + sn2 I)^-1 y'
    Eigen::MatrixXd chol;
    SeHyperparams hyper;
};

GpModel train_gp(const Eigen::MatrixXd& inputs_raw, const Eigen::VectorXd& targets_raw,
                 bool optimize = true);
GpModel train_gp_fixed(const Eigen::MatrixXd& inputs_raw,
                       const Eigen::VectorXd& targets_raw, const SeHyperparams& h);

// (mean, variance) at a raw (uncentered) query point.
std::pair<double, double> gp_predict(const GpModel& m,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& x_raw);

// 60 independent output GPs over a shared 26-dim input set.
struct GpLifter {
    std::vector<GpModel> dims;  // kPose3dDim models sharing inputs
    std::vector<double> output_means;
};

// Centers inputs and every output dimension, then optimizes each dimension's
// hyperparameters independently. Requires n >= 8.
GpLifter train_lifter(const Eigen::MatrixXd& poses2d, const Eigen::MatrixXd& poses3d);

struct LiftResult {
    std::vector<double> pose3d;    // kPose3dDim
    std::vector<double> variance;  // kPose3dDim
};

LiftResult lift(const GpLifter& lifter, const std::vector<double>& pose2d);

void save_lifter(const GpLifter& lifter, const std::string& path);
GpLifter load_lifter(const std::string& path);

}  // namespace partforest
