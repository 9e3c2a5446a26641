#pragma once

#include <functional>

#include <Eigen/Dense>

#include "styler/tensor.hpp"

namespace styler {

struct SymEig {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // orthonormal columns, vectors.col(i) pairs with values(i)
};

struct JacobiOptions {
    double relative_tolerance = 1e-10;
    int max_sweeps = 100;
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Throws ContractViolation when `a` is not symmetric to within
/// 1e-6·max|a|, InvalidInput on non-finite entries.
SymEig sym_eig(const Eigen::MatrixXd& a, JacobiOptions opts = {});

struct Moments {
    Eigen::VectorXd mean;  // per channel
    Eigen::MatrixXd cov;   // c×c, population normalization 1/(h·w)
};

/// Channel mean and covariance, treating the feature as c×(h·w) samples.
Moments covariance(const Tensor& f);

/// The feature as a c×(h·w) double matrix.
Eigen::MatrixXd as_matrix(const Tensor& f);
Tensor from_matrix(const Eigen::MatrixXd& m, int h, int w);

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient of `fn` at `x`. The perturbation actually
/// applied is measured after float rounding so that the quotient uses the
/// true step.
Tensor finite_diff_grad(const ScalarFn& fn, const Tensor& x, double eps);

}  // namespace styler
