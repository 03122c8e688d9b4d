#ifndef SUBRIE_LINALG_HPP
#define SUBRIE_LINALG_HPP

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "subrie/symbolic.hpp"

namespace subrie {

using RationalMatrix = std::vector<std::vector<Rational>>;  // row-major

/// Number of singular values above rel_tol * sigma_max.
int numeric_rank(const Eigen::MatrixXd& A, double rel_tol);
Eigen::VectorXd singular_values(const Eigen::MatrixXd& A);

/// Minimum-norm least-squares solution of J x = r.
Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& r);

/// Exact Gauss-Jordan solve; free variables are set to zero. nullopt if inconsistent.
std::optional<std::vector<Rational>> solve_exact(RationalMatrix A, std::vector<Rational> b);
/// Throws NumericalError when A is singular.
RationalMatrix inverse_exact(const RationalMatrix& A);
Eigen::MatrixXd to_double(const RationalMatrix& A);

struct NnlsResult {
    Eigen::VectorXd x;
    double residual = 0.0;  // ||A x - b||
    int iterations = 0;
};

/// Lawson-Hanson active-set nonnegative least squares.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0);

}  // namespace subrie

#endif  // SUBRIE_LINALG_HPP
