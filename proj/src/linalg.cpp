#include "subrie/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace subrie {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& A)
{
    if (A.size() == 0) return Eigen::VectorXd();
    return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
}

int numeric_rank(const Eigen::MatrixXd& A, double rel_tol)
{
    Eigen::VectorXd s = singular_values(A);
    if (s.size() == 0 || s[0] == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rel_tol * s[0]) ++r;
    return r;
}

Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& r)
{
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(J).solve(r);
}

std::optional<std::vector<Rational>> solve_exact(RationalMatrix A, std::vector<Rational> b)
{
    const std::size_t rows = A.size();
    if (b.size() != rows) throw InputError("solve_exact: rhs size mismatch");
    const std::size_t cols = rows == 0 ? 0 : A.front().size();
    std::vector<std::size_t> pivot_col;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && A[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(A[piv], A[r]);
        std::swap(b[piv], b[r]);
        Rational inv = 1 / A[r][c];
        for (std::size_t k = c; k < cols; ++k) A[r][k] *= inv;
        b[r] *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r || A[i][c] == 0) continue;
            Rational f = A[i][c];
            for (std::size_t k = c; k < cols; ++k) A[i][k] -= f * A[r][k];
            b[i] -= f * b[r];
        }
        pivot_col.push_back(c);
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (b[i] != 0) return std::nullopt;
    std::vector<Rational> x(cols, Rational(0));
    for (std::size_t i = 0; i < r; ++i) x[pivot_col[i]] = b[i];
    return x;
}

RationalMatrix inverse_exact(const RationalMatrix& A)
{
    const std::size_t n = A.size();
    RationalMatrix M(n, std::vector<Rational>(2 * n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) {
        if (A[i].size() != n) throw InputError("inverse_exact: matrix not square");
        for (std::size_t j = 0; j < n; ++j) M[i][j] = A[i][j];
        M[i][n + i] = 1;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && M[piv][c] == 0) ++piv;
        if (piv == n) throw NumericalError("inverse_exact: singular matrix");
        std::swap(M[piv], M[c]);
        Rational inv = 1 / M[c][c];
        for (auto& v : M[c]) v *= inv;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || M[i][c] == 0) continue;
            Rational f = M[i][c];
            for (std::size_t k = 0; k < 2 * n; ++k) M[i][k] -= f * M[c][k];
        }
    }
    RationalMatrix out(n, std::vector<Rational>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i][j] = M[i][n + j];
    return out;
}

Eigen::MatrixXd to_double(const RationalMatrix& A)
{
    const auto rows = static_cast<Eigen::Index>(A.size());
    const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(A.front().size());
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            out(i, j) = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get_d();
    return out;
}

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter)
{
    const Eigen::Index n = A.cols();
    if (A.rows() != b.size()) throw InputError("nnls: dimension mismatch");
    if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 10);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.cwiseAbs().colwise().sum().maxCoeff() *
                       static_cast<double>(std::max(A.rows(), n));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);

    auto solve_passive = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
        Eigen::VectorXd sp = min_norm_solve(Ap, b);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[static_cast<Eigen::Index>(k)];
        return s;
    };

    int iter = 0;
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    while (iter < max_iter) {
        Eigen::Index t = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w[j] > best) {
                best = w[j];
                t = j;
            }
        if (t < 0) break;
        passive[static_cast<std::size_t>(t)] = true;
        Eigen::VectorXd s = solve_passive();
        while (true) {
            ++iter;
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - s[j]));
            if (!std::isfinite(alpha)) break;
            x += alpha * (s - x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x[j] = 0.0;
                }
            s = solve_passive();
            if (iter >= max_iter) break;
        }
        x = s;
        w = A.transpose() * (b - A * x);
    }
    return {x, (A * x - b).norm(), iter};
}

}  // namespace subrie
