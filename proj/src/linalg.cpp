#include "saddlekit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "saddlekit/error.hpp"

namespace saddlekit {

namespace {

std::string dims(const Matrix& a) {
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void require_finite(const Matrix& a, const char* op) {
    if (!all_finite(a)) {
        throw InvalidArgument(std::string(op) + ": non-finite entry in " + dims(a) + " matrix");
    }
}

void require_square(const Matrix& a, const char* op) {
    if (a.rows() != a.cols()) {
        throw InvalidArgument(std::string(op) + ": expected a square matrix, got " + dims(a));
    }
}

void require_symmetric(const Matrix& a, double tol, const char* op) {
    require_square(a, op);
    if (asymmetry(a) > tol) {
        throw InvalidArgument(std::string(op) + ": matrix is not symmetric");
    }
}

// Eigen's BDCSVD has no convergence flag; a non-finite factor is the only
// observable sign of trouble.
template <class Svd>
void check_svd(const Svd& s, const Matrix& a) {
    if (!s.singularValues().allFinite()) {
        throw ConvergenceFailure("svd: iteration failed to converge for " + dims(a) + " matrix");
    }
}

Index rank_from_values(const Vector& sigma, double rank_tol) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    const double cut = rank_tol * sigma(0);
    Index r = 0;
    while (r < sigma.size() && sigma(r) > cut) ++r;
    return r;
}

Matrix pinv_from_factors(const SvdFactors& f, Index rank, Index rows, Index cols) {
    Matrix out = Matrix::Zero(cols, rows);
    if (rank == 0) return out;
    const Vector inv = f.singular_values.head(rank).cwiseInverse();
    out.noalias() = f.V.leftCols(rank) * inv.asDiagonal() * f.U.leftCols(rank).transpose();
    return out;
}

}  // namespace

bool all_finite(const Matrix& a) { return a.allFinite(); }

double asymmetry(const Matrix& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

SvdFactors svd(const Matrix& a, SvdMode mode) {
    require_finite(a, "svd");
    const unsigned opts = mode == SvdMode::full ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                                                : (Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::BDCSVD<Matrix> s(a, opts);
    check_svd(s, a);
    return {s.matrixU(), s.singularValues(), s.matrixV()};
}

Matrix pinv(const Matrix& a, double rank_tol) {
    if (!(rank_tol > 0.0 && rank_tol < 1.0)) {
        throw InvalidArgument("pinv: rank_tol must lie in (0, 1)");
    }
    const SvdFactors f = svd(a);
    return pinv_from_factors(f, rank_from_values(f.singular_values, rank_tol), a.rows(), a.cols());
}

Matrix pinv_truncated(const Matrix& a, Index rank) {
    const SvdFactors f = svd(a);
    if (rank < 0 || rank > f.singular_values.size()) {
        throw InvalidArgument("pinv_truncated: rank out of range");
    }
    // Never invert an exactly zero singular value.
    rank = std::min(rank, rank_from_values(f.singular_values, 1e-300));
    return pinv_from_factors(f, rank, a.rows(), a.cols());
}

Matrix cholesky(const Matrix& a) {
    require_finite(a, "cholesky");
    require_symmetric(a, 1e-12, "cholesky");
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("cholesky: matrix not positive definite");
    }
    return llt.matrixL();
}

Vector tri_solve(const Matrix& t, const Vector& b, Triangle side) {
    require_square(t, "tri_solve");
    if (t.rows() != b.size()) {
        throw InvalidArgument("tri_solve: right-hand side has length " + std::to_string(b.size()) +
                              ", matrix is " + dims(t));
    }
    for (Index i = 0; i < t.rows(); ++i) {
        if (t(i, i) == 0.0) {
            throw SingularMatrix("tri_solve: zero diagonal entry at row " + std::to_string(i));
        }
    }
    if (side == Triangle::lower) return t.triangularView<Eigen::Lower>().solve(b);
    return t.triangularView<Eigen::Upper>().solve(b);
}

std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
    require_square(a, "eigenvalues");
    require_finite(a, "eigenvalues");
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw ConvergenceFailure("eigenvalues: QR iteration cap exceeded for " + dims(a) + " matrix");
    }
    const Eigen::VectorXcd& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

double pseudospectral_radius(const std::vector<std::complex<double>>& spectrum, double one_tol) {
    double gamma = 0.0;
    for (const auto& lambda : spectrum) {
        if (std::abs(lambda - 1.0) > one_tol) gamma = std::max(gamma, std::abs(lambda));
    }
    return gamma;
}

double pseudospectral_radius(const Matrix& a, double one_tol) {
    return pseudospectral_radius(eigenvalues(a), one_tol);
}

double spectral_norm(const Matrix& a) {
    require_finite(a, "spectral_norm");
    if (a.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> s(a);
    check_svd(s, a);
    return s.singularValues()(0);
}

Index numerical_rank(const Matrix& a, double rank_tol) {
    require_finite(a, "numerical_rank");
    Eigen::BDCSVD<Matrix> s(a);
    check_svd(s, a);
    return rank_from_values(s.singularValues(), rank_tol);
}

Matrix null_space(const Matrix& a, double rank_tol) {
    const SvdFactors f = svd(a, SvdMode::full);
    const Index r = rank_from_values(f.singular_values, rank_tol);
    return f.V.rightCols(a.cols() - r);
}

namespace {

Matrix sym_power(const Matrix& a, double power, const char* op) {
    require_finite(a, op);
    require_symmetric(a, 1e-10, op);
    const Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) {
        throw ConvergenceFailure(std::string(op) + ": eigensolver failed for " + dims(a) + " matrix");
    }
    const Vector& lambda = es.eigenvalues();
    if (lambda.size() > 0 && lambda.minCoeff() <= 0.0) {
        throw NotPositiveDefinite(std::string(op) + ": matrix not positive definite");
    }
    const Vector scaled = lambda.array().pow(power).matrix();
    Matrix r = es.eigenvectors() * scaled.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (r + r.transpose());
}

}  // namespace

Matrix sym_inv_sqrt(const Matrix& a) { return sym_power(a, -0.5, "sym_inv_sqrt"); }

Matrix sym_sqrt(const Matrix& a) { return sym_power(a, 0.5, "sym_sqrt"); }

}  // namespace saddlekit
