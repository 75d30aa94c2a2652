#pragma once

// Dense linear algebra kernels used throughout saddlekit. All functions are
// pure: they take immutable inputs and return fresh values.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace saddlekit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Singular values at or below rank_tol * sigma_1 are treated as zero.
inline constexpr double kDefaultRankTol = 1e-12;
/// Eigenvalues within this distance of 1 are excluded from the pseudospectral radius.
inline constexpr double kDefaultOneTol = 1e-8;

enum class Triangle { lower, upper };
enum class SvdMode { thin, full };

/// A = U * diag(singular_values) * V^T, singular values nonincreasing.
struct SvdFactors {
    Matrix U;
    Vector singular_values;
    Matrix V;
};

SvdFactors svd(const Matrix& a, SvdMode mode = SvdMode::thin);

/// Moore-Penrose inverse with relative rank truncation.
Matrix pinv(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Moore-Penrose inverse of the best rank-`rank` approximation of `a`.
Matrix pinv_truncated(const Matrix& a, Index rank);

/// Lower-triangular L with L * L^T = a. Throws NotPositiveDefinite.
Matrix cholesky(const Matrix& a);

Vector tri_solve(const Matrix& t, const Vector& b, Triangle side);

/// Full spectrum (with multiplicity) from the real Schur form.
std::vector<std::complex<double>> eigenvalues(const Matrix& a);

/// max |lambda| over eigenvalues with |lambda - 1| > one_tol; 0 if none remain.
double pseudospectral_radius(const Matrix& a, double one_tol = kDefaultOneTol);
double pseudospectral_radius(const std::vector<std::complex<double>>& spectrum,
                             double one_tol = kDefaultOneTol);

double spectral_norm(const Matrix& a);

/// Count of singular values strictly above rank_tol * sigma_1.
Index numerical_rank(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Orthonormal basis (as columns) of null(a), from a full SVD.
Matrix null_space(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Symmetric R with R * a * R = I, for symmetric positive definite a.
Matrix sym_inv_sqrt(const Matrix& a);

/// Symmetric positive square root of a symmetric positive definite matrix.
Matrix sym_sqrt(const Matrix& a);

/// Relative asymmetry ||a - a^T||_max / ||a||_max (0 for the zero matrix).
double asymmetry(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace saddlekit
