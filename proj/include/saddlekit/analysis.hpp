#pragma once

// Dense spectral diagnostics for the GCP iteration: the convergence
// indicator gamma(X (P - W)), the index/null-space conditions on T = I - M^+ A,
// the omega bounds and the norm certificates behind them. All costs are O(N^3).

#include <string>

#include <json.hpp>

#include "saddlekit/linalg.hpp"
#include "saddlekit/precond.hpp"
#include "saddlekit/problem.hpp"

namespace saddlekit {

struct AnalysisOptions {
    double one_tol = kDefaultOneTol;
    /// Relative rank tolerance for null spaces and index checks. Looser than
    /// the pseudoinverse default because M^+ A carries rounding from E^+.
    double rank_tol = 1e-10;
    /// Largest allowed sine of a principal angle between null(A) and null(M^+ A).
    double angle_tol = 1e-8;
};

struct SpectralReport {
    double gamma_T = 0.0;
    /// gamma(X (P - W)); NaN unless the family is the constraint one.
    double gamma_XPW = 0.0;
    bool null_space_ok = false;
    bool index_one_ok = false;
    bool gamma_ok = false;
    /// -1 when the projection spectrum was not computed.
    Index projector_eig_ones = -1;
    Index projector_eig_zeros = -1;
    double omega_used = 0.0;
    /// Diagnostics behind the flags.
    Index null_dim_A = 0;
    Index null_dim_MA = 0;
    double null_max_sine = 0.0;
    Index rank_MA = 0;
    Index rank_MA_sq = 0;

    nlohmann::json to_json() const;
};

/// X = P^-1 - P^-1 B^T E^+ B P^-1 (constraint family only).
Matrix compute_X(const SaddleSystem& system, const Preconditioner& pc);

/// Dense M^+ A (or M_t^-1 A).
Matrix preconditioned_matrix(const SaddleSystem& system, const Preconditioner& pc);

/// gamma(X (P - W)); the GCP iteration converges iff this is below 1.
double gcp_convergence_indicator(const SaddleSystem& system, const Preconditioner& pc,
                                 const AnalysisOptions& options = {});

SpectralReport check_semiconvergence(const SaddleSystem& system, const Preconditioner& pc,
                            const AnalysisOptions& options = {});

struct ProjectionSpectrum {
    Index ones = 0;
    Index zeros = 0;
    double max_dev = 0.0;  ///< largest distance of an eigenvalue from {0, 1}
};

/// Eigenvalues of P^{1/2} X P^{1/2} for symmetric P = omega H.
ProjectionSpectrum projection_spectrum(const SaddleSystem& system, const Preconditioner& pc);

/// 1/2 (1 + rho^2), rho = ||H^-1/2 S H^-1/2||_2. Any omega above it makes P = omega H converge.
double omega_bound_symmetric(const Matrix& w);

/// Upper omega bound for the triangular-split P; 2/lambda_max(H) when L_s vanishes.
double omega_bound_triangular(const Matrix& w);

/// 1/||L_s||_2: the triangular-split P is positive definite iff omega is below it.
/// +inf when L_s = 0.
double pd_bound(const Matrix& w);

struct NormCertificates {
    double x_norm = 0.0;   ///< ||P_H^1/2 X P_H^1/2||_2, at most 1
    double pw_norm = 0.0;  ///< ||P_H^-1/2 (P - W) P_H^-1/2||_2, below 1 inside the bound
};

/// Requires a constraint-family triangular-split P with omega below omega_bound_triangular.
NormCertificates norm_certificates(const SaddleSystem& system, const Preconditioner& pc);

}  // namespace saddlekit
