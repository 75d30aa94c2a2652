#pragma once

// Preconditioners for the singular saddle-point system:
//
//   constraint        M   = [ P  B^T ; -B  0 ]           (singular, applied via M^dagger)
//   block diagonal    M_b = [ P  0   ;  0  B P^-1 B^T ]  (singular, applied via M_b^dagger)
//   block triangular  M_t = [ P  B^T ;  0  (h^2/nu) I ]  (nonsingular, applied via M_t^-1)
//
// with P = omega H or P = (1/omega)(I + omega L_s)(I + omega U_s).

#include <memory>
#include <optional>
#include <string>

#include "saddlekit/error.hpp"
#include "saddlekit/linalg.hpp"
#include "saddlekit/problem.hpp"

namespace saddlekit {

enum class PKind { symmetric_scaled, triangular_split, custom };
enum class Family { constraint, block_diagonal, block_triangular };

std::string to_string(PKind kind);
std::string to_string(Family family);

struct PChoice {
    PKind kind = PKind::symmetric_scaled;
    double omega = 1.0;
    Matrix custom_p;  ///< used only for PKind::custom

    static PChoice symmetric_scaled(double omega) { return {PKind::symmetric_scaled, omega, {}}; }
    static PChoice triangular_split(double omega) { return {PKind::triangular_split, omega, {}}; }
    static PChoice custom(Matrix p) { return {PKind::custom, 1.0, std::move(p)}; }
};

struct PreconditionerOptions {
    /// Relative truncation for E^dagger.
    double rank_tol = kDefaultRankTol;
    /// Truncate E^dagger to exactly numerical_rank(B) singular values instead.
    bool rank_from_b = false;
    /// ||L_s||_2 if already known; avoids recomputing it for every omega.
    std::optional<double> ls_norm;
};

/// Raised when omega >= 1/||L_s||_2 for the triangular-split P, which is then
/// not positive definite.
class PositiveDefinitenessViolation : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Immutable once built; apply() is const and safe to call concurrently.
class Preconditioner {
public:
    static Preconditioner build(const SaddleSystem& system, Family family, const PChoice& choice,
                                const PreconditionerOptions& options = {});

    Family family() const { return family_; }
    const PChoice& choice() const { return choice_; }
    Index n() const { return n_; }
    Index m() const { return m_; }

    /// M^dagger r for the singular families, M_t^-1 r for the block-triangular one.
    Vector apply(const Vector& r) const;
    /// Transpose of the operator applied by apply().
    Vector apply_transpose(const Vector& r) const;

    Vector solve_p(const Vector& r) const;
    Vector solve_p_transpose(const Vector& r) const;

    /// Dense P.
    Matrix P() const;
    /// Dense P^-1 (n solves).
    Matrix P_inverse() const;
    /// E = B P^-1 B^T.
    const Matrix& E() const { return e_; }
    /// E^dagger; empty for the block-triangular family.
    const Matrix& E_pinv() const { return e_pinv_; }
    /// P^-1 B^T.
    const Matrix& P_inv_Bt() const { return p_inv_bt_; }
    double h_sq_over_nu() const { return h_sq_over_nu_; }

    /// Explicit (n+m) x (n+m) matrix M, M_b or M_t.
    Matrix assemble() const;

private:
    struct PSolver;

    Preconditioner() = default;

    Family family_ = Family::constraint;
    PChoice choice_;
    Index n_ = 0, m_ = 0;
    std::shared_ptr<const PSolver> p_solver_;
    SparseMatrix b_;
    Matrix e_, e_pinv_, p_inv_bt_;
    double h_sq_over_nu_ = 1.0;
};

}  // namespace saddlekit
