#pragma once

// Singular saddle-point systems
//
//     A x = [ W   B^T ] [u]   [f]
//           [ -B   0  ] [v] = [g] = b
//
// with W nonsymmetric positive definite and B rank deficient, plus the
// generators that produce them.

#include <cstdint>
#include <filesystem>
#include <memory>

#include <Eigen/Sparse>

#include "saddlekit/linalg.hpp"

namespace saddlekit {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct ProblemMeta {
    int l = 0;          ///< grid count; 0 for synthetic systems
    double nu = 1.0;    ///< viscosity
    double h = 1.0;     ///< mesh size 1/l

    /// Scale of the pressure block in the block-triangular preconditioner.
    double h_sq_over_nu() const { return h * h / nu; }
};

/// Immutable saddle-point system. Copies share the underlying storage.
class SaddleSystem {
public:
    SaddleSystem(Matrix w, Matrix b, Vector f, Vector g, ProblemMeta meta = {});

    const Matrix& W() const { return data_->w; }
    const Matrix& B() const { return data_->b; }
    const Vector& f() const { return data_->f; }
    const Vector& g() const { return data_->g; }
    const ProblemMeta& meta() const { return data_->meta; }

    /// Sparse copies of W and B used for fast products.
    const SparseMatrix& W_sparse() const { return data_->w_sparse; }
    const SparseMatrix& B_sparse() const { return data_->b_sparse; }

    Index n() const { return data_->w.rows(); }
    Index m() const { return data_->b.rows(); }
    Index size() const { return n() + m(); }

    /// Stacked right-hand side (f; g).
    Vector rhs() const;
    /// Explicit (n+m) x (n+m) coefficient matrix.
    Matrix matrix() const;
    /// A * x.
    Vector apply(const Vector& x) const;
    /// A^T * x.
    Vector apply_transpose(const Vector& x) const;
    /// ||b - A x|| / ||b|| (0 when b = 0 and A x = 0).
    double relative_residual(const Vector& x) const;

    /// Same matrices, new stacked right-hand side.
    SaddleSystem with_rhs(const Vector& b) const;

private:
    struct Data {
        Matrix w, b;
        Vector f, g;
        ProblemMeta meta;
        SparseMatrix w_sparse, b_sparse;
    };
    std::shared_ptr<const Data> data_;
};

/// W = H + S with H symmetric, S skew, and S = L_s + U_s split into strict triangles.
struct Splitting {
    Matrix H;
    Matrix S;
    Matrix L_s;
    Matrix U_s;
};

Splitting split(const Matrix& w);

enum class RhsMode { manufactured, projected };

/// b = A x* for the given x*.
Vector manufactured_rhs(const SaddleSystem& system, const Vector& x_star);

/// Consistent right-hand side. Manufactured mode draws x* uniformly from
/// [-1, 1]^(n+m) with the given seed; projected mode orthogonally projects the
/// system's current (f; g) onto range(A).
Vector make_consistent_rhs(const SaddleSystem& system, RhsMode mode, std::uint64_t seed = 0);

/// Raw discretized load (f; g) of the leaky-lid cavity: lid data folded into f, g = 0.
Vector oseen_load(int l, double nu);

/// MAC discretization of the Oseen problem on the unit square, l x l cells.
/// The momentum rows use the unscaled five-point stencil (F = nu A + N with
/// integer Laplacian weights and h-scaled convection); B is the centred
/// divergence with entries +-1/h.
SaddleSystem build_oseen(int l, double nu, RhsMode mode = RhsMode::manufactured,
                         std::uint64_t seed = 0);

/// Small dense system with SPD-dominant W, rank(B) = rank_b < m <= n and a
/// manufactured consistent right-hand side.
SaddleSystem build_random_singular(Index n, Index m, Index rank_b, std::uint64_t seed);

/// Writes W.mtx, B.mtx, f.mtx, g.mtx and meta.json into `dir`.
void export_system(const SaddleSystem& system, const std::filesystem::path& dir);

}  // namespace saddlekit
