#include "saddlekit/precond.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "saddlekit/error.hpp"

namespace saddlekit {

std::string to_string(PKind kind) {
    switch (kind) {
        case PKind::symmetric_scaled: return "symmetric_scaled";
        case PKind::triangular_split: return "triangular_split";
        case PKind::custom: return "custom";
    }
    return "?";
}

std::string to_string(Family family) {
    switch (family) {
        case Family::constraint: return "constraint";
        case Family::block_diagonal: return "block_diagonal";
        case Family::block_triangular: return "block_triangular";
    }
    return "?";
}

using ColSparse = Eigen::SparseMatrix<double>;

// Applies P^-1 and P^-T without ever forming P^-1.
struct Preconditioner::PSolver {
    PKind kind;
    double omega = 1.0;
    Matrix dense_p;
    // omega H
    Eigen::SimplicialLLT<ColSparse> llt;
    // I + omega L_s and I + omega U_s
    ColSparse lower, upper, lower_t, upper_t;
    // custom
    Eigen::PartialPivLU<Matrix> lu;

    Vector solve(const Vector& r) const {
        switch (kind) {
            case PKind::symmetric_scaled: return llt.solve(r);
            case PKind::triangular_split: {
                Vector t = lower.triangularView<Eigen::Lower>().solve(r);
                return omega * upper.triangularView<Eigen::Upper>().solve(t);
            }
            case PKind::custom: return lu.solve(r);
        }
        return {};
    }

    Vector solve_transpose(const Vector& r) const {
        switch (kind) {
            case PKind::symmetric_scaled: return llt.solve(r);
            case PKind::triangular_split: {
                Vector t = upper_t.triangularView<Eigen::Lower>().solve(r);
                return omega * lower_t.triangularView<Eigen::Upper>().solve(t);
            }
            case PKind::custom: return lu.transpose().solve(r);
        }
        return {};
    }
};

namespace {

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

Preconditioner Preconditioner::build(const SaddleSystem& system, Family family, const PChoice& choice,
                                     const PreconditionerOptions& options) {
    const Index n = system.n();
    const Index m = system.m();
    if (choice.kind != PKind::custom && !(choice.omega > 0.0 && std::isfinite(choice.omega))) {
        throw InvalidArgument("preconditioner: omega must be positive and finite");
    }

    auto solver = std::make_shared<PSolver>();
    solver->kind = choice.kind;
    solver->omega = choice.omega;
    const Splitting parts = split(system.W());
    const ColSparse identity = [&] {
        ColSparse id(n, n);
        id.setIdentity();
        return id;
    }();

    switch (choice.kind) {
        case PKind::symmetric_scaled: {
            solver->dense_p = choice.omega * parts.H;
            const ColSparse p = solver->dense_p.sparseView();
            solver->llt.compute(p);
            if (solver->llt.info() != Eigen::Success) {
                throw NotPositiveDefinite("preconditioner: omega H is not positive definite");
            }
            break;
        }
        case PKind::triangular_split: {
            const double ls_norm = options.ls_norm ? *options.ls_norm : spectral_norm(parts.L_s);
            if (ls_norm > 0.0 && choice.omega >= 1.0 / ls_norm) {
                throw PositiveDefinitenessViolation(
                    "preconditioner: triangular-split P is positive definite only for omega < 1/||L_s||_2 = " +
                    format_double(1.0 / ls_norm) + " (got omega = " + format_double(choice.omega) + ")");
            }
            const Matrix lower = Matrix::Identity(n, n) + choice.omega * parts.L_s;
            const Matrix upper = Matrix::Identity(n, n) + choice.omega * parts.U_s;
            solver->lower = lower.sparseView();
            solver->upper = upper.sparseView();
            solver->lower_t = solver->lower.transpose();
            solver->upper_t = solver->upper.transpose();
            solver->dense_p = (lower * upper) / choice.omega;
            break;
        }
        case PKind::custom: {
            if (choice.custom_p.rows() != n || choice.custom_p.cols() != n) {
                throw InvalidArgument("preconditioner: custom P must be n x n");
            }
            solver->dense_p = choice.custom_p;
            solver->lu.compute(choice.custom_p);
            if (std::abs(solver->lu.determinant()) == 0.0 || !solver->lu.matrixLU().allFinite()) {
                throw SingularMatrix("preconditioner: custom P is singular");
            }
            break;
        }
    }

    Preconditioner pc;
    pc.family_ = family;
    pc.choice_ = choice;
    pc.n_ = n;
    pc.m_ = m;
    pc.b_ = system.B_sparse();
    pc.h_sq_over_nu_ = system.meta().h_sq_over_nu();
    pc.p_inv_bt_.resize(n, m);
    const Matrix bt = system.B().transpose();
    for (Index j = 0; j < m; ++j) pc.p_inv_bt_.col(j) = solver->solve(bt.col(j));
    pc.e_ = system.B_sparse() * pc.p_inv_bt_;
    pc.p_solver_ = std::move(solver);

    if (family != Family::block_triangular) {
        if (options.rank_from_b) {
            pc.e_pinv_ = pinv_truncated(pc.e_, numerical_rank(system.B(), options.rank_tol));
        } else {
            pc.e_pinv_ = pinv(pc.e_, options.rank_tol);
        }
    }
    return pc;
}

Vector Preconditioner::solve_p(const Vector& r) const { return p_solver_->solve(r); }

Vector Preconditioner::solve_p_transpose(const Vector& r) const { return p_solver_->solve_transpose(r); }

Matrix Preconditioner::P() const { return p_solver_->dense_p; }

Matrix Preconditioner::P_inverse() const {
    Matrix out(n_, n_);
    const Matrix id = Matrix::Identity(n_, n_);
    for (Index j = 0; j < n_; ++j) out.col(j) = solve_p(id.col(j));
    return out;
}

Vector Preconditioner::apply(const Vector& r) const {
    if (r.size() != n_ + m_) throw InvalidArgument("preconditioner: dimension mismatch in apply");
    const auto r1 = r.head(n_);
    const auto r2 = r.tail(m_);
    Vector y(n_ + m_);
    switch (family_) {
        case Family::constraint: {
            // [ P^-1 - P^-1 B^T E^+ B P^-1   -P^-1 B^T E^+ ]
            // [ E^+ B P^-1                    E^+          ]
            const Vector s = solve_p(r1);
            Vector t = b_ * s;
            t += r2;
            const Vector z = e_pinv_ * t;
            Vector top = r1;
            top.noalias() -= b_.transpose() * z;
            y.head(n_) = solve_p(top);
            y.tail(m_) = z;
            break;
        }
        case Family::block_diagonal:
            y.head(n_) = solve_p(r1);
            y.tail(m_).noalias() = e_pinv_ * r2;
            break;
        case Family::block_triangular: {
            const Vector y2 = r2 / h_sq_over_nu_;
            Vector top = r1;
            top.noalias() -= b_.transpose() * y2;
            y.head(n_) = solve_p(top);
            y.tail(m_) = y2;
            break;
        }
    }
    return y;
}

Vector Preconditioner::apply_transpose(const Vector& r) const {
    if (r.size() != n_ + m_) throw InvalidArgument("preconditioner: dimension mismatch in apply_transpose");
    const auto r1 = r.head(n_);
    const auto r2 = r.tail(m_);
    Vector y(n_ + m_);
    switch (family_) {
        case Family::constraint: {
            const Vector s = solve_p_transpose(r1);
            Vector t = b_ * s;
            t -= r2;
            const Vector z = e_pinv_.transpose() * t;
            Vector top = r1;
            top.noalias() -= b_.transpose() * z;
            y.head(n_) = solve_p_transpose(top);
            y.tail(m_) = -z;
            break;
        }
        case Family::block_diagonal:
            y.head(n_) = solve_p_transpose(r1);
            y.tail(m_).noalias() = e_pinv_.transpose() * r2;
            break;
        case Family::block_triangular: {
            const Vector y1 = solve_p_transpose(r1);
            Vector y2 = r2;
            y2.noalias() -= b_ * y1;
            y.head(n_) = y1;
            y.tail(m_) = y2 / h_sq_over_nu_;
            break;
        }
    }
    return y;
}

Matrix Preconditioner::assemble() const {
    Matrix out = Matrix::Zero(n_ + m_, n_ + m_);
    out.topLeftCorner(n_, n_) = P();
    const Matrix b = b_;
    switch (family_) {
        case Family::constraint:
            out.topRightCorner(n_, m_) = b.transpose();
            out.bottomLeftCorner(m_, n_) = -b;
            break;
        case Family::block_diagonal:
            out.bottomRightCorner(m_, m_) = e_;
            break;
        case Family::block_triangular:
            out.topRightCorner(n_, m_) = b.transpose();
            out.bottomRightCorner(m_, m_) = h_sq_over_nu_ * Matrix::Identity(m_, m_);
            break;
    }
    return out;
}

}  // namespace saddlekit
