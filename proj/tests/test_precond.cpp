#include <gtest/gtest.h>

#include "oracles.hpp"
#include "saddlekit/analysis.hpp"
#include "saddlekit/error.hpp"
#include "saddlekit/precond.hpp"

using namespace saddlekit;

namespace {

Matrix blkdiag(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

Matrix constraint_matrix(const Matrix& p, const Matrix& b) {
    const Index n = p.rows(), m = b.rows();
    Matrix out = Matrix::Zero(n + m, n + m);
    out.topLeftCorner(n, n) = p;
    out.topRightCorner(n, m) = b.transpose();
    out.bottomLeftCorner(m, n) = -b;
    return out;
}

Matrix dense_operator(const Preconditioner& pc, bool transpose) {
    const Index size = pc.n() + pc.m();
    Matrix out(size, size);
    for (Index j = 0; j < size; ++j) {
        const Vector e = Vector::Unit(size, j);
        out.col(j) = transpose ? pc.apply_transpose(e) : pc.apply(e);
    }
    return out;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

// A valid omega for the triangular split: half of the positive-definiteness bound.
double safe_triangular_omega(const SaddleSystem& s) { return std::min(1.0, 0.5 * pd_bound(s.W())); }

}  // namespace

TEST(Constraint, BlockFormulaMatchesAssembledPseudoinverse) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const SaddleSystem s = build_random_singular(9, 5, 3, seed);
        for (const PChoice& choice : {PChoice::symmetric_scaled(1.3), PChoice::triangular_split(safe_triangular_omega(s))}) {
            const Preconditioner pc = Preconditioner::build(s, Family::constraint, choice);
            const Matrix oracle_pinv = oracle::jacobi_pinv(constraint_matrix(pc.P(), s.B()));
            EXPECT_LT(rel(dense_operator(pc, false), oracle_pinv), 1e-8) << "seed " << seed;
            EXPECT_LT(rel(dense_operator(pc, true), oracle_pinv.transpose()), 1e-8) << "seed " << seed;
            EXPECT_LT(rel(pc.assemble(), constraint_matrix(pc.P(), s.B())), 1e-15);
        }
    }
}

TEST(Constraint, ReproducesA) {
    // M M^+ A = A because range(A) is contained in range(M).
    const SaddleSystem s = build_random_singular(10, 6, 4, 5);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(2.0));
    const Matrix a = s.matrix();
    EXPECT_LT(rel(pc.assemble() * dense_operator(pc, false) * a, a), 1e-10);
}

TEST(Constraint, EqualsAPseudoinverseWhenPIsW) {
    // With symmetric W and P = W, M = A.
    SaddleSystem base = build_random_singular(8, 4, 2, 3);
    const Matrix h = split(base.W()).H;
    const SaddleSystem s(h, base.B(), base.f(), base.g());
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    EXPECT_LT(rel(dense_operator(pc, false), oracle::jacobi_pinv(s.matrix())), 1e-9);
}

TEST(Constraint, RankFromBAgreesOnOseen) {
    const SaddleSystem s = build_oseen(4, 0.1);
    const Preconditioner a = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    PreconditionerOptions opts;
    opts.rank_from_b = true;
    const Preconditioner b = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0), opts);
    EXPECT_LT(rel(dense_operator(a, false), dense_operator(b, false)), 1e-10);
    EXPECT_LT(rel(dense_operator(a, false), oracle::jacobi_pinv(a.assemble())), 1e-8);
}

TEST(BlockDiagonal, MatchesPseudoinverseOfBlocks) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SaddleSystem s = build_random_singular(8, 5, 3, seed);
        for (const PChoice& choice : {PChoice::symmetric_scaled(0.7), PChoice::triangular_split(safe_triangular_omega(s))}) {
            const Preconditioner pc = Preconditioner::build(s, Family::block_diagonal, choice);
            const Matrix p = pc.P();
            const Matrix e = s.B() * p.inverse() * s.B().transpose();
            EXPECT_LT(rel(pc.E(), e), 1e-12);
            const Matrix expected = blkdiag(p.inverse(), oracle::jacobi_pinv(e));
            EXPECT_LT(rel(dense_operator(pc, false), expected), 1e-8);
            EXPECT_LT(rel(dense_operator(pc, true), expected.transpose()), 1e-8);
            EXPECT_LT(rel(pc.assemble(), blkdiag(p, e)), 1e-12);
        }
    }
}

TEST(BlockTriangular, IsTheExactInverse) {
    const SaddleSystem s = build_oseen(4, 0.5);
    for (const PChoice& choice : {PChoice::symmetric_scaled(1.5), PChoice::triangular_split(1.0)}) {
        const Preconditioner pc = Preconditioner::build(s, Family::block_triangular, choice);
        const Matrix mt = pc.assemble();
        const Index n = s.n(), m = s.m();
        EXPECT_EQ(mt.bottomLeftCorner(m, n).norm(), 0.0);
        EXPECT_NEAR(mt(n, n), s.meta().h * s.meta().h / s.meta().nu, 1e-15);
        EXPECT_LT(rel(dense_operator(pc, false), mt.inverse()), 1e-10);
        EXPECT_LT(rel(dense_operator(pc, true), mt.inverse().transpose()), 1e-10);
        EXPECT_EQ(pc.E_pinv().size(), 0);
    }
}

TEST(PChoices, AssembledForms) {
    const SaddleSystem s = build_random_singular(7, 3, 2, 8);
    const Splitting sp = split(s.W());
    const double omega = safe_triangular_omega(s);
    const Index n = s.n();
    const Matrix I = Matrix::Identity(n, n);

    const Preconditioner tri = Preconditioner::build(s, Family::constraint, PChoice::triangular_split(omega));
    const Matrix p = (I + omega * sp.L_s) * (I + omega * sp.U_s) / omega;
    EXPECT_LT(rel(tri.P(), p), 1e-14);
    EXPECT_LT(rel(tri.P_inverse(), p.inverse()), 1e-12);
    Rng rng(1);
    const Vector r = rng.uniform_vector(n, -1, 1);
    EXPECT_LT((tri.solve_p(r) - p.inverse() * r).norm(), 1e-12 * r.norm());
    EXPECT_LT((tri.solve_p_transpose(r) - p.transpose().inverse() * r).norm(), 1e-12 * r.norm());
    // Symmetric part of the triangular P: (1/omega) I - omega L_s L_s^T.
    const Matrix ph = 0.5 * (p + p.transpose());
    EXPECT_LT(rel(ph, I / omega - omega * sp.L_s * sp.L_s.transpose()), 1e-13);

    const Preconditioner sym = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(2.5));
    EXPECT_LT(rel(sym.P(), 2.5 * sp.H), 1e-15);
}

TEST(PChoices, CustomP) {
    const SaddleSystem s = build_random_singular(6, 3, 2, 2);
    const Matrix p = s.W() + Matrix::Identity(6, 6);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::custom(p));
    EXPECT_LT(rel(dense_operator(pc, false), oracle::jacobi_pinv(constraint_matrix(p, s.B()))), 1e-8);
    EXPECT_THROW(Preconditioner::build(s, Family::constraint, PChoice::custom(Matrix::Identity(5, 5))),
                 InvalidArgument);
}

TEST(PChoices, TriangularGateAtPositiveDefinitenessBound) {
    const SaddleSystem s = build_oseen(8, 0.1);
    const double bound = pd_bound(s.W());
    EXPECT_NO_THROW(Preconditioner::build(s, Family::constraint, PChoice::triangular_split(0.999 * bound)));
    EXPECT_THROW(Preconditioner::build(s, Family::constraint, PChoice::triangular_split(1.001 * bound)),
                 PositiveDefinitenessViolation);
    EXPECT_THROW(Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(0.0)), InvalidArgument);
    EXPECT_THROW(Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(-1.0)), InvalidArgument);
}

TEST(Apply, RejectsWrongLength) {
    const SaddleSystem s = build_random_singular(6, 3, 2, 2);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    EXPECT_THROW(pc.apply(Vector::Zero(4)), InvalidArgument);
    EXPECT_THROW(pc.apply_transpose(Vector::Zero(4)), InvalidArgument);
}

TEST(Apply, NamesRoundTrip) {
    EXPECT_EQ(to_string(Family::constraint), "constraint");
    EXPECT_EQ(to_string(PKind::triangular_split), "triangular_split");
}
