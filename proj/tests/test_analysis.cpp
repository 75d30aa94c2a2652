#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "saddlekit/analysis.hpp"
#include "saddlekit/error.hpp"
#include "saddlekit/solvers.hpp"

using namespace saddlekit;

namespace {

SaddleSystem with_blocks(const Matrix& w, const Matrix& b) {
    return SaddleSystem(w, b, Vector::Zero(w.rows()), Vector::Zero(b.rows()));
}

SaddleSystem symmetric_toy(std::uint64_t seed) {
    const SaddleSystem base = build_random_singular(10, 5, 3, seed);
    const SaddleSystem s = with_blocks(split(base.W()).H, base.B());
    return s.with_rhs(make_consistent_rhs(s, RhsMode::manufactured, seed));
}

Matrix skew2(double c) {
    Matrix s(2, 2);
    s << 0, -c, c, 0;
    return s;
}

}  // namespace

TEST(ComputeX, SquareNonsingularBGivesZero) {
    Rng rng(1);
    const Matrix b = rng.normal_matrix(4, 4) + 3.0 * Matrix::Identity(4, 4);
    const SaddleSystem s = with_blocks(Matrix::Identity(4, 4), b);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    EXPECT_LT(compute_X(s, pc).norm(), 1e-10);
}

TEST(ComputeX, ZeroBGivesPInverse) {
    const SaddleSystem base = build_random_singular(6, 2, 1, 3);
    const SaddleSystem s = with_blocks(base.W(), Matrix::Zero(2, 6));
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(2.0));
    EXPECT_LT((compute_X(s, pc) - pc.P().inverse()).norm(), 1e-12);
}

TEST(ComputeX, MatchesTermByTermOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SaddleSystem s = build_random_singular(9, 5, 3, seed);
        const double omega = 0.5 * pd_bound(s.W());
        const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::triangular_split(omega));
        const Matrix pi = pc.P().inverse();
        const Matrix& b = s.B();
        const Matrix expected = pi - pi * b.transpose() * oracle::jacobi_pinv(b * pi * b.transpose()) * b * pi;
        EXPECT_LT((compute_X(s, pc) - expected).norm(), 1e-9 * expected.norm());
    }
}

TEST(ComputeX, RequiresConstraintFamily) {
    const SaddleSystem s = build_random_singular(6, 3, 2, 1);
    const Preconditioner pc = Preconditioner::build(s, Family::block_diagonal, PChoice::symmetric_scaled(1.0));
    EXPECT_THROW(compute_X(s, pc), InvalidArgument);
    EXPECT_THROW(gcp_convergence_indicator(s, pc), InvalidArgument);
}

TEST(Indicator, ZeroWhenPEqualsW) {
    const SaddleSystem s = symmetric_toy(2);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    EXPECT_LT(gcp_convergence_indicator(s, pc), 1e-10);
}

TEST(Indicator, ClosedFormForZeroB) {
    // X (P - W) = (1 - 1/omega) I when B = 0 and W is symmetric.
    const SaddleSystem base = symmetric_toy(3);
    const SaddleSystem s = with_blocks(base.W(), Matrix::Zero(5, 10));
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(0.01));
    EXPECT_NEAR(gcp_convergence_indicator(s, pc), 99.0, 1e-8);
}

TEST(Indicator, SmallCavityCaseIPredictsConvergence) {
    const SaddleSystem s = build_oseen(8, 0.1);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    EXPECT_LT(gcp_convergence_indicator(s, pc), 1.0);
    EXPECT_TRUE(gcp_iterate(s, pc).converged);
}

TEST(Indicator, EigenvaluesHaveTheScaledForm) {
    // Nonzero eigenvalues of X (P - W) with P = omega H have real part 1 - 1/omega.
    const SaddleSystem s = build_random_singular(10, 5, 3, 4);
    const double omega = 1.7;
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(omega));
    const auto ev = eigenvalues(compute_X(s, pc) * (pc.P() - s.W()));
    int nonzero = 0;
    for (const auto& z : ev) {
        if (std::abs(z) < 1e-9) continue;
        ++nonzero;
        EXPECT_NEAR(z.real(), 1.0 - 1.0 / omega, 1e-6);
    }
    EXPECT_EQ(nonzero, 10 - 3);
}

TEST(Semiconvergence, ConstraintFamilyAlwaysSatisfiesNullAndIndex) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SaddleSystem s = build_random_singular(8, 5, 3, seed);
        for (const PChoice& c : {PChoice::symmetric_scaled(1.0), PChoice::triangular_split(0.5 * pd_bound(s.W()))}) {
            const Preconditioner pc = Preconditioner::build(s, Family::constraint, c);
            const SpectralReport r = check_semiconvergence(s, pc);
            EXPECT_TRUE(r.null_space_ok) << "seed " << seed << " sine " << r.null_max_sine;
            EXPECT_TRUE(r.index_one_ok) << "seed " << seed;
            EXPECT_EQ(r.gamma_ok, r.gamma_T < 1.0);
            EXPECT_EQ(r.null_dim_A, 2);
        }
    }
}

TEST(Semiconvergence, ExactPreconditionerMakesTAProjector) {
    const SaddleSystem s = symmetric_toy(5);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    const SpectralReport r = check_semiconvergence(s, pc);
    EXPECT_LT(r.gamma_T, 1e-10);
    EXPECT_TRUE(r.gamma_ok);
    EXPECT_EQ(r.projector_eig_ones + r.projector_eig_zeros, s.n());
}

TEST(Semiconvergence, BlockDiagonalStallIsExplained) {
    const SaddleSystem s = build_oseen(8, 0.1);
    for (double omega : {0.03, 1.0, 30.0}) {
        const Preconditioner pc = Preconditioner::build(s, Family::block_diagonal, PChoice::symmetric_scaled(omega));
        const IterationReport run = gcp_iterate(s, pc);
        const SpectralReport r = check_semiconvergence(s, pc);
        EXPECT_FALSE(run.converged);
        EXPECT_TRUE(!r.null_space_ok || !r.index_one_ok || !r.gamma_ok) << "omega " << omega;
        EXPECT_TRUE(std::isnan(r.gamma_XPW));
    }
}

TEST(Semiconvergence, ReportSerializes) {
    const SaddleSystem s = build_random_singular(6, 3, 2, 1);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    const auto j = check_semiconvergence(s, pc).to_json();
    for (const char* key : {"gamma_T", "gamma_XPW", "null_space_ok", "index_one_ok", "gamma_ok",
                            "projector_eig_ones", "projector_eig_zeros", "omega_used"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
}

TEST(ProjectionSpectrum, SmallCavityCounts) {
    const SaddleSystem s = build_oseen(8, 0.1);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    const ProjectionSpectrum ps = projection_spectrum(s, pc);
    EXPECT_EQ(ps.ones, 49);
    EXPECT_EQ(ps.zeros, 63);
    EXPECT_LE(ps.max_dev, 1e-8);
}

TEST(ProjectionSpectrum, ZeroBIsAllOnes) {
    const SaddleSystem base = build_random_singular(6, 2, 1, 2);
    const SaddleSystem s = with_blocks(base.W(), Matrix::Zero(2, 6));
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(3.0));
    const ProjectionSpectrum ps = projection_spectrum(s, pc);
    EXPECT_EQ(ps.ones, 6);
    EXPECT_EQ(ps.zeros, 0);
    EXPECT_LE(ps.max_dev, 1e-10);
}

TEST(ProjectionSpectrum, ComplementIsIdempotent) {
    const SaddleSystem s = build_oseen(4, 0.1);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.3));
    const Matrix r = sym_inv_sqrt(pc.P());
    const Matrix q = r * s.B().transpose() * pc.E_pinv() * s.B() * r;
    EXPECT_LT((q * q - q).norm(), 1e-9 * std::max(1.0, q.norm()));
}

TEST(ProjectionSpectrum, RejectsTriangularP) {
    const SaddleSystem s = build_oseen(4, 0.1);
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::triangular_split(1.0));
    EXPECT_THROW(projection_spectrum(s, pc), InvalidArgument);
}

TEST(OmegaBounds, SymmetricClosedForms) {
    EXPECT_NEAR(omega_bound_symmetric(Matrix::Identity(3, 3) * 2.0), 0.5, 1e-15);
    EXPECT_NEAR(omega_bound_symmetric(Matrix::Identity(2, 2) + skew2(2.0)), 2.5, 1e-14);
    EXPECT_THROW(omega_bound_symmetric(skew2(1.0)), NotPositiveDefinite);
}

TEST(OmegaBounds, SymmetricBoundGuaranteesConvergenceOnCavity) {
    const SaddleSystem s = build_oseen(8, 0.1);
    const double beta = omega_bound_symmetric(s.W());
    const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.1 * beta));
    EXPECT_LT(gcp_convergence_indicator(s, pc), 1.0);
    EXPECT_TRUE(gcp_iterate(s, pc).converged);
}

TEST(OmegaBounds, TriangularClosedForms) {
    EXPECT_NEAR(omega_bound_triangular(Matrix::Identity(2, 2) + skew2(1.0)), (-1.0 + std::sqrt(17.0)) / 4.0, 1e-14);
    Matrix h = Matrix::Identity(3, 3);
    h(2, 2) = 4.0;
    EXPECT_NEAR(omega_bound_triangular(h), 0.5, 1e-15);
    // The stable form agrees with the textbook expression away from the limit.
    const Matrix w = 2.0 * Matrix::Identity(2, 2) + skew2(0.3);
    const double lam = 2.0, ls = 0.3;
    EXPECT_NEAR(omega_bound_triangular(w), (-lam + std::sqrt(lam * lam + 16 * ls * ls)) / (4 * ls * ls), 1e-13);
}

TEST(OmegaBounds, TriangularNeverExceedsPdBound) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SaddleSystem s = build_random_singular(8, 4, 2, seed);
        EXPECT_LE(omega_bound_triangular(s.W()), pd_bound(s.W()));
    }
    const SaddleSystem cavity = build_oseen(8, 0.001);
    EXPECT_LE(omega_bound_triangular(cavity.W()), pd_bound(cavity.W()));
}

TEST(PdBound, ClosedFormsAndWitness) {
    EXPECT_NEAR(pd_bound(Matrix::Identity(2, 2) + skew2(2.0)), 0.5, 1e-15);
    EXPECT_TRUE(std::isinf(pd_bound(Matrix::Identity(3, 3))));

    // H = I, L_s = [[0,0],[c,0]]: P_H = (1/omega) I - omega L_s L_s^T.
    const double c = 1.7;
    const Matrix w = Matrix::Identity(2, 2) + skew2(c);
    const double bound = pd_bound(w);
    EXPECT_NEAR(bound, 1.0 / c, 1e-15);
    const Matrix ls = split(w).L_s;
    const auto p_h = [&](double omega) { return Matrix(Matrix::Identity(2, 2) / omega - omega * ls * ls.transpose()); };
    EXPECT_NO_THROW(cholesky(p_h(0.999 * bound)));
    EXPECT_THROW(cholesky(p_h(1.001 * bound)), NotPositiveDefinite);
}

TEST(NormCertificates, HoldBelowTheTriangularBound) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SaddleSystem s = build_random_singular(8, 4, 2, seed);
        const double omega = 0.9 * omega_bound_triangular(s.W());
        const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::triangular_split(omega));
        const NormCertificates nc = norm_certificates(s, pc);
        const double gamma = gcp_convergence_indicator(s, pc);
        EXPECT_LE(nc.x_norm, 1.0 + 1e-8);
        EXPECT_LT(nc.pw_norm, 1.0);
        EXPECT_GE(nc.x_norm * nc.pw_norm, gamma - 1e-8);
        EXPECT_LT(gamma, 1.0);
    }
}

TEST(NormCertificates, PreconditionsAreEnforced) {
    const SaddleSystem s = build_random_singular(8, 4, 2, 1);
    const Preconditioner sym = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(1.0));
    EXPECT_THROW(norm_certificates(s, sym), InvalidArgument);
    const double above = 0.5 * (omega_bound_triangular(s.W()) + pd_bound(s.W()));
    const Preconditioner tri = Preconditioner::build(s, Family::constraint, PChoice::triangular_split(above));
    EXPECT_THROW(norm_certificates(s, tri), InvalidArgument);
}

TEST(Theory, IndicatorPredictsGcpOnRandomSystems) {
    int decided = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const SaddleSystem s = build_random_singular(8, 4, 2, seed);
        Rng rng(seed);
        const double omega = rng.uniform(0.3, 1.5);
        const Preconditioner pc = Preconditioner::build(s, Family::constraint, PChoice::symmetric_scaled(omega));
        const double gamma = gcp_convergence_indicator(s, pc);
        if (std::abs(gamma - 1.0) <= 1e-6) continue;
        SolveConfig cfg;
        cfg.max_iters = 2000;
        EXPECT_EQ(gcp_iterate(s, pc, cfg).converged, gamma < 1.0) << "seed " << seed << " gamma " << gamma;
        ++decided;
    }
    EXPECT_GT(decided, 20);
}
