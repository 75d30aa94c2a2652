#include "saddlekit/analysis.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "saddlekit/error.hpp"

namespace saddlekit {

namespace {

void require_constraint(const Preconditioner& pc, const char* who) {
    if (pc.family() != Family::constraint) {
        throw InvalidArgument(std::string(who) + ": requires the constraint preconditioner family");
    }
}

Matrix symmetric_part(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// Eigenvalues of H with an SPD check.
Vector spd_eigenvalues(const Matrix& h, const char* who) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceFailure(std::string(who) + ": eigensolver failed");
    if (!(es.eigenvalues()(0) > 0.0)) throw NotPositiveDefinite(std::string(who) + ": H is not positive definite");
    return es.eigenvalues();
}

}  // namespace

nlohmann::json SpectralReport::to_json() const {
    nlohmann::json j;
    j["gamma_T"] = gamma_T;
    j["gamma_XPW"] = std::isfinite(gamma_XPW) ? nlohmann::json(gamma_XPW) : nlohmann::json(nullptr);
    j["null_space_ok"] = null_space_ok;
    j["index_one_ok"] = index_one_ok;
    j["gamma_ok"] = gamma_ok;
    if (projector_eig_ones >= 0) {
        j["projector_eig_ones"] = projector_eig_ones;
        j["projector_eig_zeros"] = projector_eig_zeros;
    }
    j["omega_used"] = omega_used;
    j["null_dim_A"] = null_dim_A;
    j["null_dim_MA"] = null_dim_MA;
    j["null_max_sine"] = null_max_sine;
    j["rank_MA"] = rank_MA;
    j["rank_MA_sq"] = rank_MA_sq;
    return j;
}

Matrix compute_X(const SaddleSystem& system, const Preconditioner& pc) {
    require_constraint(pc, "compute_X");
    const Matrix p_inv = pc.P_inverse();
    const Matrix& pib = pc.P_inv_Bt();  // P^-1 B^T
    return p_inv - pib * (pc.E_pinv() * (system.B() * p_inv));
}

Matrix preconditioned_matrix(const SaddleSystem& system, const Preconditioner& pc) {
    const Matrix a = system.matrix();
    Matrix out(a.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j) out.col(j) = pc.apply(a.col(j));
    return out;
}

double gcp_convergence_indicator(const SaddleSystem& system, const Preconditioner& pc,
                                 const AnalysisOptions& options) {
    require_constraint(pc, "gcp_convergence_indicator");
    const Matrix x = compute_X(system, pc);
    return pseudospectral_radius(x * (pc.P() - system.W()), options.one_tol);
}

SpectralReport check_semiconvergence(const SaddleSystem& system, const Preconditioner& pc, const AnalysisOptions& options) {
    SpectralReport report;
    report.omega_used = pc.choice().omega;

    const Matrix ma = preconditioned_matrix(system, pc);
    const Index size = ma.rows();

    const Matrix null_a = null_space(system.matrix(), options.rank_tol);
    const Matrix null_ma = null_space(ma, options.rank_tol);
    report.null_dim_A = null_a.cols();
    report.null_dim_MA = null_ma.cols();
    if (null_a.cols() == null_ma.cols()) {
        // Largest principal-angle sine = ||(I - N_A N_A^T) N_MA||_2.
        report.null_max_sine =
            null_a.cols() == 0 ? 0.0 : spectral_norm(null_ma - null_a * (null_a.transpose() * null_ma));
        report.null_space_ok = report.null_max_sine < options.angle_tol;
    } else {
        report.null_max_sine = 1.0;
        report.null_space_ok = false;
    }

    report.rank_MA = numerical_rank(ma, options.rank_tol);
    report.rank_MA_sq = numerical_rank(ma * ma, options.rank_tol);
    report.index_one_ok = report.rank_MA == report.rank_MA_sq;

    const Matrix t = Matrix::Identity(size, size) - ma;
    report.gamma_T = pseudospectral_radius(t, options.one_tol);
    report.gamma_ok = report.gamma_T < 1.0;

    report.gamma_XPW = pc.family() == Family::constraint ? gcp_convergence_indicator(system, pc, options)
                                                         : std::numeric_limits<double>::quiet_NaN();
    if (pc.family() == Family::constraint && pc.choice().kind == PKind::symmetric_scaled) {
        const ProjectionSpectrum ps = projection_spectrum(system, pc);
        report.projector_eig_ones = ps.ones;
        report.projector_eig_zeros = ps.zeros;
    }
    return report;
}

ProjectionSpectrum projection_spectrum(const SaddleSystem& system, const Preconditioner& pc) {
    require_constraint(pc, "projection_spectrum");
    if (pc.choice().kind != PKind::symmetric_scaled) {
        throw InvalidArgument("projection_spectrum: requires the symmetric P = omega H");
    }
    const Matrix p_half = sym_sqrt(symmetric_part(pc.P()));
    const Matrix y = symmetric_part(p_half * compute_X(system, pc) * p_half);
    Eigen::SelfAdjointEigenSolver<Matrix> es(y, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceFailure("projection_spectrum: eigensolver failed");

    ProjectionSpectrum out;
    for (Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double lambda = es.eigenvalues()(k);
        if (lambda > 0.5) {
            ++out.ones;
            out.max_dev = std::max(out.max_dev, std::abs(lambda - 1.0));
        } else {
            ++out.zeros;
            out.max_dev = std::max(out.max_dev, std::abs(lambda));
        }
    }
    return out;
}

double omega_bound_symmetric(const Matrix& w) {
    const Splitting sp = split(w);
    spd_eigenvalues(sp.H, "omega_bound_symmetric");
    const Matrix r = sym_inv_sqrt(sp.H);
    const double rho = spectral_norm(r * sp.S * r);
    return 0.5 * (1.0 + rho * rho);
}

double omega_bound_triangular(const Matrix& w) {
    const Splitting sp = split(w);
    const double lambda_max = spd_eigenvalues(sp.H, "omega_bound_triangular").maxCoeff();
    const double ls = spectral_norm(sp.L_s);
    if (ls < 1e-12 * lambda_max) return 2.0 / lambda_max;
    // Same value as (-lambda + sqrt(lambda^2 + 16 ls^2)) / (4 ls^2) without the cancellation.
    return 4.0 / (lambda_max + std::sqrt(lambda_max * lambda_max + 16.0 * ls * ls));
}

double pd_bound(const Matrix& w) {
    const double ls = spectral_norm(split(w).L_s);
    return ls == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / ls;
}

NormCertificates norm_certificates(const SaddleSystem& system, const Preconditioner& pc) {
    require_constraint(pc, "norm_certificates");
    if (pc.choice().kind != PKind::triangular_split) {
        throw InvalidArgument("norm_certificates: requires the triangular-split P");
    }
    const double bound = omega_bound_triangular(system.W());
    if (!(pc.choice().omega < bound)) {
        throw InvalidArgument("norm_certificates: omega " + std::to_string(pc.choice().omega) +
                              " is not below the triangular bound " + std::to_string(bound));
    }
    const Matrix p = pc.P();
    const Matrix p_h = symmetric_part(p);
    const Matrix half = sym_sqrt(p_h);
    const Matrix inv_half = sym_inv_sqrt(p_h);
    NormCertificates out;
    out.x_norm = spectral_norm(half * compute_X(system, pc) * half);
    out.pw_norm = spectral_norm(inv_half * (p - system.W()) * inv_half);
    return out;
}

}  // namespace saddlekit
