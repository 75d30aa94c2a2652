#pragma once

// Stationary GCP iteration x <- x + M^dagger (b - A x) and left-preconditioned
// Krylov solvers. Every solver stops on the true relative residual
// RES = ||b - A x|| / ||b||.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "saddlekit/precond.hpp"
#include "saddlekit/problem.hpp"

namespace saddlekit {

struct SolveConfig {
    double tol = 1e-6;
    int max_iters = 5000;
    int restart = 10;  ///< GMRES only
    std::optional<Vector> x0;  ///< zero when unset
    /// RES above this (or a non-finite iterate) aborts with SolveStatus::diverged.
    double divergence_threshold = 1e12;

    void validate() const;
};

enum class SolveStatus { converged, max_iterations, diverged, breakdown, failed };

std::string to_string(SolveStatus status);

struct IterationReport {
    bool converged = false;
    SolveStatus status = SolveStatus::failed;
    int iterations = 0;
    /// RES at x0, then after every iteration; size iterations + 1 unless the
    /// solve failed before starting.
    std::vector<double> residual_history;
    double final_res = 0.0;
    double omega = 0.0;
    std::string case_label;
    std::string message;
    Vector solution;
};

/// A preconditioning operator and its transpose (QMR needs both).
struct PreconditionerOp {
    std::function<Vector(const Vector&)> apply;
    std::function<Vector(const Vector&)> apply_transpose;

    static PreconditionerOp from(const Preconditioner& pc);
    static PreconditionerOp identity();
};

IterationReport gcp_iterate(const SaddleSystem& system, const Preconditioner& pc, const SolveConfig& cfg = {});
IterationReport gcp_iterate(const SaddleSystem& system, const PreconditionerOp& pc, const SolveConfig& cfg = {});

/// GMRES(restart) on M^dagger A x = M^dagger b. Iterations count inner Arnoldi steps.
IterationReport gmres_restarted(const SaddleSystem& system, const Preconditioner& pc, const SolveConfig& cfg = {});
IterationReport gmres_restarted(const SaddleSystem& system, const PreconditionerOp& pc, const SolveConfig& cfg = {});

/// Two-term-recurrence QMR without look-ahead on the left-preconditioned system;
/// the shadow vector starts as the initial preconditioned residual.
IterationReport qmr(const SaddleSystem& system, const Preconditioner& pc, const SolveConfig& cfg = {});
IterationReport qmr(const SaddleSystem& system, const PreconditionerOp& pc, const SolveConfig& cfg = {});

enum class SolverKind { gcp, gmres, qmr };

std::string to_string(SolverKind kind);

IterationReport run_solver(SolverKind kind, const SaddleSystem& system, const Preconditioner& pc,
                           const SolveConfig& cfg);

struct SweepResult {
    std::vector<IterationReport> reports;  ///< ascending omega
    std::optional<double> best_omega;       ///< fewest iterations among converged runs
};

/// Worker count for sweeps: SADDLEKIT_THREADS if set, else hardware concurrency.
unsigned default_thread_count();

/// One solve per omega, each with a freshly built preconditioner. A failure to
/// build (e.g. omega outside the positive-definite range) is recorded as
/// SolveStatus::failed for that omega.
SweepResult omega_sweep(const SaddleSystem& system, Family family, PKind p_kind, std::vector<double> omega_grid,
                        SolverKind solver, const SolveConfig& cfg, const PreconditionerOptions& options = {},
                        unsigned threads = 0);

/// CSV with columns iter,res.
void write_history_csv(std::ostream& out, const IterationReport& report);

}  // namespace saddlekit
