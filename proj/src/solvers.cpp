#include "saddlekit/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <thread>

#include "saddlekit/error.hpp"

namespace saddlekit {

void SolveConfig::validate() const {
    if (!(tol > 0.0)) throw InvalidArgument("solve config: tol must be positive");
    if (max_iters < 1) throw InvalidArgument("solve config: max_iters must be >= 1");
    if (restart < 1) throw InvalidArgument("solve config: restart must be >= 1");
}

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max_iterations";
        case SolveStatus::diverged: return "diverged";
        case SolveStatus::breakdown: return "breakdown";
        case SolveStatus::failed: return "failed";
    }
    return "?";
}

std::string to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::gcp: return "gcp";
        case SolverKind::gmres: return "gmres";
        case SolverKind::qmr: return "qmr";
    }
    return "?";
}

PreconditionerOp PreconditionerOp::from(const Preconditioner& pc) {
    return {[&pc](const Vector& r) { return pc.apply(r); },
            [&pc](const Vector& r) { return pc.apply_transpose(r); }};
}

PreconditionerOp PreconditionerOp::identity() {
    return {[](const Vector& r) { return r; }, [](const Vector& r) { return r; }};
}

namespace {

// Shared bookkeeping: RES evaluation against a fixed b, history, termination.
class Monitor {
public:
    Monitor(const SaddleSystem& system, const SolveConfig& cfg)
        : system_(system), cfg_(cfg), b_(system.rhs()), b_norm_(b_.norm()) {}

    const Vector& b() const { return b_; }

    double res(const Vector& x) const {
        const double r = (b_ - system_.apply(x)).norm();
        return b_norm_ > 0.0 ? r / b_norm_ : r;
    }

    /// Records RES of x as iteration `iterations_ + 1`; returns true when the
    /// solve should stop.
    bool record(const Vector& x) {
        const double r = x.allFinite() ? res(x) : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(r)) {
            finish(SolveStatus::diverged, "non-finite iterate; last finite RES reported");
            return true;
        }
        ++report_.iterations;
        report_.residual_history.push_back(r);
        report_.final_res = r;
        report_.solution = x;
        if (r < cfg_.tol) {
            finish(SolveStatus::converged, "");
            return true;
        }
        if (r > cfg_.divergence_threshold) {
            finish(SolveStatus::diverged, "RES exceeded divergence threshold");
            return true;
        }
        if (report_.iterations >= cfg_.max_iters) {
            finish(SolveStatus::max_iterations, "iteration cap reached");
            return true;
        }
        return false;
    }

    /// Records the starting point; returns true if it already satisfies tol.
    bool start(const Vector& x0) {
        const double r = res(x0);
        report_.residual_history.push_back(r);
        report_.final_res = r;
        report_.solution = x0;
        if (!std::isfinite(r)) {
            finish(SolveStatus::diverged, "non-finite initial residual");
            return true;
        }
        if (r < cfg_.tol) {
            finish(SolveStatus::converged, "");
            return true;
        }
        return false;
    }

    void finish(SolveStatus status, std::string message) {
        report_.status = status;
        report_.converged = status == SolveStatus::converged;
        report_.message = std::move(message);
        done_ = true;
    }

    bool done() const { return done_; }
    IterationReport take() { return std::move(report_); }

private:
    const SaddleSystem& system_;
    const SolveConfig& cfg_;
    Vector b_;
    double b_norm_;
    IterationReport report_;
    bool done_ = false;
};

Vector initial_guess(const SaddleSystem& system, const SolveConfig& cfg) {
    if (!cfg.x0) return Vector::Zero(system.size());
    if (cfg.x0->size() != system.size()) throw InvalidArgument("solve config: x0 has wrong length");
    return *cfg.x0;
}

void check_dims(const SaddleSystem& system, const Preconditioner& pc) {
    if (pc.n() != system.n() || pc.m() != system.m()) {
        throw InvalidArgument("solver: preconditioner was built for different dimensions");
    }
}

IterationReport labelled(IterationReport report, const Preconditioner& pc) {
    report.omega = pc.choice().omega;
    return report;
}

}  // namespace

IterationReport gcp_iterate(const SaddleSystem& system, const PreconditionerOp& pc, const SolveConfig& cfg) {
    cfg.validate();
    Monitor monitor(system, cfg);
    Vector x = initial_guess(system, cfg);
    if (monitor.start(x)) return monitor.take();
    while (true) {
        const Vector r = monitor.b() - system.apply(x);
        x += pc.apply(r);
        if (monitor.record(x)) break;
    }
    return monitor.take();
}

IterationReport gcp_iterate(const SaddleSystem& system, const Preconditioner& pc, const SolveConfig& cfg) {
    check_dims(system, pc);
    return labelled(gcp_iterate(system, PreconditionerOp::from(pc), cfg), pc);
}

IterationReport gmres_restarted(const SaddleSystem& system, const PreconditionerOp& pc, const SolveConfig& cfg) {
    cfg.validate();
    Monitor monitor(system, cfg);
    Vector x = initial_guess(system, cfg);
    if (monitor.start(x)) return monitor.take();

    const Index size = system.size();
    const int k_max = cfg.restart;
    Matrix basis(size, k_max + 1);
    Matrix hess = Matrix::Zero(k_max + 1, k_max);
    Vector cs(k_max), sn(k_max), g(k_max + 1);

    while (!monitor.done()) {
        const Vector z = pc.apply(monitor.b() - system.apply(x));
        const double beta = z.norm();
        if (!(beta > 0.0) || !std::isfinite(beta)) {
            monitor.finish(SolveStatus::breakdown, "stagnation: preconditioned residual vanished before RES < tol");
            break;
        }
        basis.col(0) = z / beta;
        hess.setZero();
        g.setZero();
        g(0) = beta;

        Vector x_trial = x;
        for (int j = 0; j < k_max; ++j) {
            Vector w = pc.apply(system.apply(basis.col(j)));
            const double w_norm0 = w.norm();
            // Modified Gram-Schmidt, one reorthogonalization pass.
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= j; ++i) {
                    const double hij = basis.col(i).dot(w);
                    hess(i, j) += hij;
                    w -= hij * basis.col(i);
                }
            }
            const double h_next = w.norm();
            hess(j + 1, j) = h_next;

            for (int i = 0; i < j; ++i) {
                const double t = cs(i) * hess(i, j) + sn(i) * hess(i + 1, j);
                hess(i + 1, j) = -sn(i) * hess(i, j) + cs(i) * hess(i + 1, j);
                hess(i, j) = t;
            }
            const double rho = std::hypot(hess(j, j), hess(j + 1, j));
            if (rho == 0.0) {
                monitor.finish(SolveStatus::breakdown, "stagnation: singular Hessenberg column");
                break;
            }
            cs(j) = hess(j, j) / rho;
            sn(j) = hess(j + 1, j) / rho;
            hess(j, j) = rho;
            hess(j + 1, j) = 0.0;
            g(j + 1) = -sn(j) * g(j);
            g(j) = cs(j) * g(j);

            const Vector y = hess.topLeftCorner(j + 1, j + 1).triangularView<Eigen::Upper>().solve(g.head(j + 1));
            x_trial = x + basis.leftCols(j + 1) * y;
            if (monitor.record(x_trial)) break;

            const bool happy = h_next <= 1e-14 * std::max(w_norm0, 1e-300);
            if (happy) {
                monitor.finish(SolveStatus::breakdown,
                               "stagnation: Krylov space became invariant before RES < tol");
                break;
            }
            basis.col(j + 1) = w / h_next;
        }
        x = x_trial;
    }
    return monitor.take();
}

IterationReport gmres_restarted(const SaddleSystem& system, const Preconditioner& pc, const SolveConfig& cfg) {
    check_dims(system, pc);
    return labelled(gmres_restarted(system, PreconditionerOp::from(pc), cfg), pc);
}

IterationReport qmr(const SaddleSystem& system, const PreconditionerOp& pc, const SolveConfig& cfg) {
    cfg.validate();
    Monitor monitor(system, cfg);
    Vector x = initial_guess(system, cfg);
    if (monitor.start(x)) return monitor.take();

    // Preconditioned operator and its transpose: (M^+ A) and (A^T M^+T).
    const auto op = [&](const Vector& v) { return pc.apply(system.apply(v)); };
    const auto op_t = [&](const Vector& v) { return system.apply_transpose(pc.apply_transpose(v)); };
    const auto breakdown = [&](const std::string& what, int step) {
        monitor.finish(SolveStatus::breakdown,
                       "Lanczos breakdown (" + what + ") at iteration " + std::to_string(step));
    };

    Vector r = pc.apply(monitor.b() - system.apply(x));
    Vector v_tilde = r;
    Vector w_tilde = r;
    double rho = v_tilde.norm();
    double xi = w_tilde.norm();
    double gamma = 1.0, eta = -1.0, theta = 0.0, epsilon = 1.0;
    Vector p, q, d, v, w;
    const double tiny = 1e-300;

    for (int step = 1; !monitor.done(); ++step) {
        if (rho <= tiny || xi <= tiny) {
            breakdown("rho or xi vanished", step);
            break;
        }
        v = v_tilde / rho;
        w = w_tilde / xi;
        const double delta = w.dot(v);
        if (std::abs(delta) <= 1e-15) {
            breakdown("delta ~ 0", step);
            break;
        }
        if (step == 1) {
            p = v;
            q = w;
        } else {
            p = v - (xi * delta / epsilon) * p;
            q = w - (rho * delta / epsilon) * q;
        }
        const Vector p_tilde = op(p);
        epsilon = q.dot(p_tilde);
        if (std::abs(epsilon) <= 1e-15 * q.norm() * p_tilde.norm() || epsilon == 0.0) {
            breakdown("epsilon ~ 0", step);
            break;
        }
        const double beta = epsilon / delta;
        v_tilde = p_tilde - beta * v;
        const double rho_prev = rho;
        rho = v_tilde.norm();
        w_tilde = op_t(q) - beta * w;
        xi = w_tilde.norm();

        const double theta_prev = theta;
        const double gamma_prev = gamma;
        theta = rho / (gamma * std::abs(beta));
        gamma = 1.0 / std::sqrt(1.0 + theta * theta);
        if (gamma == 0.0) {
            breakdown("gamma = 0", step);
            break;
        }
        eta = -eta * rho_prev * gamma * gamma / (beta * gamma_prev * gamma_prev);
        if (step == 1) {
            d = eta * p;
        } else {
            const double c = theta_prev * gamma;
            d = eta * p + (c * c) * d;
        }
        x += d;
        if (monitor.record(x)) break;
    }
    return monitor.take();
}

IterationReport qmr(const SaddleSystem& system, const Preconditioner& pc, const SolveConfig& cfg) {
    check_dims(system, pc);
    return labelled(qmr(system, PreconditionerOp::from(pc), cfg), pc);
}

IterationReport run_solver(SolverKind kind, const SaddleSystem& system, const Preconditioner& pc,
                           const SolveConfig& cfg) {
    switch (kind) {
        case SolverKind::gcp: return gcp_iterate(system, pc, cfg);
        case SolverKind::gmres: return gmres_restarted(system, pc, cfg);
        case SolverKind::qmr: return qmr(system, pc, cfg);
    }
    throw InvalidArgument("run_solver: unknown solver");
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("SADDLEKIT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult omega_sweep(const SaddleSystem& system, Family family, PKind p_kind, std::vector<double> omega_grid,
                        SolverKind solver, const SolveConfig& cfg, const PreconditionerOptions& options,
                        unsigned threads) {
    if (omega_grid.empty()) throw InvalidArgument("omega_sweep: empty omega grid");
    if (p_kind == PKind::custom) throw InvalidArgument("omega_sweep: custom P has no omega");
    cfg.validate();
    std::sort(omega_grid.begin(), omega_grid.end());
    omega_grid.erase(std::unique(omega_grid.begin(), omega_grid.end()), omega_grid.end());

    PreconditionerOptions shared = options;
    if (p_kind == PKind::triangular_split && !shared.ls_norm) {
        shared.ls_norm = spectral_norm(split(system.W()).L_s);
    }

    SweepResult result;
    result.reports.resize(omega_grid.size());
    const auto run_one = [&](std::size_t k) {
        const double omega = omega_grid[k];
        IterationReport report;
        try {
            const PChoice choice{p_kind, omega, {}};
            const Preconditioner pc = Preconditioner::build(system, family, choice, shared);
            report = run_solver(solver, system, pc, cfg);
        } catch (const Error& e) {
            report.status = SolveStatus::failed;
            report.converged = false;
            report.message = e.what();
            report.final_res = std::numeric_limits<double>::quiet_NaN();
        }
        report.omega = omega;
        result.reports[k] = std::move(report);
    };

    const unsigned workers =
        std::min<unsigned>(threads == 0 ? default_thread_count() : threads, static_cast<unsigned>(omega_grid.size()));
    if (workers <= 1) {
        for (std::size_t k = 0; k < omega_grid.size(); ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < omega_grid.size(); k = next++) run_one(k);
            });
        }
        for (auto& th : pool) th.join();
    }

    const IterationReport* best = nullptr;
    for (const auto& r : result.reports) {
        if (r.converged && (!best || r.iterations < best->iterations)) best = &r;
    }
    if (best) result.best_omega = best->omega;
    return result;
}

void write_history_csv(std::ostream& out, const IterationReport& report) {
    out << "iter,res\n" << std::setprecision(17);
    for (std::size_t k = 0; k < report.residual_history.size(); ++k) {
        out << k << ',' << report.residual_history[k] << '\n';
    }
}

}  // namespace saddlekit
