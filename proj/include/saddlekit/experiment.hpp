#pragma once

// Experiment layer shared by the command-line tool and the acceptance run:
// the six preconditioner cases, the reference omega table, and the
// solve/sweep/analyze/table drivers.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "saddlekit/analysis.hpp"
#include "saddlekit/precond.hpp"
#include "saddlekit/problem.hpp"
#include "saddlekit/solvers.hpp"

namespace saddlekit {

/// Raised for inconsistent experiment requests (bad case/solver pairing, size guard).
class UsageError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct CaseInfo {
    int number = 1;  ///< 1..6
    Family family = Family::constraint;
    PKind p_kind = PKind::symmetric_scaled;
};

/// Cases I/II constraint, III/IV block diagonal, V/VI block triangular;
/// odd cases use P = omega H, even cases the triangular split.
CaseInfo case_info(int number);
/// Accepts roman ("I".."VI") or arabic ("1".."6").
int parse_case(const std::string& text);
std::string case_label(int number);

/// "stationary" runs x <- x + M_t^-1 (b - A x) for cases V/VI; "gcp" is reserved
/// for the singular families (cases I-IV).
enum class ExperimentSolver { gcp, stationary, gmres, qmr };

ExperimentSolver parse_solver(const std::string& text);
std::string to_string(ExperimentSolver solver);
SolverKind solver_kind(ExperimentSolver solver);

/// Results table that reports this solver: 2 for gcp/stationary, 3 for gmres, 4 for qmr.
int table_for(ExperimentSolver solver);

/// Reference optimal omega for (table, l, nu, case); nullopt where the table has no entry.
std::optional<double> reference_omega(int table_id, int l, double nu, int case_number);
/// Reference iteration count, same keying.
std::optional<int> reference_iterations(int table_id, int l, double nu, int case_number);

struct ExperimentSpec {
    int l = 16;
    double nu = 0.1;
    int case_number = 1;
    ExperimentSolver solver = ExperimentSolver::gcp;
    std::optional<double> omega;
    std::vector<double> omega_grid;
    double tol = 1e-6;
    int max_iters = 5000;
    int restart = 10;
    std::uint64_t seed = 0;
    RhsMode rhs = RhsMode::manufactured;
    bool rank_from_b = false;
    unsigned threads = 0;

    /// Throws UsageError for bad combinations.
    void validate() const;
    SolveConfig solve_config() const;
    PreconditionerOptions preconditioner_options() const;
    /// Explicit omega, else the reference one, else UsageError.
    double resolved_omega() const;
};

/// Parses "a:b:step" into an inclusive ascending grid.
std::vector<double> parse_omega_grid(const std::string& text);

/// Geometric grid of `count` points over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);

SaddleSystem build_experiment_system(const ExperimentSpec& spec);

IterationReport run_solve(const ExperimentSpec& spec);
IterationReport run_solve(const ExperimentSpec& spec, const SaddleSystem& system);

/// 0 converged, 2 iteration cap, 3 divergence/breakdown/failure.
int exit_code(const IterationReport& report);

nlohmann::json report_to_json(const IterationReport& report, bool with_history);

SweepResult run_sweep(const ExperimentSpec& spec);
SweepResult run_sweep(const ExperimentSpec& spec, const SaddleSystem& system);
/// Columns omega,iters,final_res,status in ascending omega.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
nlohmann::json sweep_to_json(const SweepResult& result);

/// Largest l accepted by the dense analysis command.
inline constexpr int kMaxAnalyzeGrid = 16;

/// Convergence indicator, omega bounds and null-space/index flags as JSON.
nlohmann::json run_analyze(const ExperimentSpec& spec);

struct TableRow {
    double nu = 0.0;
    int case_number = 1;
    std::optional<double> omega;  ///< best converged omega
    std::optional<int> iterations;
    std::optional<double> final_res;
};

struct TableOptions {
    int table_id = 2;
    int l = 16;
    std::vector<double> nus = {0.1, 0.001};
    std::vector<int> cases = {1, 2, 3, 4, 5, 6};
    int max_iters = 5000;
    double tol = 1e-6;
    int restart = 10;
    RhsMode rhs = RhsMode::manufactured;
    unsigned threads = 0;
};

/// Multipliers applied to a reference omega when sweeping around it.
inline const std::vector<double> kReferenceNeighborhood = {0.8, 0.9, 1.0, 1.1, 1.2};
/// Grid for entries without a reference omega: 10 geometric points on [1e-3, 2000].
std::vector<double> default_dash_grid();

std::vector<TableRow> run_table(const TableOptions& options);
/// Columns table,l,nu,case,omega,it with "-" for cells that never converged.
void write_table_csv(std::ostream& out, int table_id, int l, const std::vector<TableRow>& rows);

}  // namespace saddlekit
