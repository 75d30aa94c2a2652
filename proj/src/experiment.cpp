#include "saddlekit/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace saddlekit {

CaseInfo case_info(int number) {
    if (number < 1 || number > 6) throw UsageError("case must be one of I..VI, got " + std::to_string(number));
    CaseInfo info;
    info.number = number;
    info.family = number <= 2 ? Family::constraint : number <= 4 ? Family::block_diagonal : Family::block_triangular;
    info.p_kind = number % 2 == 1 ? PKind::symmetric_scaled : PKind::triangular_split;
    return info;
}

namespace {
constexpr std::array<const char*, 6> kRoman = {"I", "II", "III", "IV", "V", "VI"};

struct ReferenceEntry {
    int table_id;
    int l;
    double nu;
    int case_number;
    double omega;
    int iterations;
};

// Optimal omega and iteration counts of the reference results; absent
// entries did not converge within 5000 steps for any omega in (0, 2000].
constexpr ReferenceEntry kReference[] = {
    {2, 16, 0.1, 1, 1.00, 11},     {2, 16, 0.1, 2, 0.98, 89},     {2, 16, 0.001, 2, 0.08, 202},
    {2, 32, 0.1, 1, 1.00, 8},      {2, 32, 0.1, 2, 0.99, 249},    {2, 32, 0.001, 2, 0.16, 298},

    {3, 16, 0.1, 1, 1.50, 14},     {3, 16, 0.1, 2, 0.63, 34},     {3, 16, 0.1, 3, 0.03, 29},
    {3, 16, 0.1, 4, 0.02, 49},     {3, 16, 0.1, 5, 0.01, 87},     {3, 16, 0.001, 1, 26.40, 748},
    {3, 16, 0.001, 2, 0.04, 118},  {3, 16, 0.001, 3, 0.04, 1846}, {3, 16, 0.001, 4, 0.06, 229},
    {3, 16, 0.001, 5, 0.02, 953},
    {3, 32, 0.1, 1, 1.61, 22},     {3, 32, 0.1, 2, 0.64, 63},     {3, 32, 0.1, 3, 0.02, 30},
    {3, 32, 0.1, 4, 0.02, 110},    {3, 32, 0.1, 5, 0.02, 695},    {3, 32, 0.001, 1, 28.62, 1340},
    {3, 32, 0.001, 2, 0.05, 700},  {3, 32, 0.001, 3, 0.02, 4647}, {3, 32, 0.001, 4, 0.10, 851},
    {3, 32, 0.001, 5, 0.01, 1851},

    {4, 16, 0.1, 1, 1.52, 11},     {4, 16, 0.1, 2, 0.60, 35},     {4, 16, 0.1, 3, 2.12, 31},
    {4, 16, 0.1, 4, 1.00, 89},     {4, 16, 0.1, 5, 1.26, 47},     {4, 16, 0.1, 6, 0.90, 385},
    {4, 16, 0.001, 1, 24.10, 276}, {4, 16, 0.001, 2, 0.06, 142},  {4, 16, 0.001, 4, 0.09, 217},
    {4, 16, 0.001, 5, 28.35, 652}, {4, 16, 0.001, 6, 0.02, 871},
    {4, 32, 0.1, 1, 1.59, 13},     {4, 32, 0.1, 2, 0.63, 68},     {4, 32, 0.1, 3, 2.11, 36},
    {4, 32, 0.1, 4, 0.99, 183},    {4, 32, 0.1, 5, 1.11, 69},     {4, 32, 0.1, 6, 0.85, 1420},
    {4, 32, 0.001, 1, 21.60, 486}, {4, 32, 0.001, 2, 0.05, 294},  {4, 32, 0.001, 4, 0.11, 340},
    {4, 32, 0.001, 5, 25.67, 1411}, {4, 32, 0.001, 6, 0.04, 3852},
};

const ReferenceEntry* find_reference(int table_id, int l, double nu, int case_number) {
    for (const auto& e : kReference) {
        if (e.table_id == table_id && e.l == l && e.case_number == case_number &&
            std::abs(e.nu - nu) <= 1e-12 * e.nu) {
            return &e;
        }
    }
    return nullptr;
}

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}
}  // namespace

int parse_case(const std::string& text) {
    for (int k = 0; k < 6; ++k) {
        if (text == kRoman[k] || text == std::to_string(k + 1)) return k + 1;
    }
    throw UsageError("unknown case '" + text + "' (expected I..VI)");
}

std::string case_label(int number) {
    case_info(number);
    return std::string("Case ") + kRoman[number - 1];
}

ExperimentSolver parse_solver(const std::string& text) {
    if (text == "gcp") return ExperimentSolver::gcp;
    if (text == "stationary") return ExperimentSolver::stationary;
    if (text == "gmres") return ExperimentSolver::gmres;
    if (text == "qmr") return ExperimentSolver::qmr;
    throw UsageError("unknown solver '" + text + "' (expected gcp, stationary, gmres or qmr)");
}

std::string to_string(ExperimentSolver solver) {
    switch (solver) {
        case ExperimentSolver::gcp: return "gcp";
        case ExperimentSolver::stationary: return "stationary";
        case ExperimentSolver::gmres: return "gmres";
        case ExperimentSolver::qmr: return "qmr";
    }
    return "?";
}

SolverKind solver_kind(ExperimentSolver solver) {
    switch (solver) {
        case ExperimentSolver::gcp:
        case ExperimentSolver::stationary: return SolverKind::gcp;
        case ExperimentSolver::gmres: return SolverKind::gmres;
        case ExperimentSolver::qmr: return SolverKind::qmr;
    }
    return SolverKind::gcp;
}

int table_for(ExperimentSolver solver) {
    switch (solver) {
        case ExperimentSolver::gmres: return 3;
        case ExperimentSolver::qmr: return 4;
        default: return 2;
    }
}

std::optional<double> reference_omega(int table_id, int l, double nu, int case_number) {
    const auto* e = find_reference(table_id, l, nu, case_number);
    return e ? std::optional<double>(e->omega) : std::nullopt;
}

std::optional<int> reference_iterations(int table_id, int l, double nu, int case_number) {
    const auto* e = find_reference(table_id, l, nu, case_number);
    return e ? std::optional<int>(e->iterations) : std::nullopt;
}

void ExperimentSpec::validate() const {
    if (l < 4) throw UsageError("grid count l must be at least 4, got " + std::to_string(l));
    if (!(nu > 0.0)) throw UsageError("viscosity nu must be positive");
    const CaseInfo info = case_info(case_number);
    if (solver == ExperimentSolver::gcp && info.family == Family::block_triangular) {
        throw UsageError(case_label(case_number) +
                         " uses the nonsingular block-triangular preconditioner, which the GCP iteration "
                         "does not apply; use --solver stationary, gmres or qmr");
    }
    if (solver == ExperimentSolver::stationary && info.family != Family::block_triangular) {
        throw UsageError("--solver stationary is for cases V and VI; use --solver gcp for " +
                         case_label(case_number));
    }
    if (omega && !(*omega > 0.0)) throw UsageError("omega must be positive");
    for (double w : omega_grid) {
        if (!(w > 0.0)) throw UsageError("omega grid values must be positive");
    }
    try {
        solve_config().validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

SolveConfig ExperimentSpec::solve_config() const {
    SolveConfig cfg;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    cfg.restart = restart;
    return cfg;
}

PreconditionerOptions ExperimentSpec::preconditioner_options() const {
    PreconditionerOptions opts;
    opts.rank_from_b = rank_from_b;
    return opts;
}

double ExperimentSpec::resolved_omega() const {
    if (omega) return *omega;
    if (auto w = reference_omega(table_for(solver), l, nu, case_number)) return *w;
    throw UsageError("no reference omega for " + case_label(case_number) + " with solver " + to_string(solver) +
                     " at l=" + std::to_string(l) + ", nu=" + format_double(nu, "%g") + "; pass --omega");
}

std::vector<double> parse_omega_grid(const std::string& text) {
    double a = 0, b = 0, step = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &a, &b, &step, &tail) != 3) {
        throw UsageError("omega grid must look like a:b:step, got '" + text + "'");
    }
    if (!(a > 0.0) || !(b >= a) || !(step > 0.0)) {
        throw UsageError("omega grid needs 0 < a <= b and step > 0");
    }
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 100000) throw UsageError("omega grid has too many points");
    std::vector<double> grid;
    for (long k = 0; k < count; ++k) grid.push_back(a + static_cast<double>(k) * step);
    return grid;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InvalidArgument("log_grid: need 0 < lo <= hi, count >= 1");
    std::vector<double> grid;
    if (count == 1) return {hi};
    const double ratio = std::log(hi / lo);
    for (int k = 0; k < count; ++k) grid.push_back(lo * std::exp(ratio * k / (count - 1)));
    grid.back() = hi;
    return grid;
}

std::vector<double> default_dash_grid() { return log_grid(1e-3, 2000.0, 10); }

SaddleSystem build_experiment_system(const ExperimentSpec& spec) {
    return build_oseen(spec.l, spec.nu, spec.rhs, spec.seed);
}

IterationReport run_solve(const ExperimentSpec& spec) {
    spec.validate();
    return run_solve(spec, build_experiment_system(spec));
}

IterationReport run_solve(const ExperimentSpec& spec, const SaddleSystem& system) {
    spec.validate();
    const CaseInfo info = case_info(spec.case_number);
    const double omega = spec.resolved_omega();
    const PChoice choice{info.p_kind, omega, {}};
    const Preconditioner pc = Preconditioner::build(system, info.family, choice, spec.preconditioner_options());
    IterationReport report = run_solver(solver_kind(spec.solver), system, pc, spec.solve_config());
    report.omega = omega;
    report.case_label = case_label(spec.case_number);
    return report;
}

int exit_code(const IterationReport& report) {
    switch (report.status) {
        case SolveStatus::converged: return 0;
        case SolveStatus::max_iterations: return 2;
        default: return 3;
    }
}

nlohmann::json report_to_json(const IterationReport& report, bool with_history) {
    nlohmann::json j;
    j["case"] = report.case_label;
    j["omega"] = report.omega;
    j["status"] = to_string(report.status);
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["final_res"] = std::isfinite(report.final_res) ? nlohmann::json(report.final_res) : nlohmann::json(nullptr);
    if (!report.message.empty()) j["message"] = report.message;
    if (with_history) j["residual_history"] = report.residual_history;
    return j;
}

SweepResult run_sweep(const ExperimentSpec& spec) {
    spec.validate();
    return run_sweep(spec, build_experiment_system(spec));
}

SweepResult run_sweep(const ExperimentSpec& spec, const SaddleSystem& system) {
    spec.validate();
    const CaseInfo info = case_info(spec.case_number);
    std::vector<double> grid = spec.omega_grid;
    if (grid.empty()) grid.push_back(spec.resolved_omega());
    SweepResult result = omega_sweep(system, info.family, info.p_kind, grid, solver_kind(spec.solver),
                                     spec.solve_config(), spec.preconditioner_options(), spec.threads);
    for (auto& r : result.reports) r.case_label = case_label(spec.case_number);
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "omega,iters,final_res,status\n";
    for (const auto& r : result.reports) {
        out << format_double(r.omega, "%.10g") << ',' << r.iterations << ','
            << (std::isfinite(r.final_res) ? format_double(r.final_res, "%.6e") : std::string("nan")) << ','
            << to_string(r.status) << '\n';
    }
}

nlohmann::json sweep_to_json(const SweepResult& result) {
    nlohmann::json j;
    j["reports"] = nlohmann::json::array();
    for (const auto& r : result.reports) j["reports"].push_back(report_to_json(r, false));
    j["best_omega"] = result.best_omega ? nlohmann::json(*result.best_omega) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json run_analyze(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.l > kMaxAnalyzeGrid) {
        throw UsageError("analyze uses dense O(N^3) spectral methods and accepts l <= " +
                         std::to_string(kMaxAnalyzeGrid) + ", got " + std::to_string(spec.l));
    }
    const CaseInfo info = case_info(spec.case_number);
    const SaddleSystem system = build_experiment_system(spec);
    const double omega = spec.resolved_omega();

    const double pd = pd_bound(system.W());
    if (info.p_kind == PKind::triangular_split && !(omega < pd)) {
        throw UsageError("omega = " + format_double(omega, "%g") +
                         " leaves the triangular-split P indefinite; it must be below 1/||L_s||_2 = " +
                         format_double(pd, "%.6g"));
    }
    const PChoice choice{info.p_kind, omega, {}};
    const Preconditioner pc = Preconditioner::build(system, info.family, choice, spec.preconditioner_options());
    const SpectralReport report = check_semiconvergence(system, pc);

    nlohmann::json j;
    j["l"] = spec.l;
    j["nu"] = spec.nu;
    j["case"] = case_label(spec.case_number);
    j["n"] = system.n();
    j["m"] = system.m();
    j["rank_B"] = numerical_rank(system.B());
    j["omega_bound_symmetric"] = omega_bound_symmetric(system.W());
    j["omega_bound_triangular"] = omega_bound_triangular(system.W());
    j["pd_bound"] = std::isfinite(pd) ? nlohmann::json(pd) : nlohmann::json("inf");
    j["spectral"] = report.to_json();
    return j;
}

std::vector<TableRow> run_table(const TableOptions& options) {
    if (options.table_id < 2 || options.table_id > 4) throw UsageError("table id must be 2, 3 or 4");
    const ExperimentSolver krylov = options.table_id == 3 ? ExperimentSolver::gmres : ExperimentSolver::qmr;

    std::vector<TableRow> rows;
    for (double nu : options.nus) {
        const SaddleSystem system = build_oseen(options.l, nu, options.rhs, 0);
        for (int c : options.cases) {
            ExperimentSpec spec;
            spec.l = options.l;
            spec.nu = nu;
            spec.case_number = c;
            spec.solver = options.table_id != 2   ? krylov
                          : case_info(c).family == Family::block_triangular ? ExperimentSolver::stationary
                                                                            : ExperimentSolver::gcp;
            spec.tol = options.tol;
            spec.max_iters = options.max_iters;
            spec.restart = options.restart;
            spec.rhs = options.rhs;
            spec.threads = options.threads;

            const auto reference = reference_omega(options.table_id, options.l, nu, c);
            std::vector<std::vector<double>> grids;
            if (reference) {
                std::vector<double> g;
                for (double f : kReferenceNeighborhood) g.push_back(f * *reference);
                grids.push_back(g);
            }
            grids.push_back(default_dash_grid());

            TableRow row;
            row.nu = nu;
            row.case_number = c;
            for (const auto& g : grids) {
                spec.omega_grid = g;
                const SweepResult sweep = run_sweep(spec, system);
                if (!sweep.best_omega) continue;
                for (const auto& r : sweep.reports) {
                    if (r.converged && r.omega == *sweep.best_omega) {
                        row.omega = r.omega;
                        row.iterations = r.iterations;
                        row.final_res = r.final_res;
                    }
                }
                break;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_table_csv(std::ostream& out, int table_id, int l, const std::vector<TableRow>& rows) {
    out << "table,l,nu,case,omega,it\n";
    for (const auto& r : rows) {
        out << table_id << ',' << l << ',' << format_double(r.nu, "%g") << ',' << kRoman[r.case_number - 1] << ','
            << (r.omega ? format_double(*r.omega, "%.4g") : std::string("-")) << ','
            << (r.iterations ? std::to_string(*r.iterations) : std::string("-")) << '\n';
    }
}

}  // namespace saddlekit
