// saddlekit command-line front end: gen, solve, sweep, analyze, table.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "saddlekit/experiment.hpp"

namespace sk = saddlekit;

namespace {

constexpr int kExitUsage = 1;

struct Flags {
    int l = 16;
    double nu = 0.1;
    std::string case_text = "I";
    std::string solver = "gcp";
    std::optional<double> omega;
    std::string omega_grid;
    double tol = 1e-6;
    int max_iters = 5000;
    int restart = 10;
    std::uint64_t seed = 0;
    std::string format = "csv";
    std::string out;
    std::string rhs = "manufactured";
    bool rank_from_b = false;
};

void add_experiment_flags(CLI::App* cmd, Flags& f, bool with_solver) {
    cmd->add_option("-l,--grid", f.l, "grid count l (l x l cells)")->capture_default_str();
    cmd->add_option("--nu", f.nu, "viscosity")->capture_default_str();
    cmd->add_option("--case", f.case_text, "preconditioner case I..VI")->capture_default_str();
    if (with_solver) {
        cmd->add_option("--solver", f.solver, "gcp | stationary | gmres | qmr")->capture_default_str();
        cmd->add_option("--tol", f.tol, "stopping tolerance on the relative residual")->capture_default_str();
        cmd->add_option("--max-iters", f.max_iters, "iteration cap")->capture_default_str();
        cmd->add_option("--restart", f.restart, "GMRES restart length")->capture_default_str();
    }
    cmd->add_option("--omega", f.omega, "omega (defaults to the reference optimum where one exists)");
    cmd->add_option("--seed", f.seed, "seed for the manufactured right-hand side")->capture_default_str();
    cmd->add_option("--rhs", f.rhs, "lid (cavity load) | manufactured")
        ->check(CLI::IsMember({"lid", "manufactured"}))
        ->capture_default_str();
    cmd->add_flag("--rank-from-b", f.rank_from_b, "truncate E^+ to rank(B) instead of a relative tolerance");
    cmd->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cmd->add_option("--out", f.out, "output file (stdout when omitted)");
}

sk::ExperimentSpec to_spec(const Flags& f) {
    sk::ExperimentSpec spec;
    spec.l = f.l;
    spec.nu = f.nu;
    spec.case_number = sk::parse_case(f.case_text);
    spec.solver = sk::parse_solver(f.solver);
    spec.omega = f.omega;
    if (!f.omega_grid.empty()) spec.omega_grid = sk::parse_omega_grid(f.omega_grid);
    spec.tol = f.tol;
    spec.max_iters = f.max_iters;
    spec.restart = f.restart;
    spec.seed = f.seed;
    spec.rhs = f.rhs == "manufactured" ? sk::RhsMode::manufactured : sk::RhsMode::projected;
    spec.rank_from_b = f.rank_from_b;
    spec.validate();
    return spec;
}

// Writes to --out if given, else stdout.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream os(path);
    if (!os) throw sk::IoError("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw sk::IoError("failed writing '" + path + "'");
}

int cmd_gen(const Flags& f) {
    if (f.out.empty()) throw sk::UsageError("gen needs --out <directory>");
    if (f.l < 4) throw sk::UsageError("grid count l must be at least 4, got " + std::to_string(f.l));
    if (!(f.nu > 0.0)) throw sk::UsageError("viscosity nu must be positive");
    const auto mode = f.rhs == "manufactured" ? sk::RhsMode::manufactured : sk::RhsMode::projected;
    const sk::SaddleSystem system = sk::build_oseen(f.l, f.nu, mode, f.seed);
    sk::export_system(system, f.out);
    std::cerr << "wrote " << f.out << ": n=" << system.n() << " m=" << system.m() << '\n';
    return 0;
}

int cmd_solve(const Flags& f) {
    const sk::ExperimentSpec spec = to_spec(f);
    const sk::IterationReport report = sk::run_solve(spec);
    std::ostringstream os;
    if (f.format == "json") {
        os << sk::report_to_json(report, true).dump(2) << '\n';
    } else {
        sk::write_history_csv(os, report);
    }
    emit(f.out, os.str());
    std::fprintf(stderr, "%s %s omega=%g status=%s IT=%d RES=%.3e%s%s\n", report.case_label.c_str(),
                 sk::to_string(spec.solver).c_str(), report.omega, sk::to_string(report.status).c_str(),
                 report.iterations, report.final_res, report.message.empty() ? "" : " : ",
                 report.message.c_str());
    return sk::exit_code(report);
}

int cmd_sweep(const Flags& f) {
    const sk::ExperimentSpec spec = to_spec(f);
    const sk::SweepResult result = sk::run_sweep(spec);
    std::ostringstream os;
    if (f.format == "json") {
        os << sk::sweep_to_json(result).dump(2) << '\n';
    } else {
        sk::write_sweep_csv(os, result);
    }
    emit(f.out, os.str());
    if (result.best_omega) {
        std::fprintf(stderr, "best omega %g\n", *result.best_omega);
    } else {
        std::fprintf(stderr, "no omega converged\n");
    }
    return 0;
}

int cmd_analyze(const Flags& f) {
    const sk::ExperimentSpec spec = to_spec(f);
    emit(f.out, sk::run_analyze(spec).dump(2) + "\n");
    return 0;
}

int cmd_table(const Flags& f, int table_id, const std::vector<double>& nus) {
    sk::TableOptions opts;
    opts.table_id = table_id;
    opts.l = f.l;
    if (!nus.empty()) opts.nus = nus;
    opts.tol = f.tol;
    opts.max_iters = f.max_iters;
    opts.restart = f.restart;
    opts.rhs = f.rhs == "manufactured" ? sk::RhsMode::manufactured : sk::RhsMode::projected;
    if (f.l < 4) throw sk::UsageError("grid count l must be at least 4, got " + std::to_string(f.l));
    const auto rows = sk::run_table(opts);
    std::ostringstream os;
    if (f.format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) {
            j.push_back({{"nu", r.nu},
                         {"case", sk::case_label(r.case_number)},
                         {"omega", r.omega ? nlohmann::json(*r.omega) : nlohmann::json(nullptr)},
                         {"it", r.iterations ? nlohmann::json(*r.iterations) : nlohmann::json(nullptr)}});
        }
        os << j.dump(2) << '\n';
    } else {
        sk::write_table_csv(os, table_id, f.l, rows);
    }
    emit(f.out, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"saddlekit: GCP iteration and preconditioned Krylov solvers for singular saddle-point systems"};
    app.require_subcommand(1);

    Flags gen_f, solve_f, sweep_f, analyze_f, table_f;
    int table_id = 2;
    std::vector<double> table_nus;

    auto* gen = app.add_subcommand("gen", "write the cavity system as Matrix Market files plus meta.json");
    gen->add_option("-l,--grid", gen_f.l, "grid count l")->capture_default_str();
    gen->add_option("--nu", gen_f.nu, "viscosity")->capture_default_str();
    gen->add_option("--seed", gen_f.seed, "seed for the manufactured right-hand side");
    gen->add_option("--rhs", gen_f.rhs, "lid | manufactured")->check(CLI::IsMember({"lid", "manufactured"}));
    gen->add_option("--out", gen_f.out, "output directory")->required();

    auto* solve = app.add_subcommand("solve", "single solve; prints the residual history");
    add_experiment_flags(solve, solve_f, true);

    auto* sweep = app.add_subcommand("sweep", "solve for every omega on a grid");
    add_experiment_flags(sweep, sweep_f, true);
    sweep->add_option("--omega-grid", sweep_f.omega_grid, "a:b:step");

    auto* analyze = app.add_subcommand("analyze", "convergence indicator, omega bounds and spectral checks");
    add_experiment_flags(analyze, analyze_f, false);

    auto* table = app.add_subcommand("table", "rerun a results table (2 stationary, 3 GMRES(10), 4 QMR)");
    table->add_option("--id", table_id, "table id: 2, 3 or 4")->check(CLI::IsMember({2, 3, 4}))->capture_default_str();
    table->add_option("-l,--grid", table_f.l, "grid count l")->capture_default_str();
    table->add_option("--nu", table_nus, "viscosities (default 0.1 and 0.001)");
    table->add_option("--tol", table_f.tol, "stopping tolerance")->capture_default_str();
    table->add_option("--max-iters", table_f.max_iters, "iteration cap")->capture_default_str();
    table->add_option("--restart", table_f.restart, "GMRES restart length")->capture_default_str();
    table->add_option("--rhs", table_f.rhs, "lid | manufactured")->check(CLI::IsMember({"lid", "manufactured"}));
    table->add_option("--format", table_f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    table->add_option("--out", table_f.out, "output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) return cmd_gen(gen_f);
        if (*solve) return cmd_solve(solve_f);
        if (*sweep) return cmd_sweep(sweep_f);
        if (*analyze) return cmd_analyze(analyze_f);
        if (*table) return cmd_table(table_f, table_id, table_nus);
    } catch (const sk::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const sk::PositiveDefinitenessViolation& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const sk::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return kExitUsage;
}
