#include "saddlekit/problem.hpp"

#include <fstream>
#include <string>

#include <json.hpp>

#include "saddlekit/error.hpp"
#include "saddlekit/matrix_market.hpp"
#include "saddlekit/random.hpp"

namespace saddlekit {

SaddleSystem::SaddleSystem(Matrix w, Matrix b, Vector f, Vector g, ProblemMeta meta) {
    if (w.rows() != w.cols()) throw InvalidArgument("SaddleSystem: W must be square");
    if (b.cols() != w.rows()) throw InvalidArgument("SaddleSystem: B must have n columns");
    if (f.size() != w.rows() || g.size() != b.rows()) {
        throw InvalidArgument("SaddleSystem: right-hand side does not match block sizes");
    }
    if (!w.allFinite() || !b.allFinite() || !f.allFinite() || !g.allFinite()) {
        throw InvalidArgument("SaddleSystem: non-finite entries");
    }
    if (meta.nu <= 0.0 || meta.h <= 0.0) throw InvalidArgument("SaddleSystem: nu and h must be positive");
    auto data = std::make_shared<Data>();
    data->w_sparse = w.sparseView();
    data->b_sparse = b.sparseView();
    data->w = std::move(w);
    data->b = std::move(b);
    data->f = std::move(f);
    data->g = std::move(g);
    data->meta = meta;
    data_ = std::move(data);
}

Vector SaddleSystem::rhs() const {
    Vector b(size());
    b << f(), g();
    return b;
}

Matrix SaddleSystem::matrix() const {
    Matrix a = Matrix::Zero(size(), size());
    a.topLeftCorner(n(), n()) = W();
    a.topRightCorner(n(), m()) = B().transpose();
    a.bottomLeftCorner(m(), n()) = -B();
    return a;
}

Vector SaddleSystem::apply(const Vector& x) const {
    if (x.size() != size()) throw InvalidArgument("SaddleSystem::apply: dimension mismatch");
    Vector y(size());
    const auto u = x.head(n());
    const auto p = x.tail(m());
    y.head(n()).noalias() = W_sparse() * u;
    y.head(n()).noalias() += B_sparse().transpose() * p;
    y.tail(m()).noalias() = -(B_sparse() * u);
    return y;
}

Vector SaddleSystem::apply_transpose(const Vector& x) const {
    if (x.size() != size()) throw InvalidArgument("SaddleSystem::apply_transpose: dimension mismatch");
    Vector y(size());
    const auto u = x.head(n());
    const auto p = x.tail(m());
    y.head(n()).noalias() = W_sparse().transpose() * u;
    y.head(n()).noalias() -= B_sparse().transpose() * p;
    y.tail(m()).noalias() = B_sparse() * u;
    return y;
}

double SaddleSystem::relative_residual(const Vector& x) const {
    const Vector b = rhs();
    const double r = (b - apply(x)).norm();
    const double nb = b.norm();
    if (nb == 0.0) return r == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return r / nb;
}

SaddleSystem SaddleSystem::with_rhs(const Vector& b) const {
    if (b.size() != size()) throw InvalidArgument("SaddleSystem::with_rhs: dimension mismatch");
    SaddleSystem copy = *this;
    auto data = std::make_shared<Data>(*data_);
    data->f = b.head(n());
    data->g = b.tail(m());
    copy.data_ = std::move(data);
    return copy;
}

Splitting split(const Matrix& w) {
    if (w.rows() != w.cols()) throw InvalidArgument("split: W must be square");
    Splitting s;
    s.H = 0.5 * (w + w.transpose());
    s.S = 0.5 * (w - w.transpose());
    s.L_s = s.S.triangularView<Eigen::StrictlyLower>();
    s.U_s = s.S.triangularView<Eigen::StrictlyUpper>();
    return s;
}

Vector manufactured_rhs(const SaddleSystem& system, const Vector& x_star) {
    return system.apply(x_star);
}

Vector make_consistent_rhs(const SaddleSystem& system, RhsMode mode, std::uint64_t seed) {
    if (mode == RhsMode::manufactured) {
        Rng rng(seed);
        return manufactured_rhs(system, rng.uniform_vector(system.size(), -1.0, 1.0));
    }
    // W is nonsingular, so null(A^T) = {(0; p) : B^T p = 0} and range(A) is its
    // orthogonal complement: only the constraint part g needs projecting.
    const SvdFactors f = svd(system.B(), SvdMode::full);
    const Vector& sigma = f.singular_values;
    Index rank = 0;
    if (sigma.size() > 0 && sigma(0) > 0.0) {
        while (rank < sigma.size() && sigma(rank) > kDefaultRankTol * sigma(0)) ++rank;
    }
    const Matrix left_null = f.U.rightCols(system.m() - rank);
    Vector b = system.rhs();
    b.tail(system.m()) -= left_null * (left_null.transpose() * system.g());
    return b;
}

namespace {

double wind_x(double x, double y) { return 8.0 * x * (x - 1.0) * (1.0 - 2.0 * y); }
double wind_y(double x, double y) { return 8.0 * y * (2.0 * x - 1.0) * (y - 1.0); }

// Unknown numbering. u lives on interior vertical edges (x = i h, y = (j + 1/2) h),
// v on interior horizontal edges (x = (i + 1/2) h, y = j h), p at cell centres.
struct MacGrid {
    int l;
    double h;

    Index n_half() const { return static_cast<Index>(l) * (l - 1); }
    Index u_index(int i, int j) const { return static_cast<Index>(j) * (l - 1) + (i - 1); }
    Index v_index(int i, int j) const { return n_half() + static_cast<Index>(j - 1) * l + i; }
    Index cell(int i, int j) const { return static_cast<Index>(j) * l + i; }
    bool u_interior(int i, int j) const { return i >= 1 && i <= l - 1 && j >= 0 && j <= l - 1; }
    bool v_interior(int i, int j) const { return i >= 0 && i <= l - 1 && j >= 1 && j <= l - 1; }
};

struct Neighbor {
    int di, dj;
};
constexpr Neighbor kNeighbors[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

// One momentum component on the staggered grid. `normal_x` is true for u.
// Diffusion: five-point stencil; a missing neighbour across a wall parallel to
// the component is a ghost value (wall data doubled), across a wall normal to
// it the neighbour is an exact boundary node. Convection: centred, with the
// wind evaluated on the face between the two nodes, which makes N exactly skew.
void assemble_component(const MacGrid& grid, double nu, bool normal_x, Matrix& w, Vector& f) {
    const int l = grid.l;
    const double h = grid.h;
    const int i_lo = normal_x ? 1 : 0, i_hi = normal_x ? l - 1 : l - 1;
    const int j_lo = normal_x ? 0 : 1, j_hi = normal_x ? l - 1 : l - 1;
    for (int j = j_lo; j <= j_hi; ++j) {
        for (int i = i_lo; i <= i_hi; ++i) {
            const double x = normal_x ? i * h : (i + 0.5) * h;
            const double y = normal_x ? (j + 0.5) * h : j * h;
            const Index row = normal_x ? grid.u_index(i, j) : grid.v_index(i, j);
            double diag = 0.0;
            for (const auto [di, dj] : kNeighbors) {
                const int ii = i + di, jj = j + dj;
                const double fx = x + 0.5 * h * di, fy = y + 0.5 * h * dj;
                const double face_wind = di != 0 ? wind_x(fx, fy) : wind_y(fx, fy);
                const double conv = 0.5 * h * (di + dj) * face_wind;
                const bool interior = normal_x ? grid.u_interior(ii, jj) : grid.v_interior(ii, jj);
                if (interior) {
                    const Index col = normal_x ? grid.u_index(ii, jj) : grid.v_index(ii, jj);
                    w(row, col) += -nu + conv;
                    diag += nu;
                    continue;
                }
                const bool across_parallel_wall = normal_x ? (dj != 0) : (di != 0);
                // Only the lid y = 1 carries nonzero data, and only for u.
                const double wall_value = (normal_x && jj == l) ? 1.0 : 0.0;
                if (across_parallel_wall) {
                    // ghost = 2 * wall - interior
                    diag += 2.0 * nu;
                    f(row) += 2.0 * nu * wall_value;
                    w(row, row) -= conv;
                    f(row) -= 2.0 * conv * wall_value;
                } else {
                    diag += nu;
                    f(row) += nu * wall_value - conv * wall_value;
                }
            }
            w(row, row) += diag;
        }
    }
}

SaddleSystem assemble_oseen(int l, double nu) {
    if (l < 4) throw InvalidArgument("build_oseen: grid too coarse (l = " + std::to_string(l) + " < 4)");
    if (!(nu > 0.0)) throw InvalidArgument("build_oseen: viscosity must be positive");
    const MacGrid grid{l, 1.0 / l};
    const Index n = 2 * grid.n_half();
    const Index m = static_cast<Index>(l) * l;
    Matrix w = Matrix::Zero(n, n);
    Matrix b = Matrix::Zero(m, n);
    Vector f = Vector::Zero(n);
    assemble_component(grid, nu, true, w, f);
    assemble_component(grid, nu, false, w, f);

    // Centred divergence, entries +-1/h; B^T is the matching gradient.
    const double inv_h = 1.0 / grid.h;
    for (int j = 0; j < l; ++j) {
        for (int i = 1; i < l; ++i) {
            const Index col = grid.u_index(i, j);
            b(grid.cell(i, j), col) = inv_h;
            b(grid.cell(i - 1, j), col) = -inv_h;
        }
    }
    for (int j = 1; j < l; ++j) {
        for (int i = 0; i < l; ++i) {
            const Index col = grid.v_index(i, j);
            b(grid.cell(i, j), col) = inv_h;
            b(grid.cell(i, j - 1), col) = -inv_h;
        }
    }
    return SaddleSystem(std::move(w), std::move(b), std::move(f), Vector::Zero(m), {l, nu, grid.h});
}

}  // namespace

Vector oseen_load(int l, double nu) { return assemble_oseen(l, nu).rhs(); }

SaddleSystem build_oseen(int l, double nu, RhsMode mode, std::uint64_t seed) {
    const SaddleSystem raw = assemble_oseen(l, nu);
    return raw.with_rhs(make_consistent_rhs(raw, mode, seed));
}

SaddleSystem build_random_singular(Index n, Index m, Index rank_b, std::uint64_t seed) {
    if (!(n >= 1 && m >= 1 && m <= n && rank_b >= 0 && rank_b < m)) {
        throw InvalidArgument("build_random_singular: need 0 <= rank_b < m <= n");
    }
    Rng rng(seed);
    Matrix sym = 0.3 * rng.normal_matrix(n, n);
    sym = 0.5 * (sym + sym.transpose()).eval();
    for (Index i = 0; i < n; ++i) {
        const double off = sym.row(i).cwiseAbs().sum() - std::abs(sym(i, i));
        sym(i, i) = off + rng.uniform(0.5, 2.0);
    }
    const double skew_scale = rng.uniform(0.0, 2.0);
    const Matrix g = skew_scale * rng.normal_matrix(n, n);
    const Matrix w = sym + 0.5 * (g - g.transpose());

    Matrix b = Matrix::Zero(m, n);
    if (rank_b > 0) b = rng.normal_matrix(m, rank_b) * rng.normal_matrix(rank_b, n);

    const SaddleSystem raw(w, b, Vector::Zero(n), Vector::Zero(m));
    return raw.with_rhs(make_consistent_rhs(raw, RhsMode::manufactured, seed));
}

void export_system(const SaddleSystem& system, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("export: cannot create " + dir.string() + ": " + ec.message());
    mm::write(dir / "W.mtx", system.W());
    mm::write(dir / "B.mtx", system.B());
    mm::write(dir / "f.mtx", Matrix(system.f()));
    mm::write(dir / "g.mtx", Matrix(system.g()));
    const nlohmann::json meta = {{"l", system.meta().l},
                                 {"nu", system.meta().nu},
                                 {"n", system.n()},
                                 {"m", system.m()}};
    std::ofstream out(dir / "meta.json");
    if (!out) throw IoError("export: cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
}

}  // namespace saddlekit
