#include "saddlekit/matrix_market.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "saddlekit/error.hpp"

namespace saddlekit::mm {

namespace {
constexpr const char* kBanner = "%%MatrixMarket matrix coordinate real general";
}

void write(std::ostream& out, const Matrix& a) {
    Index nnz = 0;
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (a(i, j) != 0.0) ++nnz;

    out << kBanner << '\n' << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
    out << std::setprecision(17);
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (a(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << a(i, j) << '\n';
    if (!out) throw IoError("matrix market: write failed");
}

void write(const std::filesystem::path& path, const Matrix& a) {
    std::ofstream out(path);
    if (!out) throw IoError("matrix market: cannot open " + path.string() + " for writing");
    write(out, a);
}

Matrix read(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0) {
        throw IoError("matrix market: missing banner");
    }
    {
        std::istringstream banner(line);
        std::string tag, object, format, field, symmetry;
        banner >> tag >> object >> format >> field >> symmetry;
        if (object != "matrix" || format != "coordinate" || field != "real" || symmetry != "general") {
            throw IoError("matrix market: unsupported header '" + line + "'");
        }
    }
    while (std::getline(in, line) && (line.empty() || line[0] == '%')) {
    }
    Index rows = 0, cols = 0, nnz = 0;
    {
        std::istringstream size(line);
        if (!(size >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0) {
            throw IoError("matrix market: bad size line '" + line + "'");
        }
    }
    Matrix a = Matrix::Zero(rows, cols);
    for (Index k = 0; k < nnz; ++k) {
        Index i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v)) throw IoError("matrix market: truncated entry list");
        if (i < 1 || i > rows || j < 1 || j > cols) {
            throw IoError("matrix market: index out of range at entry " + std::to_string(k + 1));
        }
        a(i - 1, j - 1) += v;
    }
    return a;
}

Matrix read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("matrix market: cannot open " + path.string());
    return read(in);
}

}  // namespace saddlekit::mm
