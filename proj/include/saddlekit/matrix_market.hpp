#pragma once

// Coordinate-format ("%%MatrixMarket matrix coordinate real general") text I/O,
// 1-based indices. Only nonzero entries are written.

#include <filesystem>
#include <iosfwd>

#include "saddlekit/linalg.hpp"

namespace saddlekit::mm {

void write(std::ostream& out, const Matrix& a);
void write(const std::filesystem::path& path, const Matrix& a);

Matrix read(std::istream& in);
Matrix read(const std::filesystem::path& path);

}  // namespace saddlekit::mm
