#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "atsp/error.hpp"
#include "atsp/matrix.hpp"
#include "atsp/sparsifier.hpp"

namespace atsp {

enum class FileFormat { matrix_market, csv, binary };

FileFormat parse_format(const std::string& name);  // "mm" | "csv" | "bin"
const char* to_string(FileFormat f);

/// Malformed input; the message carries the line (text formats) or byte
/// offset (binary format) of the problem.
class ParseError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

// Binary layout: "ATSP", u32 version (= 1), u64 rows, u64 cols, then
// rows * cols IEEE-754 doubles in row-major order. Everything little endian.
inline constexpr std::uint32_t kBinaryVersion = 1;

void write_binary(std::ostream& os, const DenseMatrix& m);
DenseMatrix read_binary(std::istream& is);

/// "coordinate real general" or "coordinate real symmetric".
SparseMatrix read_matrix_market(std::istream& is);
void write_matrix_market(std::ostream& os, const SparseMatrix& m);

/// Dense rows, comma separated, '.' decimal point, no header.
DenseMatrix read_csv(std::istream& is);
void write_csv(std::ostream& os, const DenseMatrix& m);

AnyMatrix read_matrix(const std::filesystem::path& path, FileFormat format);
void write_matrix(const std::filesystem::path& path, const AnyMatrix& m, FileFormat format);

/// Reads X; matrix-market input stays sparse, others are dense.
InputMatrix ingest(const std::filesystem::path& path, FileFormat format, std::optional<double> radius,
                   bool validate_radius);

/// Gaussian (density 1) or sparse Gaussian n x d matrix rescaled so that
/// ||X X^T||_inf equals r_target.
InputMatrix generate(std::size_t n, std::size_t d, double r_target, double density, std::uint64_t seed);

}  // namespace atsp
