#include "atsp/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "atsp/matcore.hpp"
#include "atsp/rng.hpp"

namespace atsp {

FileFormat parse_format(const std::string& name) {
  if (name == "mm") return FileFormat::matrix_market;
  if (name == "csv") return FileFormat::csv;
  if (name == "bin") return FileFormat::binary;
  throw ContractViolation("unknown format '" + name + "' (expected mm, csv or bin)");
}

const char* to_string(FileFormat f) {
  switch (f) {
    case FileFormat::matrix_market:
      return "mm";
    case FileFormat::csv:
      return "csv";
    case FileFormat::binary:
      return "bin";
  }
  return "unknown";
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  os.write(b.data(), b.size());
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  os.write(b.data(), b.size());
}

std::uint64_t get_le(std::istream& is, int bytes, std::uint64_t& offset, const char* what) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), bytes);
  if (is.gcount() != bytes) {
    throw ParseError("binary matrix: truncated " + std::string(what) + " at byte " + std::to_string(offset));
  }
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  offset += static_cast<std::uint64_t>(bytes);
  return v;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_double(const std::string& token, std::size_t line, const char* where) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || token.empty()) {
    throw ParseError(std::string(where) + ": line " + std::to_string(line) + ": cannot parse number '" + token + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(std::string(where) + ": line " + std::to_string(line) + ": non-finite value '" + token + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& token, std::size_t line, const char* where) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError(std::string(where) + ": line " + std::to_string(line) + ": cannot parse integer '" + token +
                     "'");
  }
  return v;
}

std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

void write_binary(std::ostream& os, const DenseMatrix& m) {
  os.write("ATSP", 4);
  put_u32(os, kBinaryVersion);
  put_u64(os, m.rows());
  put_u64(os, m.cols());
  for (double v : m.values()) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

DenseMatrix read_binary(std::istream& is) {
  std::uint64_t offset = 0;
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (is.gcount() != 4 || std::memcmp(magic.data(), "ATSP", 4) != 0) {
    throw ParseError("binary matrix: bad magic at byte 0 (expected \"ATSP\")");
  }
  offset = 4;
  const auto version = get_le(is, 4, offset, "version");
  if (version != kBinaryVersion) {
    throw ParseError("binary matrix: unsupported version " + std::to_string(version) + " at byte 4");
  }
  const auto rows = get_le(is, 8, offset, "row count");
  const auto cols = get_le(is, 8, offset, "column count");
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) {
    throw ParseError("binary matrix: implausible shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " at byte 8");
  }
  std::vector<double> values(rows * cols);
  for (auto& v : values) {
    const std::uint64_t at = offset;
    v = std::bit_cast<double>(get_le(is, 8, offset, "value"));
    if (!std::isfinite(v)) throw ParseError("binary matrix: non-finite value at byte " + std::to_string(at));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ParseError("binary matrix: trailing data at byte " + std::to_string(offset));
  }
  return DenseMatrix(rows, cols, std::move(values));
}

SparseMatrix read_matrix_market(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError("matrix market: line 1: empty file");
  ++lineno;
  {
    std::istringstream hs(lower(trim(line)));
    std::string banner, object, layout, field, symmetry;
    hs >> banner >> object >> layout >> field >> symmetry;
    if (banner != "%%matrixmarket" || object != "matrix") {
      throw ParseError("matrix market: line 1: missing %%MatrixMarket matrix banner");
    }
    if (layout != "coordinate" || field != "real" || (symmetry != "general" && symmetry != "symmetric")) {
      throw ParseError("matrix market: line 1: only 'coordinate real general|symmetric' is supported");
    }
    const bool symmetric = symmetry == "symmetric";

    std::uint64_t rows = 0, cols = 0, entries = 0;
    bool have_size = false;
    std::vector<Triplet> triplets;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '%') continue;
      std::istringstream ls(t);
      std::vector<std::string> tok;
      for (std::string s; ls >> s;) tok.push_back(s);
      if (!have_size) {
        if (tok.size() != 3) throw ParseError("matrix market: line " + std::to_string(lineno) + ": expected 'rows cols nnz'");
        rows = parse_count(tok[0], lineno, "matrix market");
        cols = parse_count(tok[1], lineno, "matrix market");
        entries = parse_count(tok[2], lineno, "matrix market");
        if (symmetric && rows != cols) {
          throw ParseError("matrix market: line " + std::to_string(lineno) + ": symmetric matrix must be square");
        }
        triplets.reserve(symmetric ? 2 * entries : entries);
        have_size = true;
        continue;
      }
      if (tok.size() != 3) throw ParseError("matrix market: line " + std::to_string(lineno) + ": expected 'row col value'");
      const auto r = parse_count(tok[0], lineno, "matrix market");
      const auto c = parse_count(tok[1], lineno, "matrix market");
      const double v = parse_double(tok[2], lineno, "matrix market");
      if (r < 1 || r > rows || c < 1 || c > cols) {
        throw ParseError("matrix market: line " + std::to_string(lineno) + ": index (" + tok[0] + ", " + tok[1] +
                         ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
      }
      triplets.push_back({r - 1, c - 1, v});
      if (symmetric && r != c) triplets.push_back({c - 1, r - 1, v});
      if (triplets.size() > (symmetric ? 2 * entries : entries)) {
        throw ParseError("matrix market: line " + std::to_string(lineno) + ": more entries than declared");
      }
    }
    if (!have_size) throw ParseError("matrix market: line " + std::to_string(lineno) + ": missing size line");
    std::size_t declared = 0;
    for (const auto& tr : triplets) declared += (symmetric && tr.row < tr.col) ? 0 : 1;
    if (declared != entries) {
      throw ParseError("matrix market: line " + std::to_string(lineno) + ": expected " + std::to_string(entries) +
                       " entries, found " + std::to_string(declared));
    }
    return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
  }
}

void write_matrix_market(std::ostream& os, const SparseMatrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto idx = m.row_indices(i);
    const auto val = m.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) os << (i + 1) << ' ' << (idx[k] + 1) << ' ' << format_double(val[k]) << '\n';
  }
}

DenseMatrix read_csv(std::istream& is) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t lineno = 0;
  std::string line;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    for (;;) {
      const auto comma = t.find(',', start);
      const std::string token = trim(t.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      values.push_back(parse_double(token, lineno, "csv"));
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError("csv: line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " fields, found " +
                       std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("csv: line " + std::to_string(lineno) + ": no data");
  return DenseMatrix(rows, cols, std::move(values));
}

void write_csv(std::ostream& os, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

AnyMatrix read_matrix(const std::filesystem::path& path, FileFormat format) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open '" + path.string() + "'");
  switch (format) {
    case FileFormat::matrix_market:
      return read_matrix_market(is);
    case FileFormat::csv:
      return read_csv(is);
    case FileFormat::binary:
      return read_binary(is);
  }
  throw ContractViolation("read_matrix: unknown format");
}

void write_matrix(const std::filesystem::path& path, const AnyMatrix& m, FileFormat format) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ContractViolation("cannot write '" + path.string() + "'");
  switch (format) {
    case FileFormat::matrix_market:
      if (const auto* s = std::get_if<SparseMatrix>(&m)) {
        write_matrix_market(os, *s);
      } else {
        write_matrix_market(os, SparseMatrix::from_dense(std::get<DenseMatrix>(m)));
      }
      break;
    case FileFormat::csv:
      write_csv(os, to_dense(m));
      break;
    case FileFormat::binary:
      write_binary(os, to_dense(m));
      break;
  }
  if (!os) throw ContractViolation("failed writing '" + path.string() + "'");
}

InputMatrix ingest(const std::filesystem::path& path, FileFormat format, std::optional<double> radius,
                   bool validate_radius) {
  return make_input(read_matrix(path, format), radius, validate_radius);
}

InputMatrix generate(std::size_t n, std::size_t d, double r_target, double density, std::uint64_t seed) {
  require(n >= 1, "generate: n must be positive");
  require(d >= n, "generate: need d >= n (got n = " + std::to_string(n) + ", d = " + std::to_string(d) + ")");
  require(r_target > 0.0 && r_target < 0.1, "generate: r_target must lie in (0, 0.1)");
  require(density > 0.0 && density <= 1.0, "generate: density must lie in (0, 1]");

  const std::uint64_t base = derive_seed(seed, "generate");
  AnyMatrix raw;
  if (density >= 1.0) {
    DenseMatrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      GaussianSampler g(derive_seed(base, static_cast<std::uint64_t>(i)));
      for (double& v : x.row(i)) v = g.next();
    }
    raw = std::move(x);
  } else {
    std::vector<Triplet> entries;
    for (std::size_t i = 0; i < n; ++i) {
      SplitMix64 mask(derive_seed(base, "mask/" + std::to_string(i)));
      GaussianSampler g(derive_seed(base, static_cast<std::uint64_t>(i)));
      for (std::size_t j = 0; j < d; ++j) {
        if (mask.uniform() < density) {
          const double v = g.next();
          if (v != 0.0) entries.push_back({i, j, v});
        }
      }
    }
    raw = SparseMatrix::from_triplets(n, d, std::move(entries));
  }

  const double g_inf = inf_norm(gram(raw));
  if (g_inf == 0.0) return make_input(std::move(raw), r_target, false);

  auto rescaled = [&](double scale) -> AnyMatrix {
    if (const auto* dm = std::get_if<DenseMatrix>(&raw)) {
      DenseMatrix m = *dm;
      for (double& v : m.values()) v *= scale;
      return m;
    }
    const auto& sm = std::get<SparseMatrix>(raw);
    std::vector<Triplet> scaled;
    scaled.reserve(sm.nnz());
    for (std::size_t i = 0; i < sm.rows(); ++i) {
      const auto idx = sm.row_indices(i);
      const auto val = sm.row_values(i);
      for (std::size_t k = 0; k < idx.size(); ++k) scaled.push_back({i, idx[k], val[k] * scale});
    }
    return SparseMatrix::from_triplets(sm.rows(), sm.cols(), std::move(scaled));
  };

  // Rounding can land a hair above the target; nudge down so the result
  // always passes radius validation at r_target.
  double scale = std::sqrt(r_target / g_inf);
  AnyMatrix x = rescaled(scale);
  for (int attempt = 0; attempt < 16 && inf_norm(gram(x)) > r_target; ++attempt) {
    scale *= 1.0 - 0x1.0p-50;
    x = rescaled(scale);
  }
  return make_input(std::move(x), r_target, false);
}

}  // namespace atsp
