#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "atsp/io.hpp"
#include "atsp/matcore.hpp"
#include "oracles.hpp"

using namespace atsp;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "atsp_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

std::string parse_error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(MatrixMarket, IdentityIngest) {
  const auto p = temp_path("eye.mtx");
  std::ofstream(p) << "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n";
  const InputMatrix x = ingest(p, FileFormat::matrix_market, std::nullopt, false);
  ASSERT_TRUE(std::holds_alternative<SparseMatrix>(x.data));
  EXPECT_EQ(nnz_of(x.data), 2u);
  EXPECT_EQ(to_dense(x.data), DenseMatrix::identity(2));
}

TEST(MatrixMarket, SymmetricExpandsLowerTriangle) {
  std::istringstream is("%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2\n3 1 -1.5\n2 2 4\n");
  const DenseMatrix d = read_matrix_market(is).to_dense();
  EXPECT_EQ(d, DenseMatrix::from_rows({{2, 0, -1.5}, {0, 4, 0}, {-1.5, 0, 0}}));
}

TEST(MatrixMarket, RoundTrip) {
  DenseMatrix m = oracle::random_dense(4, 9, 1);
  for (std::size_t k = 0; k < m.size(); k += 3) m.values()[k] = 0.0;
  const SparseMatrix s = SparseMatrix::from_dense(m);
  std::stringstream ss;
  write_matrix_market(ss, s);
  EXPECT_EQ(read_matrix_market(ss), s);
}

TEST(MatrixMarket, ErrorsCarryLineNumbers) {
  auto parse = [](const std::string& text) {
    return parse_error_of([&] {
      std::istringstream is(text);
      read_matrix_market(is);
    });
  };
  EXPECT_NE(parse("%%MatrixMarket matrix array real general\n2 2\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").find("expected 2"),
            std::string::npos);
  EXPECT_NE(parse("not a banner\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse("").find("line 1"), std::string::npos);
}

TEST(Csv, ZeroMatrix) {
  std::istringstream is("0,0\n0,0");
  EXPECT_EQ(read_csv(is), DenseMatrix(2, 2));
}

TEST(Csv, RoundTripIsBitExact) {
  const DenseMatrix m = oracle::random_dense(5, 7, 2, 1e-3);
  std::stringstream ss;
  write_csv(ss, m);
  EXPECT_EQ(read_csv(ss), m);
}

TEST(Csv, ErrorsCarryLineNumbers) {
  auto parse = [](const std::string& text) {
    return parse_error_of([&] {
      std::istringstream is(text);
      read_csv(is);
    });
  };
  EXPECT_NE(parse("1,2\n3\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse("1,2\n3,abc\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse("1,nan\n").find("line 1"), std::string::npos);
  EXPECT_FALSE(parse("").empty());
}

TEST(Binary, RoundTripIsBitIdentical) {
  DenseMatrix m = oracle::random_dense(6, 11, 3);
  m(0, 0) = -0.0;
  m(1, 1) = 5e-324;
  const auto p = temp_path("m.bin");
  write_matrix(p, AnyMatrix{m}, FileFormat::binary);
  const InputMatrix x = ingest(p, FileFormat::binary, std::nullopt, false);
  const DenseMatrix& back = std::get<DenseMatrix>(x.data);
  ASSERT_EQ(back.rows(), 6u);
  EXPECT_EQ(std::memcmp(back.values().data(), m.values().data(), m.size() * sizeof(double)), 0);
  std::stringstream again;
  write_binary(again, back);
  EXPECT_EQ(again.str(), file_bytes(p));
}

TEST(Binary, HeaderLayout) {
  std::stringstream ss;
  write_binary(ss, DenseMatrix::from_rows({{1.0, 2.0}}));
  const std::string b = ss.str();
  ASSERT_EQ(b.size(), 4u + 4u + 8u + 8u + 16u);
  EXPECT_EQ(b.substr(0, 4), "ATSP");
  EXPECT_EQ(b[4], 1);
  EXPECT_EQ(b[8], 1);
  EXPECT_EQ(b[16], 2);
  double v;
  std::memcpy(&v, b.data() + 32, 8);
  EXPECT_EQ(v, 2.0);
}

TEST(Binary, ErrorsCarryByteOffsets) {
  std::stringstream ok;
  write_binary(ok, DenseMatrix::from_rows({{1.0, 2.0}}));
  const std::string good = ok.str();
  auto parse = [](const std::string& bytes) {
    return parse_error_of([&] {
      std::istringstream is(bytes);
      read_binary(is);
    });
  };
  EXPECT_NE(parse("ATSQ" + good.substr(4)).find("byte 0"), std::string::npos);
  std::string badver = good;
  badver[4] = 2;
  EXPECT_NE(parse(badver).find("byte 4"), std::string::npos);
  EXPECT_NE(parse(good.substr(0, 30)).find("byte 24"), std::string::npos);
  EXPECT_NE(parse(good + "x").find("trailing"), std::string::npos);
  EXPECT_NE(parse(good.substr(0, 10)).find("byte"), std::string::npos);
}

TEST(Ingest, RadiusViolationNamesEntry) {
  const auto p = temp_path("big.csv");
  std::ofstream(p) << "0.5,0\n0,0.1\n";
  try {
    ingest(p, FileFormat::csv, 0.05, true);
    FAIL();
  } catch (const RadiusViolation& e) {
    EXPECT_EQ(e.i, 0u);
    EXPECT_EQ(e.j, 0u);
    EXPECT_EQ(e.value, 0.25);
  }
  EXPECT_NO_THROW(ingest(p, FileFormat::csv, 0.05, false));
  EXPECT_THROW(ingest(temp_path("missing.csv"), FileFormat::csv, std::nullopt, false), ParseError);
}

TEST(Formats, Names) {
  EXPECT_EQ(parse_format("mm"), FileFormat::matrix_market);
  EXPECT_EQ(parse_format("csv"), FileFormat::csv);
  EXPECT_EQ(parse_format("bin"), FileFormat::binary);
  EXPECT_THROW(parse_format("json"), ContractViolation);
}

TEST(Generate, HitsTargetRadius) {
  const InputMatrix x = generate(4, 256, 0.05, 1.0, 9);
  const double r = inf_norm(gram(x.data));
  EXPECT_GE(r, 0.05 - 1e-9);
  EXPECT_LE(r, 0.05 + 1e-9);
  EXPECT_LE(r, 0.05);
  EXPECT_EQ(x.n(), 4u);
  EXPECT_EQ(x.d(), 256u);
}

TEST(Generate, RadiusOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const InputMatrix x = generate(1 + seed % 7, 64, 0.01 + 0.001 * double(seed), seed % 2 ? 1.0 : 0.3, seed);
    const double r = inf_norm(gram(x.data));
    EXPECT_NEAR(r, 0.01 + 0.001 * double(seed), 1e-9);
  }
}

TEST(Generate, DensityControlsNnz) {
  const InputMatrix full = generate(32, 4096, 0.05, 1.0, 3);
  const InputMatrix sparse = generate(32, 4096, 0.05, 0.01, 3);
  const double ratio = double(nnz_of(sparse.data)) / double(nnz_of(full.data));
  EXPECT_NEAR(ratio, 0.01, 0.002);
}

TEST(Generate, SameSeedSameBytes) {
  const auto a = temp_path("g1.bin"), b = temp_path("g2.bin");
  write_matrix(a, generate(8, 100, 0.05, 0.5, 4).data, FileFormat::binary);
  write_matrix(b, generate(8, 100, 0.05, 0.5, 4).data, FileFormat::binary);
  EXPECT_EQ(file_bytes(a), file_bytes(b));
  const auto c = temp_path("g1.mtx"), d = temp_path("g2.mtx");
  write_matrix(c, generate(8, 100, 0.05, 0.5, 4).data, FileFormat::matrix_market);
  write_matrix(d, generate(8, 100, 0.05, 0.5, 4).data, FileFormat::matrix_market);
  EXPECT_EQ(file_bytes(c), file_bytes(d));
}

TEST(Generate, RejectsDegenerateRequests) {
  EXPECT_THROW(generate(10, 5, 0.05, 1.0, 1), ContractViolation);
  EXPECT_THROW(generate(2, 5, 0.1, 1.0, 1), ContractViolation);
  EXPECT_THROW(generate(2, 5, 0.05, 0.0, 1), ContractViolation);
  EXPECT_THROW(generate(2, 5, 0.05, 1.5, 1), ContractViolation);
}
