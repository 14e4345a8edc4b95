#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "actalign/tensor_io.hpp"
#include "test_support.hpp"

using namespace actalign;
using actalign::testing::TempDir;

TEST(TensorIo, HeaderLayoutIsLittleEndian) {
  MatrixD m(2, 3, 0.5);
  const auto bytes = encode_tensor(m);
  ASSERT_EQ(bytes.size(), kTensorHeaderBytes + 6 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "AALN");
  const unsigned char expected[] = {1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data() + 4, expected, sizeof expected), 0);
  // 0.5f = 0x3F000000
  const unsigned char half[] = {0x00, 0x00, 0x00, 0x3F};
  EXPECT_EQ(std::memcmp(bytes.data() + kTensorHeaderBytes, half, 4), 0);
}

TEST(TensorIo, RoundTripIsBitExactForFloatValues) {
  TempDir dir;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t rows = 1 + rng() % 20;
    const std::size_t cols = 1 + rng() % 16;
    MatrixD m(rows, cols);
    for (double& x : m.data()) {
      const auto bits = static_cast<std::uint32_t>(rng());
      float f = std::bit_cast<float>(bits);
      if (!std::isfinite(f)) f = 1.25f;
      x = f;
    }
    const auto path = dir / "t.aaln";
    write_tensor(path, m);
    const auto back = read_tensor(path);
    ASSERT_EQ(back.rows(), rows);
    ASSERT_EQ(back.cols(), cols);
    for (std::size_t i = 0; i < m.data().size(); ++i) {
      ASSERT_EQ(std::bit_cast<std::uint64_t>(m.data()[i]), std::bit_cast<std::uint64_t>(back.data()[i]));
    }
  }
}

TEST(TensorIo, RejectsBadMagic) {
  auto bytes = encode_tensor(MatrixD(1, 1, 1.0));
  bytes[0] = 'X';
  EXPECT_THROW(decode_tensor(bytes, "x"), ValidationError);
}

TEST(TensorIo, RejectsTruncatedPayload) {
  auto bytes = encode_tensor(MatrixD(3, 2, 1.0));
  bytes.pop_back();
  EXPECT_THROW(decode_tensor(bytes, "x"), ValidationError);
  EXPECT_THROW(decode_tensor("AAL", "x"), ValidationError);
}

TEST(TensorIo, RejectsUnknownDtypeAndVersion) {
  auto bytes = encode_tensor(MatrixD(1, 1, 1.0));
  auto bad_dtype = bytes;
  bad_dtype[16] = 3;
  EXPECT_THROW(decode_tensor(bad_dtype, "x"), ValidationError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW(decode_tensor(bad_version, "x"), ValidationError);
}

TEST(TensorIo, MissingFileIsValidationError) {
  EXPECT_THROW(read_tensor("/nonexistent/file.aaln"), ValidationError);
}
