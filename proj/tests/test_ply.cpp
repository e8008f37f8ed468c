#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include "planehec/error.hpp"
#include "planehec/ply.hpp"
#include "test_util.hpp"

namespace planehec {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "planehec_test_ply";
  fs::create_directories(dir);
  return dir / name;
}

ErrorCode parse_code(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_ply(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed without error";
  return ErrorCode::kIo;
}

template <typename T>
void append(std::string& s, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  s.append(buf, sizeof(T));
}

TEST(Ply, AsciiThreePoints) {
  std::istringstream in(
      "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\n"
      "property float x\nproperty float y\nproperty float z\nend_header\n"
      "0 0 1\n1.5 0 1\n0 -2 0.25\n");
  const PointCloud c = parse_ply(in);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.points[1], Eigen::Vector3d(1.5, 0, 1));
  EXPECT_EQ(c.points[2], Eigen::Vector3d(0, -2, 0.25));
}

TEST(Ply, SkipsExtraPropertiesAndElements) {
  std::string text =
      "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
      "property uchar red\nproperty double x\nproperty double y\nproperty double z\n"
      "property float intensity\nelement face 1\nproperty list uchar int vertex_indices\n"
      "end_header\n";
  for (int i = 0; i < 2; ++i) {
    append<std::uint8_t>(text, 200);
    append<double>(text, 0.1 * i);
    append<double>(text, 0.2);
    append<double>(text, 0.3);
    append<float>(text, 1.0f);
  }
  append<std::uint8_t>(text, 3);
  for (int k = 0; k < 3; ++k) append<std::int32_t>(text, k);
  std::istringstream in(text);
  const PointCloud c = parse_ply(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[1], Eigen::Vector3d(0.1, 0.2, 0.3));
}

TEST(Ply, BinaryRoundTripIsExact) {
  testing::Gen g(81);
  PointCloud c;
  for (int i = 0; i < 100000; ++i) c.points.push_back(g.vec3());
  const fs::path p = temp_path("round.ply");
  write_ply(p, c, PlyFormat::kBinaryLittleEndian);
  PlyReadStats stats;
  EXPECT_EQ(parse_ply(p, &stats).points, c.points);
  EXPECT_EQ(stats.vertices, 100000u);
  EXPECT_EQ(stats.dropped_non_finite, 0u);
}

TEST(Ply, AsciiRoundTripIsExact) {
  testing::Gen g(82);
  PointCloud c;
  for (int i = 0; i < 500; ++i) c.points.push_back(g.vec3());
  const fs::path p = temp_path("round_ascii.ply");
  write_ply(p, c, PlyFormat::kAscii);
  EXPECT_EQ(parse_ply(p).points, c.points);
}

TEST(Ply, DropsNonFinitePoints) {
  std::istringstream in(
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\n"
      "property double z\nend_header\n0 0 1\nnan 0 1\n0 inf 1\n");
  PlyReadStats stats;
  const PointCloud c = parse_ply(in, &stats);
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(stats.dropped_non_finite, 2u);
}

TEST(Ply, TruncatedBodies) {
  std::string ascii =
      "ply\nformat ascii 1.0\nelement vertex 100\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n";
  for (int i = 0; i < 90; ++i) ascii += "0 0 1\n";
  EXPECT_EQ(parse_code(ascii), ErrorCode::kParse);

  std::string binary =
      "ply\nformat binary_little_endian 1.0\nelement vertex 100\nproperty float x\n"
      "property float y\nproperty float z\nend_header\n";
  for (int i = 0; i < 90 * 3; ++i) append<float>(binary, 1.0f);
  EXPECT_EQ(parse_code(binary), ErrorCode::kParse);
}

TEST(Ply, MalformedHeaders) {
  EXPECT_EQ(parse_code("not a ply\n"), ErrorCode::kParse);
  EXPECT_EQ(parse_code("ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n"),
            ErrorCode::kParse);
  EXPECT_EQ(parse_code("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"
                       "property float y\nend_header\n0 0\n"),
            ErrorCode::kParse);
  EXPECT_EQ(parse_code("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"),
            ErrorCode::kParse);
  EXPECT_EQ(parse_code("ply\nformat ascii 1.0\nelement vertex 1\nproperty int x\nproperty float y\n"
                       "property float z\nend_header\n1 2 3\n"),
            ErrorCode::kParse);
}

TEST(Ply, ErrorNamesTheLine) {
  std::istringstream in(
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n0 0 1\n0 zero 1\n");
  try {
    parse_ply(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos) << e.what();
  }
}

TEST(Ply, MissingFileIsIoError) {
  try {
    parse_ply(temp_path("does_not_exist.ply"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace planehec
