#include <gtest/gtest.h>

#include <random>

#include "cvchess/board.hpp"

using namespace cvchess;

TEST(Segment, UniformGridRoundTrips) {
  Raster img(400, 400, 3);
  std::mt19937 rng(8);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng());
  const auto crops = segment(img);
  ASSERT_EQ(crops.size(), 64u);
  EXPECT_EQ(square_name(crops[0].square), "a8");
  EXPECT_EQ(square_name(crops[63].square), "h1");
  EXPECT_EQ(assemble(crops), img);
}

TEST(Segment, ShiftedGridResamples) {
  Raster img(400, 400, 3, 0);
  for (int y = 0; y < 400; ++y)
    for (int x = 0; x < 400; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>(((x / 50) + (y / 50)) % 2 ? 200 : 40);
  GridLines g = GridLines::uniform();
  g.vertical[1] = 51.5;
  const auto crops = segment(img, g);
  EXPECT_EQ(crops[0].pixels.width, kCropSize);
  GridLines bad = g;
  bad.vertical[2] = 10;
  EXPECT_THROW(segment(img, bad), ContractViolation);
  EXPECT_THROW(segment(Raster(400, 400, 1), g), ContractViolation);
}

TEST(Square, NamesAndIndices) {
  EXPECT_EQ(parse_square("a8").value, 0);
  EXPECT_EQ(parse_square("h1").value, 63);
  EXPECT_EQ(parse_square("e4").value, 36);
  for (int i = 0; i < 64; ++i) EXPECT_EQ(parse_square(square_name(SquareIndex(i))).value, i);
  EXPECT_THROW(parse_square("i9"), ParseError);
}
