#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "cvchess/board.hpp"
#include "cvchess/synth.hpp"

using namespace cvchess;

namespace {

// Largest per-channel variance.
double crop_variance(const Raster& r) {
  double worst = 0;
  for (int c = 0; c < r.channels; ++c) {
    double sum = 0, sq = 0;
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x) {
        const double v = r.at(x, y, c);
        sum += v;
        sq += v * v;
      }
    const double n = double(r.width) * r.height;
    worst = std::max(worst, sq / n - (sum / n) * (sum / n));
  }
  return worst;
}

}  // namespace

TEST(Synth, EmptyCanonicalSquaresAreFlat) {
  const auto crops = segment(render_canonical(BoardState{}));
  for (int s = 0; s < 64; ++s) EXPECT_LT(crop_variance(crops[s].pixels), 1.0) << square_name(SquareIndex(s));
}

TEST(Synth, SquareColoursAlternate) {
  RenderSpec spec;
  const auto crops = segment(render_canonical(BoardState{}, spec));
  // a8 is a light square.
  EXPECT_NEAR(crops[0].pixels.at(25, 25, 0), spec.light[0], 1.0);
  EXPECT_NEAR(crops[1].pixels.at(25, 25, 0), spec.dark[0], 1.0);
  EXPECT_NEAR(crops[63].pixels.at(25, 25, 0), spec.light[0], 1.0);
}

TEST(Synth, SamplesAreDeterministic) {
  const SynthSample a = synth_sample(11, 4, 2), b = synth_sample(11, 4, 2);
  EXPECT_EQ(a.rendered.image, b.rendered.image);
  EXPECT_EQ(a.fen, b.fen);
  EXPECT_EQ(a.image_name, b.image_name);
  EXPECT_NE(synth_sample(12, 4, 2).rendered.image, a.rendered.image);
}

TEST(Synth, ViewsShareAPlacement) {
  const std::string fen = synth_sample(3, 7, 0).fen;
  for (int v = 1; v < 5; ++v) EXPECT_EQ(synth_sample(3, 7, v).fen, fen);
  EXPECT_EQ(fen, fen_compress(synth_placement(3, 7)) + " " + std::string(kDefaultFenSuffix));
}

TEST(Synth, GroundTruthCornersAreInsideTheImage) {
  for (int v = 0; v < 5; ++v) {
    const SynthSample s = synth_sample(5, 1, v);
    EXPECT_GT(s.rendered.corners.signed_area(), 0);
    for (const auto& p : s.rendered.corners.corners) {
      EXPECT_GE(p.x, 0);
      EXPECT_GE(p.y, 0);
      EXPECT_LT(p.x, s.rendered.image.width);
      EXPECT_LT(p.y, s.rendered.image.height);
    }
  }
}

TEST(Synth, DatasetCountsAndSplits) {
  const SynthDataset ds = make_dataset(10, 5, 21);
  ASSERT_EQ(ds.manifest.entries.size(), 50u);
  EXPECT_EQ(ds.labels.size(), 50u);
  EXPECT_EQ(unique_positions(ds.labels), 10u);
  std::size_t squares = 0;
  for (auto c : ds.class_histogram) squares += c;
  EXPECT_EQ(squares, 50u * 64);
  // Every view of a board lands in the same split.
  for (std::size_t b = 0; b < 10; ++b)
    for (std::size_t v = 1; v < 5; ++v) EXPECT_EQ(ds.manifest.entries[b * 5 + v].split, ds.manifest.entries[b * 5].split);
  const SplitCounts c = count_splits(ds.manifest);
  EXPECT_EQ(c.train, 30u);
  EXPECT_EQ(c.val, 10u);
  EXPECT_EQ(c.test, 10u);
}

TEST(Synth, DatasetOnDiskIngests) {
  const auto dir = std::filesystem::temp_directory_path() / "cvchess_synth_test";
  std::filesystem::remove_all(dir);
  const SynthDataset ds = make_dataset(3, 2, 8, {}, dir);
  EXPECT_EQ(read_labels(dir / "label.json"), ds.labels);
  const auto res = ingest_annotations_file(dir / "label.json", dir);
  EXPECT_TRUE(res.warnings.empty());
  EXPECT_EQ(res.manifest.entries.size(), 6u);
  EXPECT_EQ(load_manifest(dir / "manifest.json"), ds.manifest);
  for (int b = 0; b < 3; ++b)
    for (int v = 0; v < 2; ++v) {
      const SynthSample s = synth_sample(8, b, v);
      EXPECT_EQ(load_ppm(dir / s.image_name), s.rendered.image);
    }
  std::filesystem::remove_all(dir);
}
