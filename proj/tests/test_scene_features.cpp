#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "affordance/scene_features.hpp"

using namespace affordance;

namespace {

Image stripes(int w, int h, bool vertical) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img(x, y) = ((vertical ? x : y) / 20) % 2 ? 0.9 : 0.1;
  }
  return img;
}

Image blob(int w, int h) {
  Image img(w, h, 0.2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (std::hypot(x - 0.3 * w, y - 0.7 * h) < 0.2 * h) img(x, y) = 1.0;
    }
  }
  return img;
}

}  // namespace

TEST(MakeCrops, CenteredSquares) {
  const CropSpec c = make_crops(640, 480, {320, 240});
  EXPECT_EQ(c.full, (CropRect{80, 0, 480, 480, false}));
  EXPECT_EQ(c.half, (CropRect{200, 120, 240, 240, false}));
  EXPECT_EQ(c.whole, (CropRect{0, 0, 640, 480, false}));
}

TEST(MakeCrops, CornerShiftsWindowInside) {
  const CropSpec c = make_crops(640, 480, {0, 0});
  EXPECT_EQ(c.full, (CropRect{0, 0, 480, 480, true}));
  EXPECT_EQ(c.half, (CropRect{0, 0, 240, 240, true}));
  EXPECT_EQ(c.whole, (CropRect{0, 0, 640, 480, false}));
}

TEST(MakeCrops, PortraitImageShrinksFullCropToWidth) {
  const CropSpec c = make_crops(300, 500, {150, 250});
  EXPECT_EQ(c.full.width, 300);
  EXPECT_EQ(c.full.height, 500);
  EXPECT_TRUE(c.full.clamped);
}

TEST(MakeCrops, WholeCropAndPurityEverywhere) {
  for (double x : {0.0, 17.5, 639.9}) {
    for (double y : {0.0, 240.0, 479.0}) {
      const CropSpec c = make_crops(640, 480, {x, y});
      EXPECT_EQ(c.whole, (CropRect{0, 0, 640, 480, false}));
      for (const auto& r : {c.full, c.half}) {
        EXPECT_GT(r.width * r.height, 0);
        EXPECT_GE(r.x, 0);
        EXPECT_LE(r.x + r.width, 640);
        EXPECT_LE(r.y + r.height, 480);
      }
      EXPECT_EQ(c.full, make_crops(640, 480, {x, y}).full);
    }
  }
}

TEST(MakeCrops, OutsidePointThrows) {
  try {
    make_crops(640, 480, {640, 10});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::out_of_bounds);
  }
  EXPECT_THROW(make_crops(640, 480, {-1, 10}), Error);
}

TEST(Featurize, DeterministicAndUnitNorm) {
  const Image img = blob(320, 240);
  const RandomProjectionFeaturizer f(64, 9);
  const auto crops = make_crops(320, 240, {100, 120});
  const auto a = f.featurize(img, crops.half);
  const auto b = RandomProjectionFeaturizer(64, 9).featurize(img, crops.half);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 64);
  EXPECT_NEAR(a.norm(), 1.0, 1e-9);
}

TEST(Featurize, DifferentStructureIsDistinguishable) {
  const RandomProjectionFeaturizer f(64, 3);
  const CropRect whole{0, 0, 320, 240, false};
  const auto a = f.featurize(stripes(320, 240, true), whole);
  const auto b = f.featurize(stripes(320, 240, false), whole);
  const auto c = f.featurize(blob(320, 240), whole);
  EXPECT_LT(a.dot(b), 0.99);
  EXPECT_LT(a.dot(c), 0.99);
  EXPECT_LT(b.dot(c), 0.99);
}

TEST(Featurize, ResampleOfConstantImageIsConstant) {
  const Image img(37, 23, 0.25);
  for (double v : resample_crop(img, {3, 2, 29, 19, false}, 16)) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(ImageIo, PgmRoundTripAndUnreadable) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "affordance_img.pgm").string();
  Image img(5, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) img(x, y) = (x + 5 * y) / 255.0;
  }
  write_pgm(img, path);
  const Image back = read_image(path);
  ASSERT_EQ(back.width(), 5);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) EXPECT_NEAR(back(x, y), img(x, y), 1e-12);
  }
  {
    std::ofstream(path) << "not an image";
  }
  try {
    read_image(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
  EXPECT_THROW(read_image((dir / "does_not_exist.pgm").string()), Error);
  std::filesystem::remove(path);
}

TEST(ImageIo, ColorPpmConvertsToLuma) {
  const auto path = (std::filesystem::temp_directory_path() / "affordance_img.ppm").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n# comment\n1 1\n255\n";
    out.put(char(255)).put(char(0)).put(char(0));
  }
  EXPECT_NEAR(read_image(path)(0, 0), 0.299, 1e-12);
  std::filesystem::remove(path);
}
