#include <doctest.h>
#include <unistd.h>

#include <sstream>

#include "helpers.hpp"
#include "sparsevo/errors.hpp"
#include "sparsevo/image_io.hpp"

using namespace sparsevo;

TEST_CASE("flatten_index examples") {
  CHECK(flatten_index(0, 0, 5, 4) == 0);
  CHECK(flatten_index(3, 2, 5, 4) == 13);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto p = unflatten_index(i, 5, 4);
    CHECK(flatten_index(p.n, p.m, 5, 4) == i);
  }
  CHECK_THROWS_AS(flatten_index(5, 0, 5, 4), ContractError);
  CHECK_THROWS_AS(unflatten_index(20, 5, 4), ContractError);
}

TEST_CASE("image construction validates its contract") {
  CHECK_THROWS_AS(ImageTensor(Shape{1, 2, 2}, {0.f, 0.f, 0.f}), ContractError);
  CHECK_THROWS_AS(ImageTensor(Shape{1, 1, 1}, {1.5f}), ContractError);
  CHECK_THROWS_AS(ImageTensor(Shape{0, 1, 1}, {}), ContractError);
  ImageTensor img = ImageTensor::filled({2, 2, 2}, 0.25f);
  CHECK_THROWS_AS(img.set(0, 0, -0.1f), ContractError);
  img.set(1, 3, 0.75f);
  CHECK(img.at(1, 3) == 0.75f);
  CHECK(img.data()[7] == 0.75f);
}

TEST_CASE("compose examples") {
  const Shape s{1, 2, 2};
  const auto x = ImageTensor::filled(s, 0.0f);
  const auto xs = ImageTensor::filled(s, 1.0f);
  CHECK(compose(x, xs, PixelMask(2, 2, false)) == x);
  CHECK(compose(x, xs, PixelMask(2, 2, true)) == xs);
  const auto out = compose(x, xs, PixelMask(2, {1, 0, 0, 1}));
  CHECK(out.at(0, flatten_index(0, 0, 2, 2)) == 1.0f);
  CHECK(out.at(0, flatten_index(1, 1, 2, 2)) == 1.0f);
  CHECK(out.at(0, 1) == 0.0f);
  CHECK(out.at(0, 2) == 0.0f);
  CHECK_THROWS_AS(compose(x, ImageTensor::filled({1, 2, 1}, 0.f), PixelMask(2, 2)), ContractError);
  CHECK_THROWS_AS(compose(x, xs, PixelMask(3, 1)), ContractError);
}

TEST_CASE("sparsity and distance examples") {
  const auto a = ImageTensor::filled({1, 4, 4}, 0.0f);
  CHECK(pixel_sparsity(a, a) == 0.0);
  auto b = a;
  b.set(0, 1, 1.0f);
  b.set(0, 7, 0.5f);
  b.set(0, 15, 0.2f);
  CHECK(pixel_sparsity(a, b) == doctest::Approx(0.1875));
  CHECK(differing_pixels(a, b) == 3);

  CHECK(l2_distance(a, a) == 0.0);
  CHECK(l2_distance(ImageTensor({1, 1, 1}, {0.f}), ImageTensor({1, 1, 1}, {1.f})) == doctest::Approx(1.0));
  CHECK(l2_distance(ImageTensor({1, 2, 1}, {0.f, 0.f}), ImageTensor({1, 2, 1}, {0.3f, 0.4f})) ==
        doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("seed_vector examples") {
  SplitMix64 gen(11);
  const auto x = testing::random_image({3, 4, 4}, gen);
  CHECK(seed_vector(x, x).popcount() == 0);
  std::vector<float> inv(x.data().begin(), x.data().end());
  for (auto& v : inv) v = 1.0f - v + (v == 0.5f ? 0.1f : 0.0f);
  const ImageTensor all(x.shape(), inv);
  CHECK(seed_vector(x, all).popcount() == 16);
  auto one = x;
  one.set(2, 5, x.at(2, 5) > 0.5f ? 0.0f : 1.0f);
  const auto v = seed_vector(x, one);
  CHECK(v.popcount() == 1);
  CHECK(v[5]);
}

TEST_CASE("property: compose against a naive per-element definition") {
  SplitMix64 gen(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const auto shape = testing::random_shape(gen);
    const auto x = testing::random_image(shape, gen);
    const auto xs = testing::perturb_pixels(x, 0.5, gen);
    const auto v = testing::random_mask(shape.width, shape.height, gen.next_unit(), gen);
    const auto out = compose(x, xs, v);
    bool ok = true;
    for (std::size_t c = 0; c < shape.channels; ++c) {
      for (std::size_t i = 0; i < shape.pixels(); ++i) {
        ok &= out.at(c, i) == (v[i] ? xs.at(c, i) : x.at(c, i));
      }
    }
    REQUIRE(ok);
    // Idempotent in the mask, and sparsity bounded by the mask support.
    CHECK(compose(x, out, v) == out);
    const double bound = static_cast<double>(v.popcount()) / static_cast<double>(shape.pixels());
    CHECK(pixel_sparsity(x, out) <= bound + 1e-12);
    const auto seeded = compose(x, xs, seed_vector(x, xs));
    CHECK(seeded == xs);
    std::size_t both = 0;
    const auto sv = seed_vector(x, xs);
    for (std::size_t i = 0; i < shape.pixels(); ++i) both += v[i] && sv[i];
    CHECK(differing_pixels(x, out) == both);
  }
}

TEST_CASE("attack goal") {
  const auto u = AttackGoal::untargeted(Label{3});
  CHECK(u.satisfied_by(Label{0}));
  CHECK_FALSE(u.satisfied_by(Label{3}));
  const auto t = AttackGoal::targeted(Label{3}, Label{1});
  CHECK(t.satisfied_by(Label{1}));
  CHECK_FALSE(t.satisfied_by(Label{2}));
  CHECK_THROWS_AS(AttackGoal::targeted(Label{2}, Label{2}), ContractError);
}

TEST_CASE("quantize_u8 snaps to the 1/255 grid") {
  CHECK(quantize_u8(0.0f) == 0.0f);
  CHECK(quantize_u8(1.0f) == 1.0f);
  CHECK(quantize_u8(0.5f) == doctest::Approx(128.0 / 255.0));
  CHECK(quantize_u8(2.0f / 255.0f + 0.001f) == 2.0f / 255.0f);
}

TEST_CASE("image containers round-trip") {
  SplitMix64 gen(5);
  const auto dir = testing::temp_dir("io");
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = testing::random_image(testing::random_shape(gen), gen);
    std::stringstream text, bin;
    io::write_image_text(text, img);
    io::write_image_binary(bin, img);
    CHECK(io::read_image(text) == img);
    CHECK(io::read_image(bin) == img);
  }
  const auto img = testing::random_image({3, 5, 4}, gen);
  io::write_image(dir / "a.bin", img);
  io::write_image(dir / "a.img", img);
  CHECK(io::read_image(dir / "a.bin") == img);
  CHECK(io::read_image(dir / "a.img") == img);
  std::stringstream bad("1 2 2\n0 1 300 4\n");
  CHECK_THROWS_AS(io::read_image(bad), ContractError);
  std::stringstream short_text("1 2 2\n0 1 2\n");
  CHECK_THROWS_AS(io::read_image(short_text), ContractError);
  std::filesystem::remove_all(dir);
}
