#include <sstream>

#include "doctest.h"
#include "onn/conv.hpp"
#include "onn/error.hpp"

using namespace onn;

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int sh = 24; sh >= 0; sh -= 8) s.push_back(static_cast<char>((v >> sh) & 0xFF));
}

std::string idx_images(int n, int h, int w, std::uint32_t magic = 0x803) {
  std::string s;
  put_u32(s, magic);
  put_u32(s, static_cast<std::uint32_t>(n));
  put_u32(s, static_cast<std::uint32_t>(h));
  put_u32(s, static_cast<std::uint32_t>(w));
  for (int k = 0; k < n * h * w; ++k) s.push_back(static_cast<char>(k % 256));
  return s;
}

std::string idx_labels(int n) {
  std::string s;
  put_u32(s, 0x801);
  put_u32(s, static_cast<std::uint32_t>(n));
  for (int k = 0; k < n; ++k) s.push_back(static_cast<char>(k % 10));
  return s;
}

Dataset read(const std::string& img, const std::string& lab) {
  std::istringstream a(img);
  std::istringstream b(lab);
  return read_mnist_idx(a, b);
}

ErrorCode code_of(const std::string& img, const std::string& lab) {
  try {
    read(img, lab);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

Image filled(int h, int w, float v) {
  Image im;
  im.h = h;
  im.w = w;
  im.px.assign(static_cast<std::size_t>(h * w), v);
  return im;
}

}  // namespace

TEST_CASE("IDX parsing, byte by byte") {
  const auto ds = read(idx_images(2, 28, 28), idx_labels(2));
  REQUIRE(ds.size() == 2);
  CHECK(ds.images[0].h == 28);
  CHECK(ds.images[0].at(0, 1) == doctest::Approx(1.0f / 255.0f));
  CHECK(ds.images[1].at(0, 0) == doctest::Approx(static_cast<float>(784 % 256) / 255.0f));
  CHECK(ds.labels[1] == 1);
}

TEST_CASE("IDX errors") {
  CHECK(code_of(idx_images(2, 28, 28, 0x802), idx_labels(2)) == ErrorCode::kBadMagic);
  auto cut = idx_images(2, 28, 28);
  cut.resize(cut.size() - 5);
  CHECK(code_of(cut, idx_labels(2)) == ErrorCode::kTruncatedFile);
  CHECK(code_of(idx_images(2, 28, 28), idx_labels(3)) == ErrorCode::kCountMismatch);
  CHECK(code_of(idx_images(1, 4, 4).substr(0, 6), idx_labels(1)) == ErrorCode::kTruncatedFile);
}

TEST_CASE("27x27 preparation") {
  const auto ds = read(idx_images(1, 28, 28), idx_labels(1));
  const auto p = prepare_27(ds.images[0]);
  CHECK(p.h == 27);
  CHECK(p.w == 27);
  CHECK(p.at(26, 26) == ds.images[0].at(26, 26));
  try {
    prepare_27(filled(27, 27, 0.0f));
    FAIL("expected WrongShape");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kWrongShape);
  }
}

TEST_CASE("output size law") {
  CHECK(output_size(27, 3, 2) == 13);
  CHECK(output_size(27, 2, 2) == 13);
  CHECK(output_size(28, 3, 1) == 26);
  for (int in = 3; in < 40; ++in) {
    for (int s = 1; s <= 3; ++s) CHECK(output_size(in, 3, s) == (in - 3) / s + 1);
  }
  CHECK_THROWS_AS(output_size(2, 3, 1), Error);
}

TEST_CASE("window oracle") {
  std::vector<double> v = {0, 1, 0, 0, 1, 0, 0, 1, 0};
  auto f = window_oracle(v, 30.0);
  CHECK(f[kVertical]);
  CHECK_FALSE(f[kUniform]);
  f = window_oracle(std::vector<double>(9, 1.0), 30.0);
  CHECK(f[kUniform]);
  CHECK_FALSE(f[kVertical]);
}

TEST_CASE("vertical stripe through the rule oracle") {
  Image im = filled(27, 27, 0.0f);
  for (int r = 0; r < 27; ++r) im.px[static_cast<std::size_t>(r * 27 + 13)] = 1.0f;
  const auto fm = oracle_filter_image(im, 3, 2, 30.0);
  CHECK(fm.h == 13);
  CHECK(fm.w == 13);
  // column 13 is the centre of output column 6
  for (int r = 0; r < 13; ++r) {
    CHECK(fm.at(r, 6, kVertical) == 1);
    CHECK(fm.at(r, 6, kUniform) == 0);
    CHECK(fm.at(r, 0, kUniform) == 1);
  }
}

TEST_CASE("simulated filter: geometry and all-white background") {
  FilterSpec spec;
  spec.filter = default_filter(3);
  const auto fm = onn_filter_image(filled(27, 27, 1.0f), spec, 0, make_window_memo());
  CHECK(fm.h == 13);
  CHECK(fm.w == 13);
  CHECK(fm.a.size() == 13u * 13u * 5u);
  for (int r = 0; r < 13; ++r) {
    for (int c = 0; c < 13; ++c) {
      CHECK(fm.at(r, c, kUniform) == 1);
      CHECK(fm.at(r, c, kVertical) == 0);
    }
  }
}

TEST_CASE("simulated 3x3 filter on the four stored edges") {
  FilterSpec spec;
  spec.filter = default_filter(3);
  const auto pats = edge_patterns_3x3();
  for (int k = 0; k < 4; ++k) {
    Image im = filled(3, 3, 0.0f);
    for (int i = 0; i < 9; ++i) im.px[static_cast<std::size_t>(i)] = pats[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] > 0 ? 1.0f : 0.0f;
    const auto fm = onn_filter_image(im, spec);
    REQUIRE(fm.a.size() == 5);
    CHECK(fm.at(0, 0, k) == 1);
    CHECK(fm.at(0, 0, kUniform) == 0);
  }
}

TEST_CASE("feature-map file round trip") {
  OnnDataset d;
  d.split = "train";
  for (int n = 0; n < 3; ++n) {
    FeatureMap fm;
    fm.h = 2;
    fm.w = 3;
    for (int k = 0; k < 2 * 3 * 5; ++k) fm.a.push_back(static_cast<std::uint8_t>((k + n) % 2));
    d.maps.push_back(fm);
    d.labels.push_back(static_cast<std::uint8_t>(7 - n));
  }
  std::stringstream ss;
  write_fmaps(ss, d);
  const auto back = read_fmaps(ss);
  REQUIRE(back.maps.size() == 3);
  CHECK(back.maps[2].a == d.maps[2].a);
  CHECK(back.labels == d.labels);

  std::istringstream bad("onn-fmap v9 h=2 w=3 c=5 n=3\n");
  CHECK_THROWS_AS(read_fmaps(bad), Error);
  std::string cut = ss.str();
  std::stringstream again;
  write_fmaps(again, d);
  cut = again.str();
  cut.resize(cut.size() - 4);
  std::istringstream trunc(cut);
  CHECK_THROWS_AS(read_fmaps(trunc), Error);
}

TEST_CASE("edge pattern sets") {
  CHECK(edge_patterns_3x3()[0] == Pattern{-1, 1, -1, -1, 1, -1, -1, 1, -1});
  CHECK(edge_patterns_2x2()[0] == Pattern{1, -1, 1, -1});
  CHECK_THROWS_AS(default_filter(4), Error);
}
