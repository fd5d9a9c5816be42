#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "onn/learning.hpp"

namespace onn {

/// Grey image, row-major, pixel values in [0, 1].
struct Image {
  int h = 0;
  int w = 0;
  std::vector<float> px;

  [[nodiscard]] float at(int r, int c) const { return px[static_cast<std::size_t>(r * w + c)]; }
};

struct Dataset {
  std::vector<Image> images;
  std::vector<std::uint8_t> labels;
  std::string split;

  [[nodiscard]] std::size_t size() const noexcept { return images.size(); }
};

/// IDX images (magic 0x803) and labels (0x801), bytes scaled by 1/255.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);
Dataset read_mnist_idx(std::istream& images, std::istream& labels);

/// 28x28 -> 27x27 by dropping the last row and column.
Image prepare_27(const Image& img);
Dataset prepare_27(const Dataset& ds);

/// H'xW'x5 activations in {0,1}, layout [row][col][channel].
struct FeatureMap {
  int h = 0;
  int w = 0;
  int k = 3;
  int stride = 2;
  std::vector<std::uint8_t> a;
  int failed_windows = 0;  // not locked or not oscillating

  [[nodiscard]] std::uint8_t at(int r, int c, int ch) const {
    return a[static_cast<std::size_t>((r * w + c) * kFeatureCount + ch)];
  }
};

int output_size(int in, int k, int stride);

struct FilterSpec {
  NetworkConfig filter;        // programmed k*k template; unit delays are overwritten
  int k = 3;
  int stride = 2;
  double steps_per_period = 250.0;
  double periods = 10.0;
  ReadoutSpec readout{};
  VariabilitySpec variability{};  // drawn per window when per_window_variability is set
  bool per_window_variability = false;
  bool trim = true;
  // Slowly drifting windows still carry a usable phase pattern, so by default
  // they keep their features and are only counted.
  bool zero_unlocked = false;

  void validate() const;
};

/// Memo of window results keyed by the exact window pixels. Only used when
/// per-window variability is off (then a window's output is a pure function
/// of its pixels). Thread-safe.
class WindowMemo;
std::shared_ptr<WindowMemo> make_window_memo();

/// Ideal-phase rule applied directly to a window (0 deg for x >= 0.5, else 180).
FeatureVector window_oracle(const std::vector<double>& window01, double theta_tol);

FeatureMap onn_filter_image(const Image& img, const FilterSpec& spec, std::uint64_t image_index = 0,
                            std::shared_ptr<WindowMemo> memo = nullptr);

/// Same geometry with the rule oracle in place of simulation.
FeatureMap oracle_filter_image(const Image& img, int k, int stride, double theta_tol);

struct OnnDataset {
  std::vector<FeatureMap> maps;
  std::vector<std::uint8_t> labels;
  std::string split;
};

struct FilteredSplit {
  OnnDataset train;
  OnnDataset test;
};

/// First n_train images go to train, the next n_test to test.
FilteredSplit build_onn_dataset(const Dataset& ds, const FilterSpec& spec, int n_train, int n_test);

/// Header `onn-fmap v1 h=<H> w=<W> c=5 n=<N>` then N*H*W*5 bytes, followed by
/// N label bytes.
void write_fmaps(std::ostream& os, const OnnDataset& d);
OnnDataset read_fmaps(std::istream& is);
void save_fmaps(const std::string& path, const OnnDataset& d);
OnnDataset load_fmaps(const std::string& path);

/// The 3x3 four-edge patterns: vertical, horizontal, main and anti diagonal.
std::vector<Pattern> edge_patterns_3x3();
std::vector<Pattern> edge_patterns_2x2();

/// Hebbian-programmed k*k filter network with default units.
NetworkConfig default_filter(int k, const ResistanceMap& map = {}, const OscillatorUnit& unit = {});

}  // namespace onn
