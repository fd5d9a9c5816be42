#include "onn/conv.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "onn/error.hpp"
#include "onn/parallel.hpp"
#include "onn/rng.hpp"

namespace onn {

namespace {

std::uint32_t read_be32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::kTruncatedFile, std::string("IDX header ends early (") + what + ")");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path);
  return f;
}

}  // namespace

Dataset read_mnist_idx(std::istream& images, std::istream& labels) {
  const auto img_magic = read_be32(images, "images magic");
  if (img_magic != 0x803) throw Error(ErrorCode::kBadMagic, "images file magic is not 0x00000803");
  const auto lab_magic = read_be32(labels, "labels magic");
  if (lab_magic != 0x801) throw Error(ErrorCode::kBadMagic, "labels file magic is not 0x00000801");

  const auto n = read_be32(images, "image count");
  const auto rows = read_be32(images, "rows");
  const auto cols = read_be32(images, "cols");
  const auto n_labels = read_be32(labels, "label count");
  if (n != n_labels) throw Error(ErrorCode::kCountMismatch, "image and label counts differ");
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
    throw Error(ErrorCode::kWrongShape, "implausible IDX image dimensions");
  }

  Dataset ds;
  ds.images.resize(n);
  ds.labels.resize(n);
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw Error(ErrorCode::kTruncatedFile, "images file ends before image " + std::to_string(i));
    }
    Image& img = ds.images[i];
    img.h = static_cast<int>(rows);
    img.w = static_cast<int>(cols);
    img.px.resize(buf.size());
    for (std::size_t p = 0; p < buf.size(); ++p) img.px[p] = static_cast<float>(buf[p]) / 255.0f;
  }
  if (!labels.read(reinterpret_cast<char*>(ds.labels.data()), static_cast<std::streamsize>(n))) {
    throw Error(ErrorCode::kTruncatedFile, "labels file ends early");
  }
  return ds;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  auto fi = open_binary(images_path);
  auto fl = open_binary(labels_path);
  return read_mnist_idx(fi, fl);
}

Image prepare_27(const Image& img) {
  if (img.h != 28 || img.w != 28) throw Error(ErrorCode::kWrongShape, "prepare_27 expects a 28x28 image");
  Image out;
  out.h = out.w = 27;
  out.px.resize(27 * 27);
  for (int r = 0; r < 27; ++r) {
    for (int c = 0; c < 27; ++c) out.px[static_cast<std::size_t>(r * 27 + c)] = img.at(r, c);
  }
  return out;
}

Dataset prepare_27(const Dataset& ds) {
  Dataset out;
  out.labels = ds.labels;
  out.split = ds.split;
  out.images.reserve(ds.size());
  for (const auto& img : ds.images) out.images.push_back(prepare_27(img));
  return out;
}

int output_size(int in, int k, int stride) {
  if (k < 1 || stride < 1 || in < k) throw Error(ErrorCode::kInvalidArgument, "window does not fit the input");
  return (in - k) / stride + 1;
}

void FilterSpec::validate() const {
  if (k != 2 && k != 3) throw Error(ErrorCode::kUnsupportedSize, "filter window must be 2x2 or 3x3");
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  if (filter.size() != k * k) throw Error(ErrorCode::kLengthMismatch, "filter oscillator count must equal k*k");
  if (!(steps_per_period >= 20.0) || !(periods > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "steps_per_period must be >= 20 and periods > 0");
  }
  if (periods < readout.n_settle + 3) {
    throw Error(ErrorCode::kInvalidArgument, "horizon too short for the readout settling time");
  }
  variability.validate();
  for (const auto& u : filter.units) u.validate();
  filter.coupling.validate();
}

class WindowMemo {
 public:
  std::optional<std::pair<FeatureVector, bool>> find(const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void put(std::string key, FeatureVector f, bool ok) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(std::move(key), std::make_pair(f, ok));
  }

 private:
  std::mutex mu_;
  std::unordered_map<std::string, std::pair<FeatureVector, bool>> map_;
};

std::shared_ptr<WindowMemo> make_window_memo() { return std::make_shared<WindowMemo>(); }

FeatureVector window_oracle(const std::vector<double>& window01, double theta_tol) {
  std::vector<double> ph(window01.size());
  for (std::size_t i = 0; i < ph.size(); ++i) ph[i] = window01[i] >= 0.5 ? 0.0 : 180.0;
  return detect_features(ph, theta_tol);
}

namespace {

std::vector<double> window_at(const Image& img, int r0, int c0, int k) {
  std::vector<double> w(static_cast<std::size_t>(k * k));
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) w[static_cast<std::size_t>(r * k + c)] = img.at(r0 + r, c0 + c);
  }
  return w;
}

std::string memo_key(const std::vector<double>& w) {
  std::string key(w.size() * sizeof(double), '\0');
  std::memcpy(key.data(), w.data(), key.size());
  return key;
}

// Simulates one window; returns the features and whether the readout was usable.
std::pair<FeatureVector, bool> run_window(const std::vector<double>& w01, const NetworkConfig& base,
                                          const FilterSpec& spec, std::uint64_t stream) {
  thread_local std::shared_ptr<StepCache> cache = make_step_cache();
  NetworkConfig cfg = base;
  if (spec.per_window_variability) {
    VariabilitySpec v = spec.variability;
    v.seed = mix_seed(v.seed, stream);
    apply_variability(cfg, v, spec.trim);
  }
  const double period = nominal_period(base);
  Pattern x(w01.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 * w01[i] - 1.0;
  const auto d = delays_from_pixels(x, period);
  for (std::size_t i = 0; i < d.size(); ++i) cfg.units[i].delay = d[i];
  cfg.t_end = 0.0;
  cfg = with_defaults(cfg, spec.steps_per_period, spec.periods);
  try {
    const auto r = run_readout(cfg, spec.readout, cache);
    if (!r.all_locked()) {
      if (spec.zero_unlocked) return {FeatureVector{}, false};
      return {detect_features(r, spec.readout.theta_tol), false};
    }
    return {detect_features(r, spec.readout.theta_tol), true};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInsufficientCrossings) return {FeatureVector{}, false};
    throw;
  }
}

NetworkConfig filter_base(const FilterSpec& spec) {
  NetworkConfig base = spec.filter;
  base.t_end = 0.0;
  // One dt for every window so windows share step matrices.
  if (base.dt == 0.0) base.dt = nominal_period(base) / spec.steps_per_period;
  return base;
}

}  // namespace

FeatureMap onn_filter_image(const Image& img, const FilterSpec& spec, std::uint64_t image_index,
                            std::shared_ptr<WindowMemo> memo) {
  spec.validate();
  FeatureMap fm;
  fm.k = spec.k;
  fm.stride = spec.stride;
  fm.h = output_size(img.h, spec.k, spec.stride);
  fm.w = output_size(img.w, spec.k, spec.stride);
  fm.a.assign(static_cast<std::size_t>(fm.h * fm.w * kFeatureCount), 0);
  if (spec.per_window_variability) memo = nullptr;
  else if (!memo) memo = make_window_memo();

  const NetworkConfig base = filter_base(spec);
  const std::size_t n_windows = static_cast<std::size_t>(fm.h * fm.w);
  std::vector<std::uint8_t> ok(n_windows, 1);
  parallel_for(n_windows, [&](std::size_t idx) {
    const int r = static_cast<int>(idx) / fm.w;
    const int c = static_cast<int>(idx) % fm.w;
    const auto w = window_at(img, r * spec.stride, c * spec.stride, spec.k);
    std::pair<FeatureVector, bool> res;
    if (memo) {
      auto key = memo_key(w);
      if (auto hit = memo->find(key)) {
        res = *hit;
      } else {
        res = run_window(w, base, spec, 0);
        memo->put(std::move(key), res.first, res.second);
      }
    } else {
      res = run_window(w, base, spec, mix_seed(image_index, idx));
    }
    for (int ch = 0; ch < kFeatureCount; ++ch) fm.a[idx * kFeatureCount + static_cast<std::size_t>(ch)] = res.first[static_cast<std::size_t>(ch)];
    ok[idx] = res.second ? 1 : 0;
  });
  for (auto o : ok) fm.failed_windows += o ? 0 : 1;
  return fm;
}

FeatureMap oracle_filter_image(const Image& img, int k, int stride, double theta_tol) {
  FeatureMap fm;
  fm.k = k;
  fm.stride = stride;
  fm.h = output_size(img.h, k, stride);
  fm.w = output_size(img.w, k, stride);
  fm.a.assign(static_cast<std::size_t>(fm.h * fm.w * kFeatureCount), 0);
  for (int r = 0; r < fm.h; ++r) {
    for (int c = 0; c < fm.w; ++c) {
      const auto f = window_oracle(window_at(img, r * stride, c * stride, k), theta_tol);
      for (int ch = 0; ch < kFeatureCount; ++ch) {
        fm.a[static_cast<std::size_t>((r * fm.w + c) * kFeatureCount + ch)] = f[static_cast<std::size_t>(ch)];
      }
    }
  }
  return fm;
}

FilteredSplit build_onn_dataset(const Dataset& ds, const FilterSpec& spec, int n_train, int n_test) {
  if (n_train < 0 || n_test < 0 || static_cast<std::size_t>(n_train) + static_cast<std::size_t>(n_test) > ds.size()) {
    throw Error(ErrorCode::kInvalidArgument, "n_train + n_test exceeds the dataset size");
  }
  spec.validate();
  auto memo = spec.per_window_variability ? nullptr : make_window_memo();
  FilteredSplit out;
  out.train.split = "train";
  out.test.split = "test";
  for (int i = 0; i < n_train + n_test; ++i) {
    auto fm = onn_filter_image(ds.images[static_cast<std::size_t>(i)], spec, static_cast<std::uint64_t>(i), memo);
    OnnDataset& dst = i < n_train ? out.train : out.test;
    dst.maps.push_back(std::move(fm));
    dst.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

void write_fmaps(std::ostream& os, const OnnDataset& d) {
  const int h = d.maps.empty() ? 0 : d.maps.front().h;
  const int w = d.maps.empty() ? 0 : d.maps.front().w;
  if (d.labels.size() != d.maps.size()) throw Error(ErrorCode::kLengthMismatch, "labels and maps differ in count");
  os << "onn-fmap v1 h=" << h << " w=" << w << " c=" << kFeatureCount << " n=" << d.maps.size() << '\n';
  for (const auto& m : d.maps) {
    if (m.h != h || m.w != w) throw Error(ErrorCode::kShapeMismatch, "feature maps differ in shape");
    os.write(reinterpret_cast<const char*>(m.a.data()), static_cast<std::streamsize>(m.a.size()));
  }
  os.write(reinterpret_cast<const char*>(d.labels.data()), static_cast<std::streamsize>(d.labels.size()));
  if (!os) throw Error(ErrorCode::kIo, "feature map write failed");
}

OnnDataset read_fmaps(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error(ErrorCode::kTruncatedFile, "empty feature map file");
  int h = 0;
  int w = 0;
  int c = 0;
  long n = 0;
  if (std::sscanf(header.c_str(), "onn-fmap v1 h=%d w=%d c=%d n=%ld", &h, &w, &c, &n) != 4) {
    throw Error(ErrorCode::kBadMagic, "expected header 'onn-fmap v1 h= w= c= n='");
  }
  if (c != kFeatureCount || h < 0 || w < 0 || n < 0) throw Error(ErrorCode::kFormat, "bad feature map header values");
  OnnDataset d;
  d.maps.resize(static_cast<std::size_t>(n));
  for (auto& m : d.maps) {
    m.h = h;
    m.w = w;
    m.a.resize(static_cast<std::size_t>(h * w * c));
    if (!is.read(reinterpret_cast<char*>(m.a.data()), static_cast<std::streamsize>(m.a.size()))) {
      throw Error(ErrorCode::kTruncatedFile, "feature map data ends early");
    }
  }
  d.labels.resize(static_cast<std::size_t>(n));
  if (!is.read(reinterpret_cast<char*>(d.labels.data()), static_cast<std::streamsize>(n))) {
    throw Error(ErrorCode::kTruncatedFile, "feature map labels end early");
  }
  return d;
}

void save_fmaps(const std::string& path, const OnnDataset& d) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  write_fmaps(f, d);
}

OnnDataset load_fmaps(const std::string& path) {
  auto f = open_binary(path);
  return read_fmaps(f);
}

std::vector<Pattern> edge_patterns_3x3() {
  return {{-1, 1, -1, -1, 1, -1, -1, 1, -1},
          {-1, -1, -1, 1, 1, 1, -1, -1, -1},
          {1, -1, -1, -1, 1, -1, -1, -1, 1},
          {-1, -1, 1, -1, 1, -1, 1, -1, -1}};
}

std::vector<Pattern> edge_patterns_2x2() {
  return {{1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}, {-1, 1, 1, -1}};
}

NetworkConfig default_filter(int k, const ResistanceMap& map, const OscillatorUnit& unit) {
  if (k != 2 && k != 3) throw Error(ErrorCode::kUnsupportedSize, "filter window must be 2x2 or 3x3");
  NetworkConfig cfg;
  cfg.units.assign(static_cast<std::size_t>(k * k), unit);
  cfg.coupling = program_coupling(hebbian(k == 3 ? edge_patterns_3x3() : edge_patterns_2x2()), map);
  return cfg;
}

}  // namespace onn
