#include "onn/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "onn/error.hpp"
#include "onn/text.hpp"

namespace onn {

Tensor to_tensor(const Image& img) {
  Tensor t(1, img.h, img.w);
  for (std::size_t i = 0; i < img.px.size(); ++i) t.d[i] = img.px[i];
  return t;
}

CnnArch desk_arch() {
  CnnArch a;
  a.layers = {LayerSpec::conv(3, 16, 2, true), LayerSpec::relu(),      LayerSpec::conv(3, 32, 1, true),
              LayerSpec::relu(),               LayerSpec::maxpool(2, 2), LayerSpec::flatten(),
              LayerSpec::dense(128),           LayerSpec::relu(),       LayerSpec::dense(10)};
  return a;
}

std::size_t CnnModel::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

namespace {

void window_geometry(int in, int k, int stride, bool same, int& out, int& pad_before) {
  if (same) {
    out = (in + stride - 1) / stride;
    const int total = std::max((out - 1) * stride + k - in, 0);
    pad_before = total / 2;
  } else {
    if (in < k) throw Error(ErrorCode::kShapeMismatch, "window larger than its input");
    out = (in - k) / stride + 1;
    pad_before = 0;
  }
}

bool has_params(LayerKind k) { return k == LayerKind::kConv || k == LayerKind::kDense; }

}  // namespace

CnnModel init_model(const CnnArch& arch, std::uint64_t seed) {
  CnnModel m;
  m.arch = arch;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int c = arch.in_c;
  int h = arch.in_h;
  int w = arch.in_w;
  bool flat = false;
  if (c < 1 || h < 1 || w < 1) throw Error(ErrorCode::kShapeMismatch, "input shape must be positive");
  for (const auto& s : arch.layers) {
    Layer l;
    l.spec = s;
    l.in_c = c;
    l.in_h = h;
    l.in_w = w;
    switch (s.kind) {
      case LayerKind::kConv: {
        if (flat) throw Error(ErrorCode::kShapeMismatch, "conv after flatten");
        if (s.k < 1 || s.out < 1 || s.stride < 1) throw Error(ErrorCode::kShapeMismatch, "bad conv spec");
        window_geometry(h, s.k, s.stride, s.same, l.out_h, l.pad_top);
        window_geometry(w, s.k, s.stride, s.same, l.out_w, l.pad_left);
        l.out_c = s.out;
        const int fan_in = c * s.k * s.k;
        l.w.resize(s.out, fan_in);
        const double sd = std::sqrt(2.0 / fan_in);
        for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = sd * normal(rng);
        l.b = Eigen::VectorXd::Zero(s.out);
        break;
      }
      case LayerKind::kMaxPool:
        if (flat) throw Error(ErrorCode::kShapeMismatch, "pool after flatten");
        if (s.k < 1 || s.stride < 1) throw Error(ErrorCode::kShapeMismatch, "bad pool spec");
        window_geometry(h, s.k, s.stride, s.same, l.out_h, l.pad_top);
        window_geometry(w, s.k, s.stride, s.same, l.out_w, l.pad_left);
        l.out_c = c;
        break;
      case LayerKind::kRelu:
        l.out_c = c;
        l.out_h = h;
        l.out_w = w;
        break;
      case LayerKind::kFlatten:
        l.out_c = c * h * w;
        l.out_h = l.out_w = 1;
        flat = true;
        break;
      case LayerKind::kDense: {
        if (!flat) throw Error(ErrorCode::kShapeMismatch, "dense layer needs a flatten before it");
        if (s.out < 1) throw Error(ErrorCode::kShapeMismatch, "bad dense width");
        l.out_c = s.out;
        l.out_h = l.out_w = 1;
        l.w.resize(s.out, c);
        const double sd = std::sqrt(2.0 / c);
        for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = sd * normal(rng);
        l.b = Eigen::VectorXd::Zero(s.out);
        break;
      }
    }
    c = l.out_c;
    h = l.out_h;
    w = l.out_w;
    m.layers.push_back(std::move(l));
  }
  if (!flat || h != 1 || w != 1 || c < 2) throw Error(ErrorCode::kShapeMismatch, "network must end in a vector of logits");
  return m;
}

namespace {

// Column matrix (in_c*k*k) x (out_h*out_w) of the padded input.
Eigen::MatrixXd im2col(const Layer& l, const Tensor& x) {
  const int k = l.spec.k;
  Eigen::MatrixXd col = Eigen::MatrixXd::Zero(l.in_c * k * k, l.out_h * l.out_w);
  for (int ch = 0; ch < l.in_c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const int row = (ch * k + ky) * k + kx;
        for (int oy = 0; oy < l.out_h; ++oy) {
          const int iy = oy * l.spec.stride + ky - l.pad_top;
          if (iy < 0 || iy >= l.in_h) continue;
          for (int ox = 0; ox < l.out_w; ++ox) {
            const int ix = ox * l.spec.stride + kx - l.pad_left;
            if (ix < 0 || ix >= l.in_w) continue;
            col(row, oy * l.out_w + ox) = x.at(ch, iy, ix);
          }
        }
      }
    }
  }
  return col;
}

void col2im_add(const Layer& l, const Eigen::MatrixXd& dcol, Tensor& dx) {
  const int k = l.spec.k;
  for (int ch = 0; ch < l.in_c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const int row = (ch * k + ky) * k + kx;
        for (int oy = 0; oy < l.out_h; ++oy) {
          const int iy = oy * l.spec.stride + ky - l.pad_top;
          if (iy < 0 || iy >= l.in_h) continue;
          for (int ox = 0; ox < l.out_w; ++ox) {
            const int ix = ox * l.spec.stride + kx - l.pad_left;
            if (ix < 0 || ix >= l.in_w) continue;
            dx.at(ch, iy, ix) += dcol(row, oy * l.out_w + ox);
          }
        }
      }
    }
  }
}

Tensor layer_forward(const Layer& l, const Tensor& x, std::vector<int>* argmax) {
  Tensor y(l.out_c, l.out_h, l.out_w);
  switch (l.spec.kind) {
    case LayerKind::kConv: {
      const Eigen::MatrixXd col = im2col(l, x);
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> out(y.d.data(), l.out_c,
                                                                                             l.out_h * l.out_w);
      out.noalias() = l.w * col;
      out.colwise() += l.b;
      break;
    }
    case LayerKind::kRelu:
      for (std::size_t i = 0; i < x.d.size(); ++i) y.d[i] = x.d[i] > 0.0 ? x.d[i] : 0.0;
      break;
    case LayerKind::kMaxPool: {
      if (argmax) argmax->assign(y.d.size(), -1);
      const int k = l.spec.k;
      for (int ch = 0; ch < l.out_c; ++ch) {
        for (int oy = 0; oy < l.out_h; ++oy) {
          for (int ox = 0; ox < l.out_w; ++ox) {
            double best = -std::numeric_limits<double>::infinity();
            int arg = -1;
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * l.spec.stride + ky - l.pad_top;
              if (iy < 0 || iy >= l.in_h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * l.spec.stride + kx - l.pad_left;
                if (ix < 0 || ix >= l.in_w) continue;
                const double v = x.at(ch, iy, ix);
                if (v > best) {
                  best = v;
                  arg = (ch * l.in_h + iy) * l.in_w + ix;
                }
              }
            }
            const auto o = static_cast<std::size_t>((ch * l.out_h + oy) * l.out_w + ox);
            y.d[o] = best;
            if (argmax) (*argmax)[o] = arg;
          }
        }
      }
      break;
    }
    case LayerKind::kFlatten:
      y.d = x.d;
      break;
    case LayerKind::kDense: {
      Eigen::Map<const Eigen::VectorXd> in(x.d.data(), static_cast<Eigen::Index>(x.d.size()));
      Eigen::Map<Eigen::VectorXd> out(y.d.data(), l.out_c);
      out.noalias() = l.w * in + l.b;
      break;
    }
  }
  return y;
}

void check_input(const CnnModel& m, const Tensor& x) {
  if (x.c != m.arch.in_c || x.h != m.arch.in_h || x.w != m.arch.in_w) {
    throw Error(ErrorCode::kShapeMismatch, "input tensor does not match the model's input shape");
  }
}

}  // namespace

Tensor cnn_forward(const CnnModel& m, const Tensor& x, ForwardCache* cache) {
  check_input(m, x);
  if (cache) {
    cache->inputs.clear();
    cache->argmax.assign(m.layers.size(), {});
  }
  Tensor cur = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    Tensor next = layer_forward(m.layers[i], cur, cache ? &cache->argmax[i] : nullptr);
    if (cache) cache->inputs.push_back(std::move(cur));
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= s;
  return p;
}

Gradients Gradients::zeros_like(const CnnModel& m) {
  Gradients g;
  for (const auto& l : m.layers) {
    g.w.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
    g.b.push_back(Eigen::VectorXd::Zero(l.b.size()));
  }
  return g;
}

namespace {

double cross_entropy(const std::vector<double>& logits, int label) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - mx);
  return std::log(s) + mx - logits[static_cast<std::size_t>(label)];
}

void check_label(const Tensor& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.d.size())) throw Error(ErrorCode::kInvalidArgument, "label out of range");
}

}  // namespace

double sample_loss(const CnnModel& m, const Tensor& x, int label) {
  const Tensor z = cnn_forward(m, x);
  check_label(z, label);
  return cross_entropy(z.d, label);
}

double loss_and_grad(const CnnModel& m, const Tensor& x, int label, Gradients& g) {
  ForwardCache cache;
  const Tensor z = cnn_forward(m, x, &cache);
  check_label(z, label);
  const double loss = cross_entropy(z.d, label);

  Tensor dy = z;
  dy.d = softmax(z.d);
  dy.d[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const Layer& l = m.layers[li];
    const Tensor& xin = cache.inputs[li];
    Tensor dx(l.in_c, l.in_h, l.in_w);
    switch (l.spec.kind) {
      case LayerKind::kConv: {
        const Eigen::MatrixXd col = im2col(l, xin);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> d(
            dy.d.data(), l.out_c, l.out_h * l.out_w);
        g.w[li].noalias() += d * col.transpose();
        g.b[li] += d.rowwise().sum();
        if (li > 0) {
          const Eigen::MatrixXd dcol = l.w.transpose() * d;
          col2im_add(l, dcol, dx);
        }
        break;
      }
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < dx.d.size(); ++i) dx.d[i] = xin.d[i] > 0.0 ? dy.d[i] : 0.0;
        break;
      case LayerKind::kMaxPool: {
        const auto& arg = cache.argmax[li];
        for (std::size_t o = 0; o < arg.size(); ++o) {
          if (arg[o] >= 0) dx.d[static_cast<std::size_t>(arg[o])] += dy.d[o];
        }
        break;
      }
      case LayerKind::kFlatten:
        dx.d = dy.d;
        break;
      case LayerKind::kDense: {
        Eigen::Map<const Eigen::VectorXd> in(xin.d.data(), static_cast<Eigen::Index>(xin.d.size()));
        Eigen::Map<const Eigen::VectorXd> d(dy.d.data(), l.out_c);
        g.w[li].noalias() += d * in.transpose();
        g.b[li] += d;
        Eigen::Map<Eigen::VectorXd>(dx.d.data(), static_cast<Eigen::Index>(dx.d.size())).noalias() =
            l.w.transpose() * d;
        break;
      }
    }
    dy = std::move(dx);
  }
  return loss;
}

double accuracy(const CnnModel& m, const std::vector<Tensor>& x, const std::vector<std::uint8_t>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "samples and labels differ in count");
  if (x.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Tensor z = cnn_forward(m, x[i]);
    const auto arg = std::max_element(z.d.begin(), z.d.end()) - z.d.begin();
    hit += static_cast<std::size_t>(arg == y[i]);
  }
  return static_cast<double>(hit) / static_cast<double>(x.size());
}

TrainStats train_cnn(CnnModel& m, const std::vector<Tensor>& x, const std::vector<std::uint8_t>& y,
                     const CnnHyper& hyper, const std::vector<Tensor>* x_test,
                     const std::vector<std::uint8_t>* y_test) {
  if (x.size() != y.size() || x.empty()) throw Error(ErrorCode::kLengthMismatch, "need matching, non-empty samples");
  if (!(hyper.lr > 0.0) || hyper.batch < 1 || hyper.epochs < 0 || !(hyper.momentum >= 0.0 && hyper.momentum < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad training hyperparameters");
  }
  std::mt19937_64 rng(hyper.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients vel = Gradients::zeros_like(m);
  TrainStats st;
  for (int ep = 0; ep < hyper.epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
      Gradients g = Gradients::zeros_like(m);
      for (std::size_t i = start; i < end; ++i) total += loss_and_grad(m, x[order[i]], y[order[i]], g);
      const double scale = hyper.lr / static_cast<double>(end - start);
      for (std::size_t li = 0; li < m.layers.size(); ++li) {
        if (!has_params(m.layers[li].spec.kind)) continue;
        vel.w[li] = hyper.momentum * vel.w[li] - scale * g.w[li];
        vel.b[li] = hyper.momentum * vel.b[li] - scale * g.b[li];
        m.layers[li].w += vel.w[li];
        m.layers[li].b += vel.b[li];
      }
    }
    const double mean = total / static_cast<double>(x.size());
    if (!std::isfinite(mean)) {
      throw Error(ErrorCode::kDivergence, "loss is not finite in epoch " + std::to_string(ep + 1) +
                                              " (lr=" + format_double(hyper.lr) + ")");
    }
    st.epoch_loss.push_back(mean);
  }
  st.train_acc = accuracy(m, x, y);
  if (x_test && y_test) st.test_acc = accuracy(m, *x_test, *y_test);
  return st;
}

namespace {

std::vector<Tensor> tensors(const Dataset& ds) {
  std::vector<Tensor> out;
  out.reserve(ds.size());
  for (const auto& img : ds.images) out.push_back(to_tensor(img));
  return out;
}

}  // namespace

ReferenceResult train_reference_cnn(const Dataset& train, const Dataset& test, const CnnArch& arch,
                                    const CnnHyper& hyper) {
  ReferenceResult r{init_model(arch, hyper.seed), {}};
  const auto xt = tensors(train);
  const auto xs = tensors(test);
  r.stats = train_cnn(r.model, xt, train.labels, hyper, &xs, &test.labels);
  return r;
}

namespace {

// Index of the ReLU that follows the first conv; the hybrid cut point.
std::size_t first_block_end(const CnnModel& m) {
  if (m.layers.size() < 3 || m.layers[0].spec.kind != LayerKind::kConv || m.layers[1].spec.kind != LayerKind::kRelu) {
    throw Error(ErrorCode::kShapeMismatch, "model must start with a conv layer followed by ReLU");
  }
  return 1;
}

}  // namespace

Tensor first_layer_maps(const CnnModel& m, const Image& img) {
  first_block_end(m);
  const Tensor x = to_tensor(img);
  check_input(m, x);
  return layer_forward(m.layers[1], layer_forward(m.layers[0], x, nullptr), nullptr);
}

std::vector<double> resample_channel(const FeatureMap& fm, int ch, int h, int w) {
  std::vector<double> out(static_cast<std::size_t>(h * w));
  for (int r = 0; r < h; ++r) {
    const int sr = r * fm.h / h;
    for (int c = 0; c < w; ++c) {
      out[static_cast<std::size_t>(r * w + c)] = fm.at(sr, c * fm.w / w, ch);
    }
  }
  return out;
}

SubstitutionPlan match_filters(const CnnModel& m, const std::vector<FeatureMap>& onn_maps, const Dataset& calib) {
  if (calib.size() < 10 || onn_maps.size() < calib.size()) {
    throw Error(ErrorCode::kInsufficientCalibration, "need at least 10 calibration images with ONN maps");
  }
  const int n_filters = m.layers.at(0).out_c;
  if (n_filters < kFeatureCount) throw Error(ErrorCode::kShapeMismatch, "first layer has fewer than 5 filters");
  SubstitutionPlan plan;
  plan.mse_table.assign(kFeatureCount, std::vector<double>(static_cast<std::size_t>(n_filters), 0.0));
  for (std::size_t i = 0; i < calib.size(); ++i) {
    const Tensor a = first_layer_maps(m, calib.images[i]);
    const std::size_t plane = static_cast<std::size_t>(a.h * a.w);
    std::vector<std::vector<double>> onn(kFeatureCount);
    for (int ch = 0; ch < kFeatureCount; ++ch) onn[static_cast<std::size_t>(ch)] = resample_channel(onn_maps[i], ch, a.h, a.w);
    for (int f = 0; f < n_filters; ++f) {
      const auto first = a.d.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(f) * plane);
      const auto [lo, hi] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(plane));
      const double range = *hi - *lo;
      for (int ch = 0; ch < kFeatureCount; ++ch) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) {
          const double v = range > 0.0 ? (first[static_cast<std::ptrdiff_t>(p)] - *lo) / range : 0.0;
          const double d = v - onn[static_cast<std::size_t>(ch)][p];
          s += d * d;
        }
        plan.mse_table[static_cast<std::size_t>(ch)][static_cast<std::size_t>(f)] += s / static_cast<double>(plane);
      }
    }
  }
  std::vector<bool> used(static_cast<std::size_t>(n_filters), false);
  for (int ch = 0; ch < kFeatureCount; ++ch) {
    auto& row = plan.mse_table[static_cast<std::size_t>(ch)];
    for (double& v : row) v /= static_cast<double>(calib.size());
    int best = -1;
    for (int f = 0; f < n_filters; ++f) {
      if (used[static_cast<std::size_t>(f)]) continue;
      if (best < 0 || row[static_cast<std::size_t>(f)] < row[static_cast<std::size_t>(best)]) best = f;
    }
    used[static_cast<std::size_t>(best)] = true;
    plan.pairs.emplace_back(ch, best);
    plan.mse.push_back(row[static_cast<std::size_t>(best)]);
  }
  return plan;
}

Tensor hybrid_input(const CnnModel& m, const SubstitutionPlan& plan, const Image& img, const FeatureMap& fm) {
  Tensor a = first_layer_maps(m, img);
  const std::size_t plane = static_cast<std::size_t>(a.h * a.w);
  for (const auto& [ch, f] : plan.pairs) {
    if (f < 0 || f >= a.c) throw Error(ErrorCode::kInvalidArgument, "plan refers to a missing filter");
    const auto src = resample_channel(fm, ch, a.h, a.w);
    std::copy(src.begin(), src.end(), a.d.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(f) * plane));
  }
  return a;
}

void HybridReport::write_json(std::ostream& os) const {
  std::ostringstream s;
  s.precision(17);
  s << "{\"train_acc\": " << train_acc << ", \"test_acc\": " << test_acc << ", \"baseline_acc\": " << baseline_acc
    << ", \"gap\": " << gap << ", \"plan\": [";
  for (std::size_t i = 0; i < plan.pairs.size(); ++i) {
    s << (i ? ", " : "") << "{\"onn_channel\": " << plan.pairs[i].first << ", \"cnn_filter\": " << plan.pairs[i].second
      << ", \"mse\": " << plan.mse[i] << "}";
  }
  s << "]}\n";
  os << s.str();
}

HybridReport substitute_and_retrain(const CnnModel& reference, double baseline_acc, const SubstitutionPlan& plan,
                                    const Dataset& train, const OnnDataset& onn_train, const Dataset& test,
                                    const OnnDataset& onn_test, const CnnHyper& hyper) {
  const std::size_t cut = first_block_end(reference);
  if (onn_train.maps.size() < train.size() || onn_test.maps.size() < test.size()) {
    throw Error(ErrorCode::kLengthMismatch, "ONN maps missing for some images");
  }
  std::vector<bool> seen(static_cast<std::size_t>(reference.layers[0].out_c), false);
  for (const auto& [ch, f] : plan.pairs) {
    if (ch < 0 || ch >= kFeatureCount || f < 0 || f >= reference.layers[0].out_c || seen[static_cast<std::size_t>(f)]) {
      throw Error(ErrorCode::kInvalidArgument, "plan entries must be valid and use distinct filters");
    }
    seen[static_cast<std::size_t>(f)] = true;
  }

  CnnArch down;
  const Layer& first = reference.layers[cut];
  down.in_c = first.out_c;
  down.in_h = first.out_h;
  down.in_w = first.out_w;
  down.layers.assign(reference.arch.layers.begin() + static_cast<std::ptrdiff_t>(cut + 1), reference.arch.layers.end());
  CnnModel head = init_model(down, hyper.seed + 1);

  auto stacks = [&](const Dataset& ds, const OnnDataset& od) {
    std::vector<Tensor> out;
    out.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(hybrid_input(reference, plan, ds.images[i], od.maps[i]));
    return out;
  };
  const auto xt = stacks(train, onn_train);
  const auto xs = stacks(test, onn_test);
  const auto st = train_cnn(head, xt, train.labels, hyper, &xs, &test.labels);

  HybridReport r;
  r.train_acc = st.train_acc;
  r.test_acc = st.test_acc;
  r.baseline_acc = baseline_acc;
  r.gap = baseline_acc - st.test_acc;
  r.plan = plan;
  return r;
}

double count_params_reduction(int n_filters, int k) {
  if (k < 2 || n_filters < 1) throw Error(ErrorCode::kInvalidArgument, "need k >= 2 and n_filters >= 1");
  const double cnn = static_cast<double>(n_filters) * k * k;
  const double onn = static_cast<double>(k * k) * (k * k - 1) / 2.0;
  return 100.0 * (cnn - onn) / cnn;
}

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
  }
  return "?";
}

LayerKind kind_from(const std::string& s) {
  if (s == "conv") return LayerKind::kConv;
  if (s == "relu") return LayerKind::kRelu;
  if (s == "maxpool") return LayerKind::kMaxPool;
  if (s == "flatten") return LayerKind::kFlatten;
  if (s == "dense") return LayerKind::kDense;
  throw Error(ErrorCode::kFormat, "unknown layer kind '" + s + "'");
}

void write_values(std::ostream& os, const double* p, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) os << (i ? " " : "") << format_double(p[i]);
  os << '\n';
}

void read_values(std::istream& is, double* p, Eigen::Index n) {
  std::string tok;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(is >> tok)) throw Error(ErrorCode::kTruncatedFile, "checkpoint ends inside a weight block");
    p[i] = parse_double(tok);
  }
}

}  // namespace

void write_checkpoint(std::ostream& os, const CnnModel& m) {
  os << "onn-cnn v1\n";
  os << "input " << m.arch.in_c << ' ' << m.arch.in_h << ' ' << m.arch.in_w << ' ' << m.layers.size() << '\n';
  for (const auto& l : m.layers) {
    const auto& s = l.spec;
    os << kind_name(s.kind) << ' ' << s.k << ' ' << s.out << ' ' << s.stride << ' ' << (s.same ? 1 : 0) << '\n';
    if (has_params(s.kind)) {
      // Row-major, one row of the weight matrix per output unit.
      os << "w " << l.w.rows() << ' ' << l.w.cols() << '\n';
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = l.w;
      write_values(os, rm.data(), rm.size());
      os << "b " << l.b.size() << '\n';
      write_values(os, l.b.data(), l.b.size());
    }
  }
}

CnnModel read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kTruncatedFile, "empty checkpoint");
  if (line != "onn-cnn v1") throw Error(ErrorCode::kBadMagic, "expected header 'onn-cnn v1'");
  std::string tag;
  CnnArch arch;
  std::size_t n_layers = 0;
  if (!(is >> tag >> arch.in_c >> arch.in_h >> arch.in_w >> n_layers) || tag != "input") {
    throw Error(ErrorCode::kFormat, "bad checkpoint input line");
  }
  struct Pending {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
  };
  std::vector<Pending> params;
  for (std::size_t i = 0; i < n_layers; ++i) {
    std::string kind;
    LayerSpec s;
    int same = 0;
    if (!(is >> kind >> s.k >> s.out >> s.stride >> same)) throw Error(ErrorCode::kTruncatedFile, "checkpoint ends early");
    s.kind = kind_from(kind);
    s.same = same != 0;
    arch.layers.push_back(s);
    Pending p;
    if (has_params(s.kind)) {
      Eigen::Index r = 0;
      Eigen::Index c = 0;
      if (!(is >> tag >> r >> c) || tag != "w" || r < 1 || c < 1) throw Error(ErrorCode::kFormat, "bad weight shape line");
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(r, c);
      read_values(is, rm.data(), rm.size());
      p.w = rm;
      Eigen::Index nb = 0;
      if (!(is >> tag >> nb) || tag != "b" || nb != r) throw Error(ErrorCode::kFormat, "bad bias shape line");
      p.b.resize(nb);
      read_values(is, p.b.data(), nb);
    }
    params.push_back(std::move(p));
  }
  CnnModel m = init_model(arch, 0);
  for (std::size_t i = 0; i < n_layers; ++i) {
    if (!has_params(arch.layers[i].kind)) continue;
    if (params[i].w.rows() != m.layers[i].w.rows() || params[i].w.cols() != m.layers[i].w.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint weights do not match the architecture");
    }
    m.layers[i].w = params[i].w;
    m.layers[i].b = params[i].b;
  }
  return m;
}

}  // namespace onn
