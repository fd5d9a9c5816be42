#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "onn/conv.hpp"

namespace onn {

/// Activations of one sample, layout [channel][row][col].
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> d;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), d(static_cast<std::size_t>(c_ * h_ * w_), 0.0) {}
  [[nodiscard]] std::size_t size() const noexcept { return d.size(); }
  double& at(int ch, int r, int col) { return d[static_cast<std::size_t>((ch * h + r) * w + col)]; }
  [[nodiscard]] double at(int ch, int r, int col) const { return d[static_cast<std::size_t>((ch * h + r) * w + col)]; }
};

Tensor to_tensor(const Image& img);

enum class LayerKind { kConv, kRelu, kMaxPool, kFlatten, kDense };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int k = 0;          // conv / pool window
  int out = 0;        // conv channels or dense width
  int stride = 1;
  bool same = false;  // "same" padding, extra pixel on the bottom/right

  static LayerSpec conv(int k, int out, int stride, bool same) { return {LayerKind::kConv, k, out, stride, same}; }
  static LayerSpec relu() { return {LayerKind::kRelu, 0, 0, 1, false}; }
  static LayerSpec maxpool(int k, int stride, bool same = false) { return {LayerKind::kMaxPool, k, 0, stride, same}; }
  static LayerSpec flatten() { return {LayerKind::kFlatten, 0, 0, 1, false}; }
  static LayerSpec dense(int out) { return {LayerKind::kDense, 0, out, 1, false}; }
};

/// Softmax cross-entropy is applied to the output of the last layer.
struct CnnArch {
  int in_c = 1;
  int in_h = 27;
  int in_w = 27;
  std::vector<LayerSpec> layers;
};

/// Conv 3x3x16 s2 same, ReLU, conv 3x3x32 s1 same, ReLU, maxpool 2, dense 128, ReLU, dense 10.
CnnArch desk_arch();

struct Layer {
  LayerSpec spec;
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, out_h = 0, out_w = 0;
  int pad_top = 0, pad_left = 0;
  Eigen::MatrixXd w;  // conv: out x (in_c*k*k); dense: out x in
  Eigen::VectorXd b;
};

struct CnnModel {
  CnnArch arch;
  std::vector<Layer> layers;

  [[nodiscard]] std::size_t param_count() const;
};

struct CnnHyper {
  double lr = 0.02;
  double momentum = 0.9;
  int batch = 32;
  int epochs = 6;
  std::uint64_t seed = 1;
};

/// Shapes are chained and checked (kShapeMismatch); weights He-initialized from `seed`.
CnnModel init_model(const CnnArch& arch, std::uint64_t seed);

struct ForwardCache {
  std::vector<Tensor> inputs;                 // input to each layer
  std::vector<std::vector<int>> argmax;       // maxpool winners
};

Tensor cnn_forward(const CnnModel& m, const Tensor& x, ForwardCache* cache = nullptr);
std::vector<double> softmax(const std::vector<double>& logits);

struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static Gradients zeros_like(const CnnModel& m);
};

/// Cross-entropy loss for one sample; adds dL/dparams into `g`.
double loss_and_grad(const CnnModel& m, const Tensor& x, int label, Gradients& g);
double sample_loss(const CnnModel& m, const Tensor& x, int label);

struct TrainStats {
  std::vector<double> epoch_loss;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

/// Mini-batch SGD with momentum; deterministic in (model, data, hyper).
TrainStats train_cnn(CnnModel& m, const std::vector<Tensor>& x, const std::vector<std::uint8_t>& y,
                     const CnnHyper& hyper, const std::vector<Tensor>* x_test = nullptr,
                     const std::vector<std::uint8_t>* y_test = nullptr);
double accuracy(const CnnModel& m, const std::vector<Tensor>& x, const std::vector<std::uint8_t>& y);

struct ReferenceResult {
  CnnModel model;
  TrainStats stats;
};

ReferenceResult train_reference_cnn(const Dataset& train, const Dataset& test, const CnnArch& arch,
                                    const CnnHyper& hyper);

/// First conv layer followed by ReLU, for one image.
Tensor first_layer_maps(const CnnModel& m, const Image& img);

/// Nearest-neighbour resample of one feature-map channel to h x w.
std::vector<double> resample_channel(const FeatureMap& fm, int ch, int h, int w);

struct SubstitutionPlan {
  std::vector<std::pair<int, int>> pairs;  // (onn_channel, cnn_filter)
  std::vector<double> mse;                 // per pair
  std::vector<std::vector<double>> mse_table;  // [channel][filter]
};

SubstitutionPlan match_filters(const CnnModel& m, const std::vector<FeatureMap>& onn_maps, const Dataset& calib);

/// Frozen first-layer stack with the planned channels replaced by ONN maps.
Tensor hybrid_input(const CnnModel& m, const SubstitutionPlan& plan, const Image& img, const FeatureMap& fm);

struct HybridReport {
  double train_acc = 0.0;
  double test_acc = 0.0;
  double baseline_acc = 0.0;
  double gap = 0.0;  // baseline - hybrid test accuracy
  SubstitutionPlan plan;

  void write_json(std::ostream& os) const;
};

/// Retrains everything after the first layer from a fresh initialization on
/// the substituted stacks. An empty plan is the all-CNN control.
HybridReport substitute_and_retrain(const CnnModel& reference, double baseline_acc, const SubstitutionPlan& plan,
                                    const Dataset& train, const OnnDataset& onn_train, const Dataset& test,
                                    const OnnDataset& onn_test, const CnnHyper& hyper);

/// (n_filters*k^2 - k^2(k^2-1)/2) / (n_filters*k^2), as a percentage.
double count_params_reduction(int n_filters = 5, int k = 3);

void write_checkpoint(std::ostream& os, const CnnModel& m);
CnnModel read_checkpoint(std::istream& is);

}  // namespace onn
