#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "etcbench/image.hpp"

namespace etcbench {

/// Channel-major real tensor (C x H x W).
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0) {}

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

/// Maps 8-bit samples to [-1, 1] in C x H x W layout.
Tensor image_to_tensor(const Image& img);
/// Same mapping for real-valued interleaved RGB samples in pixel units.
Tensor pixels_to_tensor(std::span<const double> hwc, int width, int height);

enum class Activation { identity, tanh, relu };

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;  // odd; zero padding kernel/2
  int stride = 1;
  std::vector<double> weights;  // [out][in][ky][kx]
  std::vector<double> bias;     // [out]
  std::vector<double> scale;    // w_l, per output channel
};

/// Frozen convolutional feature stack standing in for a pretrained network in
/// the perceptual distance
///   d(a, b) = sum_l 1/(H_l W_l) sum_{h,w} || w_l * (yhat_a - yhat_b) ||^2
/// where yhat is the layer activation unit-normalised across channels.
class FeatureExtractor {
 public:
  static constexpr double kNormEps = 1e-10;

  FeatureExtractor(std::vector<ConvLayer> layers, Activation activation, int input_size = 0);

  /// Three seeded random 3x3 layers (3->8 s1, 8->16 s2, 16->32 s2), tanh.
  static FeatureExtractor standard(std::uint64_t seed = 0x1c0ffee);
  /// Single 1x1 layer copying each input channel; identity activation.
  static FeatureExtractor identity_probe();

  const std::vector<ConvLayer>& layers() const { return layers_; }
  std::vector<ConvLayer>& layers() { return layers_; }
  Activation activation() const { return activation_; }
  /// Square side both images are resampled to; 0 keeps native size.
  int input_size() const { return input_size_; }

  struct Trace {
    std::vector<Tensor> pre;         // conv output before activation
    std::vector<Tensor> activation;  // after activation
    std::vector<Tensor> normalized;  // unit-normalised across channels
  };

  Trace forward(const Tensor& input) const;
  double distance(const Trace& a, const Trace& b) const;
  /// Distance to a fixed reference trace and its gradient w.r.t. `input`.
  double distance_with_grad(const Trace& reference, const Tensor& input, Tensor& grad) const;

 private:
  std::vector<ConvLayer> layers_;
  Activation activation_;
  int input_size_;
};

double perceptual_distance(const Image& a, const Image& b, const FeatureExtractor& fx);

/// Mean squared sample difference in 8-bit units.
double mse(const Image& a, const Image& b);
/// Peak signal-to-noise ratio in dB; +infinity for identical images.
double psnr(const Image& a, const Image& b);

/// Box-plot summary with quartiles by linear interpolation between order
/// statistics (position p*(n-1), numpy's default) and outliers outside
/// [Q1 - 1.5 IQR, Q3 + 1.5 IQR].
struct ScoreReport {
  std::vector<double> scores;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  double lower_fence = 0, upper_fence = 0;
  std::vector<std::size_t> outliers;  // indices into scores
};

double quantile(std::vector<double> values, double p);
ScoreReport summarize_scores(std::vector<double> scores);
ScoreReport score_set(const std::vector<std::pair<Image, Image>>& pairs, const FeatureExtractor& fx);
nlohmann::json to_json(const ScoreReport& report);

}  // namespace etcbench
