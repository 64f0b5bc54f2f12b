#include "etcbench/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "etcbench/random.hpp"

namespace etcbench {

Tensor image_to_tensor(const Image& img) {
  Tensor t(kChannels, img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < kChannels; ++c) t.at(c, y, x) = img.at(x, y, c) / 127.5 - 1.0;
  return t;
}

Tensor pixels_to_tensor(std::span<const double> hwc, int width, int height) {
  if (hwc.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw std::invalid_argument("pixels_to_tensor: buffer size mismatch");
  }
  Tensor t(kChannels, height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < kChannels; ++c)
        t.at(c, y, x) = hwc[(static_cast<std::size_t>(y) * width + x) * kChannels + c] / 127.5 - 1.0;
  return t;
}

FeatureExtractor::FeatureExtractor(std::vector<ConvLayer> layers, Activation activation, int input_size)
    : layers_(std::move(layers)), activation_(activation), input_size_(input_size) {
  if (layers_.empty()) throw std::invalid_argument("feature extractor needs at least one layer");
  int channels = kChannels;
  for (const auto& l : layers_) {
    if (l.in_channels != channels) throw std::invalid_argument("feature extractor layer channel mismatch");
    if (l.kernel < 1 || l.kernel % 2 == 0 || l.stride < 1) throw std::invalid_argument("invalid conv geometry");
    const std::size_t wsize = static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel * l.kernel;
    if (l.weights.size() != wsize || l.bias.size() != static_cast<std::size_t>(l.out_channels) ||
        l.scale.size() != static_cast<std::size_t>(l.out_channels)) {
      throw std::invalid_argument("feature extractor parameter sizes inconsistent");
    }
    channels = l.out_channels;
  }
}

FeatureExtractor FeatureExtractor::standard(std::uint64_t seed) {
  Rng rng(seed);
  auto make = [&](int in, int out, int stride) {
    ConvLayer l;
    l.in_channels = in;
    l.out_channels = out;
    l.kernel = 3;
    l.stride = stride;
    const double sd = 1.0 / std::sqrt(static_cast<double>(in * 9));
    l.weights.resize(static_cast<std::size_t>(out) * in * 9);
    for (auto& w : l.weights) w = rng.normal() * sd * 1.5;
    l.bias.resize(out);
    for (auto& b : l.bias) b = rng.normal() * 0.1;
    l.scale.assign(out, 1.0);
    return l;
  };
  return FeatureExtractor({make(3, 8, 1), make(8, 16, 2), make(16, 32, 2)}, Activation::tanh);
}

FeatureExtractor FeatureExtractor::identity_probe() {
  ConvLayer l;
  l.in_channels = 3;
  l.out_channels = 3;
  l.kernel = 1;
  l.stride = 1;
  l.weights = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  l.bias = {0, 0, 0};
  l.scale = {1, 1, 1};
  return FeatureExtractor({l}, Activation::identity);
}

namespace {

Tensor conv_forward(const ConvLayer& l, const Tensor& in) {
  const int pad = l.kernel / 2;
  const int oh = (in.height + 2 * pad - l.kernel) / l.stride + 1;
  const int ow = (in.width + 2 * pad - l.kernel) / l.stride + 1;
  Tensor out(l.out_channels, oh, ow);
  const int k = l.kernel;
  for (int co = 0; co < l.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double s = l.bias[co];
        for (int ci = 0; ci < l.in_channels; ++ci) {
          const double* w = &l.weights[((static_cast<std::size_t>(co) * l.in_channels + ci) * k) * k];
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * l.stride + ky - pad;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * l.stride + kx - pad;
              if (ix < 0 || ix >= in.width) continue;
              s += w[ky * k + kx] * in.at(ci, iy, ix);
            }
          }
        }
        out.at(co, oy, ox) = s;
      }
    }
  }
  return out;
}

// Accumulates d(loss)/d(input) given d(loss)/d(conv output).
void conv_backward_input(const ConvLayer& l, const Tensor& grad_out, Tensor& grad_in) {
  const int pad = l.kernel / 2;
  const int k = l.kernel;
  for (int co = 0; co < l.out_channels; ++co) {
    for (int oy = 0; oy < grad_out.height; ++oy) {
      for (int ox = 0; ox < grad_out.width; ++ox) {
        const double g = grad_out.at(co, oy, ox);
        if (g == 0.0) continue;
        for (int ci = 0; ci < l.in_channels; ++ci) {
          const double* w = &l.weights[((static_cast<std::size_t>(co) * l.in_channels + ci) * k) * k];
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * l.stride + ky - pad;
            if (iy < 0 || iy >= grad_in.height) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * l.stride + kx - pad;
              if (ix < 0 || ix >= grad_in.width) continue;
              grad_in.at(ci, iy, ix) += w[ky * k + kx] * g;
            }
          }
        }
      }
    }
  }
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0 ? x : 0.0;
  }
  return x;
}

double activate_grad(Activation a, double pre, double post) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh: return 1.0 - post * post;
    case Activation::relu: return pre > 0 ? 1.0 : 0.0;
  }
  return 1.0;
}

double channel_norm(const Tensor& t, int y, int x) {
  double s = 0.0;
  for (int c = 0; c < t.channels; ++c) s += t.at(c, y, x) * t.at(c, y, x);
  return std::sqrt(s);
}

}  // namespace

FeatureExtractor::Trace FeatureExtractor::forward(const Tensor& input) const {
  if (input.channels != kChannels) throw std::invalid_argument("feature extractor expects 3 input channels");
  Trace tr;
  const Tensor* cur = &input;
  for (const auto& l : layers_) {
    Tensor pre = conv_forward(l, *cur);
    Tensor act = pre;
    for (std::size_t i = 0; i < act.data.size(); ++i) act.data[i] = activate(activation_, pre.data[i]);
    Tensor norm = act;
    for (int y = 0; y < act.height; ++y) {
      for (int x = 0; x < act.width; ++x) {
        const double n = channel_norm(act, y, x) + kNormEps;
        for (int c = 0; c < act.channels; ++c) norm.at(c, y, x) = act.at(c, y, x) / n;
      }
    }
    tr.pre.push_back(std::move(pre));
    tr.activation.push_back(std::move(act));
    tr.normalized.push_back(std::move(norm));
    cur = &tr.activation.back();
  }
  return tr;
}

double FeatureExtractor::distance(const Trace& a, const Trace& b) const {
  if (a.normalized.size() != layers_.size() || b.normalized.size() != layers_.size()) {
    throw std::invalid_argument("trace does not match extractor depth");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Tensor& ya = a.normalized[l];
    const Tensor& yb = b.normalized[l];
    if (ya.height != yb.height || ya.width != yb.width) throw std::invalid_argument("feature map size mismatch");
    double layer = 0.0;
    for (int c = 0; c < ya.channels; ++c) {
      const double w = layers_[l].scale[c];
      for (int y = 0; y < ya.height; ++y)
        for (int x = 0; x < ya.width; ++x) {
          const double d = w * (ya.at(c, y, x) - yb.at(c, y, x));
          layer += d * d;
        }
    }
    total += layer / (static_cast<double>(ya.height) * ya.width);
  }
  return total;
}

double FeatureExtractor::distance_with_grad(const Trace& reference, const Tensor& input, Tensor& grad) const {
  const Trace tr = forward(input);
  const double d = distance(reference, tr);
  Tensor upstream;  // d(loss)/d(activation of layer l) arriving from layer l+1
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Tensor& act = tr.activation[li];
    const Tensor& norm = tr.normalized[li];
    const Tensor& ref = reference.normalized[li];
    const double hw = static_cast<double>(act.height) * act.width;
    Tensor g_act = upstream.data.empty() ? Tensor(act.channels, act.height, act.width) : std::move(upstream);
    std::vector<double> g(act.channels);
    for (int y = 0; y < act.height; ++y) {
      for (int x = 0; x < act.width; ++x) {
        const double n = channel_norm(act, y, x);
        const double ne = n + kNormEps;
        // g = d(loss)/d(normalized)
        double dot = 0.0;
        for (int c = 0; c < act.channels; ++c) {
          const double w = layers_[li].scale[c];
          g[c] = 2.0 * w * w * (norm.at(c, y, x) - ref.at(c, y, x)) / hw;
          dot += act.at(c, y, x) * g[c];
        }
        for (int c = 0; c < act.channels; ++c) {
          double v = g[c] / ne;
          if (n > 0) v -= act.at(c, y, x) * dot / (n * ne * ne);
          g_act.at(c, y, x) += v;
        }
      }
    }
    Tensor g_pre = g_act;
    for (std::size_t i = 0; i < g_pre.data.size(); ++i)
      g_pre.data[i] *= activate_grad(activation_, tr.pre[li].data[i], act.data[i]);
    const Tensor& below = li == 0 ? input : tr.activation[li - 1];
    Tensor g_in(below.channels, below.height, below.width);
    conv_backward_input(layers_[li], g_pre, g_in);
    upstream = std::move(g_in);
  }
  grad = std::move(upstream);
  return d;
}

double perceptual_distance(const Image& a, const Image& b, const FeatureExtractor& fx) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ImageError("perceptual_distance: image dimensions differ");
  }
  const int s = fx.input_size();
  const Image ra = s > 0 ? resize_bilinear(a, s, s) : a;
  const Image rb = s > 0 ? resize_bilinear(b, s, s) : b;
  return fx.distance(fx.forward(image_to_tensor(ra)), fx.forward(image_to_tensor(rb)));
}

double mse(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw ImageError("mse: image dimensions differ");
  if (a.empty()) throw ImageError("mse: empty image");
  const auto sa = a.samples();
  const auto sb = b.samples();
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = static_cast<double>(sa[i]) - sb[i];
    s += d * d;
  }
  return s / static_cast<double>(sa.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

ScoreReport summarize_scores(std::vector<double> scores) {
  if (scores.empty()) throw std::invalid_argument("score set is empty");
  ScoreReport r;
  r.scores = std::move(scores);
  const auto [mn, mx] = std::minmax_element(r.scores.begin(), r.scores.end());
  r.min = *mn;
  r.max = *mx;
  r.q1 = quantile(r.scores, 0.25);
  r.median = quantile(r.scores, 0.5);
  r.q3 = quantile(r.scores, 0.75);
  r.mean = std::accumulate(r.scores.begin(), r.scores.end(), 0.0) / static_cast<double>(r.scores.size());
  const double iqr = r.q3 - r.q1;
  r.lower_fence = r.q1 - 1.5 * iqr;
  r.upper_fence = r.q3 + 1.5 * iqr;
  for (std::size_t i = 0; i < r.scores.size(); ++i)
    if (r.scores[i] < r.lower_fence || r.scores[i] > r.upper_fence) r.outliers.push_back(i);
  return r;
}

ScoreReport score_set(const std::vector<std::pair<Image, Image>>& pairs, const FeatureExtractor& fx) {
  if (pairs.empty()) throw std::invalid_argument("score_set: no pairs");
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& [ref, cand] : pairs) scores.push_back(perceptual_distance(ref, cand, fx));
  return summarize_scores(std::move(scores));
}

nlohmann::json to_json(const ScoreReport& r) {
  nlohmann::json j;
  j["scores"] = r.scores;
  j["quartile_method"] = "linear interpolation at p*(n-1)";
  j["aggregates"] = {{"min", r.min},   {"q1", r.q1},     {"median", r.median},
                     {"q3", r.q3},     {"max", r.max},   {"mean", r.mean},
                     {"lower_fence", r.lower_fence}, {"upper_fence", r.upper_fence}};
  j["outliers"] = r.outliers;
  return j;
}

}  // namespace etcbench
