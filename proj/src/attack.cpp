#include "etcbench/attack.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "etcbench/leakage.hpp"
#include "etcbench/random.hpp"

namespace etcbench {

const char* to_string(FeatureMode m) { return m == FeatureMode::canonical ? "canonical" : "raw"; }

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "canonical") return FeatureMode::canonical;
  if (s == "raw") return FeatureMode::raw;
  throw std::invalid_argument("unknown feature mode: " + s);
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (steps_per_epoch < 0) throw std::invalid_argument("steps_per_epoch must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(lambda_pix >= 0) || !(lambda_perc >= 0)) throw std::invalid_argument("loss weights must be >= 0");
  if (latent_dim < 1 || hidden_dim < 1 || embed_dim < 1) throw std::invalid_argument("layer sizes must be >= 1");
  if (block_size < 1) throw std::invalid_argument("block_size must be >= 1");
  if (key_period < 0) throw std::invalid_argument("key_period must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"steps_per_epoch", c.steps_per_epoch},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"lambda_pix", c.lambda_pix},
          {"lambda_perc", c.lambda_perc},
          {"latent_dim", c.latent_dim},
          {"hidden_dim", c.hidden_dim},
          {"embed_dim", c.embed_dim},
          {"block_size", c.block_size},
          {"init_seed", c.init_seed},
          {"key_seed", c.key_seed},
          {"key_period", c.key_period},
          {"features", to_string(c.features)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lambda_pix = j.value("lambda_pix", c.lambda_pix);
  c.lambda_perc = j.value("lambda_perc", c.lambda_perc);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.block_size = j.value("block_size", c.block_size);
  c.init_seed = j.value("init_seed", c.init_seed);
  c.key_seed = j.value("key_seed", c.key_seed);
  c.key_period = j.value("key_period", c.key_period);
  c.features = feature_mode_from_string(j.value("features", std::string(to_string(c.features))));
  c.validate();
  return c;
}

AttackWeights AttackWeights::zeros_like() const {
  AttackWeights z = *this;
  for (auto& [name, t] : z.tensors()) std::fill(t->begin(), t->end(), 0.0);
  return z;
}

std::vector<std::pair<std::string, std::vector<double>*>> AttackWeights::tensors() {
  return {{"w1", &w1},     {"b1", &b1},         {"w2", &w2},
          {"b2", &b2},     {"proj", &proj},     {"proj_bias", &proj_bias},
          {"avg_latent", &avg_latent}, {"dec", &dec}, {"dec_bias", &dec_bias}};
}

std::vector<std::pair<std::string, const std::vector<double>*>> AttackWeights::tensors() const {
  std::vector<std::pair<std::string, const std::vector<double>*>> out;
  for (auto& [name, t] : const_cast<AttackWeights*>(this)->tensors()) out.emplace_back(name, t);
  return out;
}

bool AttackWeights::all_finite() const {
  for (const auto& [name, t] : tensors())
    for (double v : *t)
      if (!std::isfinite(v)) return false;
  return true;
}

AttackModel init_model(const TrainConfig& cfg, int image_size) {
  cfg.validate();
  AttackModel m;
  m.input_dim = 3 * kHistogramBins;
  m.hidden_dim = cfg.hidden_dim;
  m.embed_dim = cfg.embed_dim;
  m.latent_dim = cfg.latent_dim;
  m.block_size = cfg.block_size;
  m.image_size = image_size;
  m.features = cfg.features;
  m.config = cfg;

  Rng rng(derive_seed(cfg.init_seed, 0x77e1));
  auto gauss = [&](std::size_t count, double sd) {
    std::vector<double> v(count);
    for (auto& x : v) x = sd * rng.normal();
    return v;
  };
  auto& w = m.weights;
  // Features are square roots of histogram fractions: unit norm per channel.
  w.w1 = gauss(static_cast<std::size_t>(m.hidden_dim) * m.input_dim, 1.0 / std::sqrt(3.0));
  w.b1.assign(m.hidden_dim, 0.0);
  w.w2 = gauss(static_cast<std::size_t>(m.embed_dim) * m.hidden_dim, 1.0 / std::sqrt(m.hidden_dim));
  w.b2.assign(m.embed_dim, 0.0);
  w.proj = gauss(static_cast<std::size_t>(m.latent_dim) * m.embed_dim, 1.0 / std::sqrt(m.embed_dim));
  w.proj_bias.assign(m.latent_dim, 0.0);
  w.avg_latent.assign(m.latent_dim, 0.0);
  w.dec = gauss(static_cast<std::size_t>(kThumbValues) * m.latent_dim, 0.01);
  w.dec_bias.assign(kThumbValues, 0.5);
  m.mean_thumbnail.assign(kThumbValues, 127.5);
  return m;
}

Image Thumbnail::to_image() const {
  if (values.size() != static_cast<std::size_t>(kThumbValues)) throw std::invalid_argument("thumbnail has wrong size");
  Image img(kThumbSide, kThumbSide);
  auto s = img.samples();
  for (std::size_t i = 0; i < values.size(); ++i)
    s[i] = static_cast<std::uint8_t>(std::lround(std::clamp(values[i], 0.0, 255.0)));
  return img;
}

Thumbnail thumbnail_of(const Image& img) {
  if (img.width() != img.height() || img.width() % kThumbSide != 0) {
    throw ImageError("thumbnail_of: image must be square with side a multiple of 16");
  }
  const Image small = downsample(img, img.width() / kThumbSide);
  Thumbnail t;
  t.values.assign(small.samples().begin(), small.samples().end());
  return t;
}

std::vector<double> block_features(const Image& enc, int block_size, FeatureMode mode) {
  if (block_count(enc.width(), enc.height(), block_size, block_size) == 0) {
    throw ImageError("image too small for one block");
  }
  const BlockGrid grid = split_blocks(enc, block_size, block_size);
  std::vector<double> f;
  f.reserve(grid.size() * 3 * kHistogramBins);
  for (const Image& b : grid.blocks) {
    const auto h = block_histogram(mode == FeatureMode::canonical ? canonicalize_block(b).block : b);
    for (double v : h) f.push_back(std::sqrt(v));
  }
  return f;
}

namespace {

// Activations of one forward pass, kept for backprop.
struct Forward {
  std::size_t blocks = 0;
  std::vector<double> hidden;  // blocks x hidden
  std::vector<double> embed;   // blocks x embed
  std::vector<double> pooled;  // embed
  std::vector<double> latent;  // latent (before adding avg_latent)
  std::vector<double> code;    // latent + avg_latent
  std::vector<double> out;     // thumbnail, pixel units, unclamped
};

void check_features(const AttackModel& m, const std::vector<double>& f) {
  if (f.empty() || f.size() % m.input_dim != 0) throw std::invalid_argument("feature matrix has wrong shape");
}

Forward forward(const AttackModel& m, const std::vector<double>& f) {
  check_features(m, f);
  const auto& w = m.weights;
  const int in = m.input_dim, H = m.hidden_dim, E = m.embed_dim, D = m.latent_dim;
  Forward r;
  r.blocks = f.size() / in;
  r.hidden.resize(r.blocks * H);
  r.embed.resize(r.blocks * E);
  r.pooled.assign(E, 0.0);
  for (std::size_t b = 0; b < r.blocks; ++b) {
    const double* x = &f[b * in];
    double* h = &r.hidden[b * H];
    for (int j = 0; j < H; ++j) {
      double s = w.b1[j];
      const double* wr = &w.w1[static_cast<std::size_t>(j) * in];
      for (int k = 0; k < in; ++k) s += wr[k] * x[k];
      h[j] = std::tanh(s);
    }
    double* e = &r.embed[b * E];
    for (int j = 0; j < E; ++j) {
      double s = w.b2[j];
      const double* wr = &w.w2[static_cast<std::size_t>(j) * H];
      for (int k = 0; k < H; ++k) s += wr[k] * h[k];
      e[j] = std::tanh(s);
    }
  }
  // Sum in block order, then divide: for a block permutation the per-block
  // embeddings are identical, only the summation order changes. Sort each
  // coordinate first so the pooled value is bit-identical under permutation.
  std::vector<double> col(r.blocks);
  for (int j = 0; j < E; ++j) {
    for (std::size_t b = 0; b < r.blocks; ++b) col[b] = r.embed[b * E + j];
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (double v : col) s += v;
    r.pooled[j] = s / static_cast<double>(r.blocks);
  }
  r.latent.resize(D);
  r.code.resize(D);
  for (int i = 0; i < D; ++i) {
    double s = w.proj_bias[i];
    for (int j = 0; j < E; ++j) s += w.proj[static_cast<std::size_t>(i) * E + j] * r.pooled[j];
    r.latent[i] = s;
    r.code[i] = s + w.avg_latent[i];
  }
  r.out.resize(kThumbValues);
  for (int k = 0; k < kThumbValues; ++k) {
    double s = w.dec_bias[k];
    const double* wr = &w.dec[static_cast<std::size_t>(k) * D];
    for (int i = 0; i < D; ++i) s += wr[i] * r.code[i];
    r.out[k] = 255.0 * s;
  }
  return r;
}

// Accumulates scale * d(loss)/d(params) given d(loss)/d(out).
void backward(const AttackModel& m, const std::vector<double>& f, const Forward& fw, const std::vector<double>& d_out,
              double scale, AttackWeights& g) {
  const auto& w = m.weights;
  const int in = m.input_dim, H = m.hidden_dim, E = m.embed_dim, D = m.latent_dim;
  std::vector<double> d_code(D, 0.0);
  for (int k = 0; k < kThumbValues; ++k) {
    const double d = scale * 255.0 * d_out[k];
    g.dec_bias[k] += d;
    double* gr = &g.dec[static_cast<std::size_t>(k) * D];
    const double* wr = &w.dec[static_cast<std::size_t>(k) * D];
    for (int i = 0; i < D; ++i) {
      gr[i] += d * fw.code[i];
      d_code[i] += d * wr[i];
    }
  }
  std::vector<double> d_pooled(E, 0.0);
  for (int i = 0; i < D; ++i) {
    g.avg_latent[i] += d_code[i];
    g.proj_bias[i] += d_code[i];
    for (int j = 0; j < E; ++j) {
      g.proj[static_cast<std::size_t>(i) * E + j] += d_code[i] * fw.pooled[j];
      d_pooled[j] += d_code[i] * w.proj[static_cast<std::size_t>(i) * E + j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(fw.blocks);
  std::vector<double> d_a2(E), d_a1(H);
  for (std::size_t b = 0; b < fw.blocks; ++b) {
    const double* e = &fw.embed[b * E];
    const double* h = &fw.hidden[b * H];
    const double* x = &f[b * in];
    for (int j = 0; j < E; ++j) d_a2[j] = d_pooled[j] * inv_n * (1.0 - e[j] * e[j]);
    std::fill(d_a1.begin(), d_a1.end(), 0.0);
    for (int j = 0; j < E; ++j) {
      g.b2[j] += d_a2[j];
      double* gr = &g.w2[static_cast<std::size_t>(j) * H];
      const double* wr = &w.w2[static_cast<std::size_t>(j) * H];
      for (int k = 0; k < H; ++k) {
        gr[k] += d_a2[j] * h[k];
        d_a1[k] += d_a2[j] * wr[k];
      }
    }
    for (int k = 0; k < H; ++k) {
      const double d = d_a1[k] * (1.0 - h[k] * h[k]);
      g.b1[k] += d;
      double* gr = &g.w1[static_cast<std::size_t>(k) * in];
      for (int t = 0; t < in; ++t) gr[t] += d * x[t];
    }
  }
}

LossResult loss_against(const TrainingTarget& target, const std::vector<double>& recon, const TrainConfig& cfg) {
  if (recon.size() != static_cast<std::size_t>(kThumbValues)) throw std::invalid_argument("reconstruction has wrong size");
  LossResult r;
  r.grad.assign(kThumbValues, 0.0);
  constexpr double norm = 1.0 / (255.0 * 255.0 * kThumbValues);
  for (int k = 0; k < kThumbValues; ++k) {
    const double d = recon[k] - target.thumb.values[k];
    r.pixel += d * d * norm;
    r.grad[k] = cfg.lambda_pix * 2.0 * d * norm;
  }
  if (cfg.lambda_perc > 0) {
    const auto& fx = attack_feature_extractor();
    Tensor grad;
    r.perceptual = fx.distance_with_grad(target.trace, pixels_to_tensor(recon, kThumbSide, kThumbSide), grad);
    // Tensor is C x H x W on x / 127.5 - 1.
    for (int c = 0; c < kChannels; ++c)
      for (int y = 0; y < kThumbSide; ++y)
        for (int x = 0; x < kThumbSide; ++x)
          r.grad[(static_cast<std::size_t>(y) * kThumbSide + x) * kChannels + c] +=
              cfg.lambda_perc * grad.at(c, y, x) / 127.5;
  }
  r.total = cfg.lambda_pix * r.pixel + cfg.lambda_perc * r.perceptual;
  return r;
}

}  // namespace

StyleLatent encode_features(const AttackModel& model, const std::vector<double>& features) {
  return forward(model, features).latent;
}

StyleLatent encode(const AttackModel& model, const Image& enc) {
  return encode_features(model, block_features(enc, model.block_size, model.features));
}

Thumbnail decode_unclamped(const AttackModel& model, const StyleLatent& z) {
  if (z.size() != static_cast<std::size_t>(model.latent_dim)) throw std::invalid_argument("latent dimension mismatch");
  const auto& w = model.weights;
  Thumbnail t;
  t.values.resize(kThumbValues);
  for (int k = 0; k < kThumbValues; ++k) {
    double s = w.dec_bias[k];
    for (int i = 0; i < model.latent_dim; ++i)
      s += w.dec[static_cast<std::size_t>(k) * model.latent_dim + i] * (z[i] + w.avg_latent[i]);
    t.values[k] = 255.0 * s;
  }
  return t;
}

Thumbnail decode(const AttackModel& model, const StyleLatent& z) {
  Thumbnail t = decode_unclamped(model, z);
  for (auto& v : t.values) v = std::clamp(v, 0.0, 255.0);
  return t;
}

Thumbnail attack(const AttackModel& model, const Image& enc) {
  if (enc.width() != model.image_size || enc.height() != model.image_size) {
    throw ImageError("attack: ciphertext is " + std::to_string(enc.width()) + "x" + std::to_string(enc.height()) +
                     ", model was trained on " + std::to_string(model.image_size) + "x" +
                     std::to_string(model.image_size));
  }
  return decode(model, encode(model, enc));
}

const FeatureExtractor& attack_feature_extractor() {
  static const FeatureExtractor fx = FeatureExtractor::standard();
  return fx;
}

TrainingTarget make_target(const Image& plain) {
  TrainingTarget t;
  t.thumb = thumbnail_of(plain);
  t.trace = attack_feature_extractor().forward(pixels_to_tensor(t.thumb.values, kThumbSide, kThumbSide));
  return t;
}

LossResult total_loss(const Thumbnail& target, const Thumbnail& recon, const TrainConfig& cfg) {
  TrainingTarget t;
  t.thumb = target;
  if (cfg.lambda_perc > 0) {
    t.trace = attack_feature_extractor().forward(pixels_to_tensor(target.values, kThumbSide, kThumbSide));
  }
  return loss_against(t, recon.values, cfg);
}

LossResult total_loss(const Image& plain, const Thumbnail& recon, const TrainConfig& cfg) {
  return total_loss(thumbnail_of(plain), recon, cfg);
}

double loss_and_gradients(const AttackModel& model, const std::vector<const std::vector<double>*>& features,
                          const std::vector<const TrainingTarget*>& targets, AttackWeights& grads) {
  if (features.size() != targets.size() || features.empty()) throw std::invalid_argument("batch shape mismatch");
  const double scale = 1.0 / static_cast<double>(features.size());
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Forward fw = forward(model, *features[i]);
    const LossResult l = loss_against(*targets[i], fw.out, model.config);
    total += l.total;
    backward(model, *features[i], fw, l.grad, scale, grads);
  }
  return total * scale;
}

TrainResult train(const std::vector<Image>& train_images, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_images.empty()) throw std::invalid_argument("train: empty training split");
  const int size = train_images.front().width();
  for (const auto& img : train_images)
    if (img.width() != size || img.height() != size) throw ImageError("train: images must share one square size");

  AttackModel model = init_model(cfg, size);
  std::vector<TrainingTarget> targets;
  targets.reserve(train_images.size());
  for (const auto& img : train_images) targets.push_back(make_target(img));

  // Constant baseline and decoder starting point: the training-set mean.
  std::vector<double> mean(kThumbValues, 0.0);
  for (const auto& t : targets)
    for (int k = 0; k < kThumbValues; ++k) mean[k] += t.thumb.values[k];
  for (auto& v : mean) v /= static_cast<double>(targets.size());
  model.mean_thumbnail = mean;
  for (int k = 0; k < kThumbValues; ++k) model.weights.dec_bias[k] = mean[k] / 255.0;

  Rng order_rng(derive_seed(cfg.init_seed, 0x0dde));
  Rng key_rng(cfg.key_seed);
  const std::size_t n = train_images.size();
  const std::size_t bs = std::min<std::size_t>(cfg.batch_size, n);
  const std::size_t steps = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : (n + bs - 1) / bs;

  MasterKey key;
  TrainResult result;
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;  // forces a shuffle on first use
  AttackWeights grads = model.weights.zeros_like();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch == 0 || (cfg.key_period > 0 && epoch % cfg.key_period == 0)) key.seed = key_rng.seed256();
    double epoch_loss = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<std::vector<double>> feats;
      std::vector<const TrainingTarget*> batch_targets;
      for (std::size_t b = 0; b < bs; ++b) {
        if (cursor == n) {
          for (std::size_t i = 0; i < n; ++i) order[i] = i;
          order_rng.shuffle(order);
          cursor = 0;
        }
        const std::size_t idx = order[cursor++];
        feats.push_back(block_features(encrypt(train_images[idx], key, cfg.block_size), cfg.block_size, cfg.features));
        batch_targets.push_back(&targets[idx]);
      }
      std::vector<const std::vector<double>*> fptr;
      for (const auto& f : feats) fptr.push_back(&f);
      for (auto& [name, t] : grads.tensors()) std::fill(t->begin(), t->end(), 0.0);
      epoch_loss += loss_and_gradients(model, fptr, batch_targets, grads);
      auto params = model.weights.tensors();
      auto gs = grads.tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        auto& p = *params[t].second;
        const auto& g = *gs[t].second;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * g[i];
      }
    }
    epoch_loss /= static_cast<double>(steps);
    result.epoch_loss.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  if (!model.weights.all_finite()) throw std::runtime_error("train: weights diverged");
  model.loss_trace = result.epoch_loss;
  result.model = std::move(model);
  return result;
}

TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  const auto idx = manifest.indices(Split::train);
  if (idx.empty()) throw std::invalid_argument("train: manifest has no training split");
  return train(load_images(manifest, idx), cfg, on_epoch);
}

namespace {

struct Region {
  int y0, y1, x0, x1;  // inclusive thumbnail cells
};

// Cells that hold the attribute for every hair shape and face jitter.
const std::vector<Region>& hair_regions() {
  static const std::vector<Region> r{{3, 4, 7, 8}};
  return r;
}
const std::vector<Region>& skin_regions() {
  static const std::vector<Region> r{{9, 10, 5, 6}, {9, 10, 9, 10}};
  return r;
}
const std::vector<Region>& background_regions() {
  static const std::vector<Region> r{{0, 1, 0, 1}, {0, 1, 14, 15}};
  return r;
}

std::array<double, 3> region_mean(const Thumbnail& t, const std::vector<Region>& regions) {
  std::array<double, 3> s{};
  int count = 0;
  for (const auto& r : regions)
    for (int y = r.y0; y <= r.y1; ++y)
      for (int x = r.x0; x <= r.x1; ++x) {
        for (int c = 0; c < kChannels; ++c) s[c] += t.values[(static_cast<std::size_t>(y) * kThumbSide + x) * kChannels + c];
        ++count;
      }
  for (auto& v : s) v /= count;
  return s;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double attribute_score(const std::vector<Thumbnail>& recon, const std::vector<ToyFaceParams>& truth,
                       const std::vector<Region>& regions, Rgb ToyFaceParams::*field) {
  double total = 0.0;
  for (int c = 0; c < kChannels; ++c) {
    std::vector<double> got, want;
    for (std::size_t i = 0; i < recon.size(); ++i) {
      got.push_back(region_mean(recon[i], regions)[c]);
      const Rgb& col = truth[i].*field;
      want.push_back(c == 0 ? col.r : c == 1 ? col.g : col.b);
    }
    total += pearson(got, want);
  }
  return total / kChannels;
}

}  // namespace

AttributeScores recover_attributes(const std::vector<Thumbnail>& recon, const std::vector<ToyFaceParams>& truth) {
  if (recon.size() != truth.size()) throw std::invalid_argument("recover_attributes: missing params");
  if (recon.size() < 2) throw std::invalid_argument("recover_attributes: need at least two samples");
  AttributeScores s;
  s.samples = recon.size();
  s.hair = attribute_score(recon, truth, hair_regions(), &ToyFaceParams::hair);
  s.skin = attribute_score(recon, truth, skin_regions(), &ToyFaceParams::skin);
  s.background = attribute_score(recon, truth, background_regions(), &ToyFaceParams::background);
  return s;
}

EvalResult evaluate_attack(const AttackModel& model, const std::vector<Image>& plain, std::uint64_t key_seed) {
  Rng key_rng(key_seed);
  std::vector<Image> enc;
  enc.reserve(plain.size());
  for (const Image& img : plain) {
    MasterKey key;
    key.seed = key_rng.seed256();
    enc.push_back(encrypt(img, key, model.block_size));
  }
  return evaluate_ciphertexts(model, plain, enc);
}

EvalResult evaluate_ciphertexts(const AttackModel& model, const std::vector<Image>& plain,
                                const std::vector<Image>& enc) {
  if (plain.size() != enc.size()) throw std::invalid_argument("evaluate: plain/cipher counts differ");
  const auto& fx = attack_feature_extractor();
  Thumbnail mean;
  mean.values = model.mean_thumbnail;
  for (auto& v : mean.values) v = std::clamp(v, 0.0, 255.0);
  const auto mean_trace = fx.forward(pixels_to_tensor(mean.values, kThumbSide, kThumbSide));
  auto thumb_mse = [](const Thumbnail& a, const Thumbnail& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) s += (a.values[k] - b.values[k]) * (a.values[k] - b.values[k]);
    return s / static_cast<double>(a.values.size());
  };
  EvalResult r;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    if (enc[i].width() != model.image_size || enc[i].height() != model.image_size) {
      throw ImageError("evaluate: ciphertext size differs from the training resolution");
    }
    const TrainingTarget target = make_target(plain[i]);
    const Forward fw = forward(model, block_features(enc[i], model.block_size, model.features));
    r.heldout_loss.push_back(loss_against(target, fw.out, model.config).total);
    Thumbnail recon;
    recon.values = fw.out;
    for (auto& v : recon.values) v = std::clamp(v, 0.0, 255.0);
    r.attack_mse.push_back(thumb_mse(recon, target.thumb));
    r.baseline_mse.push_back(thumb_mse(mean, target.thumb));
    const auto recon_trace = fx.forward(pixels_to_tensor(recon.values, kThumbSide, kThumbSide));
    r.attack_perceptual.push_back(fx.distance(target.trace, recon_trace));
    r.baseline_perceptual.push_back(fx.distance(target.trace, mean_trace));
    const Thumbnail enc_thumb = thumbnail_of(enc[i]);
    r.encrypted_perceptual.push_back(
        fx.distance(target.trace, fx.forward(pixels_to_tensor(enc_thumb.values, kThumbSide, kThumbSide))));
    r.reconstructions.push_back(std::move(recon));
  }
  return r;
}

nlohmann::json to_json(const EvalResult& r) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  return {{"images", r.attack_mse.size()},
          {"mse_attack", mean(r.attack_mse)},
          {"mse_mean_predictor", mean(r.baseline_mse)},
          {"heldout_loss", mean(r.heldout_loss)},
          {"perceptual_attack", to_json(summarize_scores(r.attack_perceptual))},
          {"perceptual_mean_predictor", to_json(summarize_scores(r.baseline_perceptual))},
          {"perceptual_ciphertext", to_json(summarize_scores(r.encrypted_perceptual))},
          {"per_image",
           {{"mse_attack", r.attack_mse},
            {"mse_mean_predictor", r.baseline_mse},
            {"perceptual_attack", r.attack_perceptual},
            {"perceptual_mean_predictor", r.baseline_perceptual},
            {"perceptual_ciphertext", r.encrypted_perceptual}}}};
}

nlohmann::json to_json(const AttackModel& model) {
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [name, t] : model.weights.tensors()) w[name] = *t;
  return {{"format", "etcbench-attack-model/1"},
          {"input_dim", model.input_dim},
          {"hidden_dim", model.hidden_dim},
          {"embed_dim", model.embed_dim},
          {"latent_dim", model.latent_dim},
          {"block_size", model.block_size},
          {"image_size", model.image_size},
          {"features", to_string(model.features)},
          {"config", to_json(model.config)},
          {"weights", w},
          {"mean_thumbnail", model.mean_thumbnail},
          {"loss_trace", model.loss_trace}};
}

AttackModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "etcbench-attack-model/1") throw std::invalid_argument("not an attack model file");
  AttackModel m;
  m.input_dim = j.at("input_dim").get<int>();
  m.hidden_dim = j.at("hidden_dim").get<int>();
  m.embed_dim = j.at("embed_dim").get<int>();
  m.latent_dim = j.at("latent_dim").get<int>();
  m.block_size = j.at("block_size").get<int>();
  m.image_size = j.at("image_size").get<int>();
  m.features = feature_mode_from_string(j.at("features").get<std::string>());
  m.config = train_config_from_json(j.at("config"));
  for (auto& [name, t] : m.weights.tensors()) *t = j.at("weights").at(name).get<std::vector<double>>();
  m.mean_thumbnail = j.at("mean_thumbnail").get<std::vector<double>>();
  m.loss_trace = j.value("loss_trace", std::vector<double>{});

  const std::size_t in = m.input_dim, H = m.hidden_dim, E = m.embed_dim, D = m.latent_dim;
  const auto& w = m.weights;
  const bool ok = in == 3 * kHistogramBins && w.w1.size() == H * in && w.b1.size() == H && w.w2.size() == E * H &&
                  w.b2.size() == E && w.proj.size() == D * E && w.proj_bias.size() == D && w.avg_latent.size() == D &&
                  w.dec.size() == kThumbValues * D && w.dec_bias.size() == kThumbValues &&
                  m.mean_thumbnail.size() == static_cast<std::size_t>(kThumbValues);
  if (!ok) throw std::invalid_argument("attack model tensors have inconsistent shapes");
  if (!w.all_finite()) throw std::invalid_argument("attack model has non-finite weights");
  return m;
}

void save_model(const AttackModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

AttackModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return model_from_json(nlohmann::json::parse(in));
}

}  // namespace etcbench
