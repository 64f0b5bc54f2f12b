#include <gtest/gtest.h>

#include <cmath>

#include "etcbench/attack.hpp"
#include "etcbench/repro.hpp"
#include "etcbench/random.hpp"

using namespace etcbench;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.latent_dim = 6;
  c.hidden_dim = 8;
  c.embed_dim = 5;
  c.epochs = 3;
  c.batch_size = 4;
  return c;
}

std::vector<Image> faces(int n, int size, std::uint64_t seed) {
  const ToyCorpus c = generate_toy_corpus(n, size, seed, 0.0);
  return c.images;
}

MasterKey key_from(Rng& rng) {
  MasterKey k;
  k.seed = rng.seed256();
  return k;
}

}  // namespace

TEST(Encoder, PoolingIgnoresBlockOrder) {
  const AttackModel m = init_model(small_config(), 64);
  const Image face = faces(1, 64, 1)[0];
  const StyleLatent z = encode(m, face);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    KeyMaterial km = KeyMaterial::identity(16);
    rng.shuffle(km.permutation);
    EXPECT_EQ(encode(m, encrypt_with(face, km, 16)), z);
  }
}

TEST(Encoder, CanonicalFeaturesIgnoreTheKey) {
  const AttackModel m = init_model(small_config(), 64);
  const Image face = faces(1, 64, 3)[0];
  Rng rng(4);
  const StyleLatent z = encode(m, encrypt(face, key_from(rng)));
  for (int i = 0; i < 20; ++i) EXPECT_EQ(encode(m, encrypt(face, key_from(rng))), z);
  EXPECT_EQ(encode(m, face), z);
}

TEST(Encoder, ZeroWeightsGiveZeroLatent) {
  AttackModel m = init_model(small_config(), 64);
  for (auto& [name, t] : m.weights.tensors()) std::fill(t->begin(), t->end(), 0.0);
  for (double v : encode(m, faces(1, 64, 5)[0])) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(encode(m, Image(8, 8)), ImageError);
}

TEST(Decoder, AffineBeforeClamp) {
  const AttackModel m = init_model(small_config(), 64);
  Rng rng(6);
  StyleLatent z1(6), z2(6), zero(6, 0.0), sum(6);
  for (int i = 0; i < 6; ++i) {
    z1[i] = rng.normal();
    z2[i] = rng.normal();
    sum[i] = z1[i] + z2[i];
  }
  const auto a = decode_unclamped(m, z1).values, b = decode_unclamped(m, z2).values;
  const auto o = decode_unclamped(m, zero).values, s = decode_unclamped(m, sum).values;
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k] + b[k] - o[k], s[k], 1e-9);
  EXPECT_THROW(decode(m, StyleLatent(5)), std::invalid_argument);
}

TEST(Decoder, ZeroWeightsGiveBiasImageAndOutputIsClamped) {
  AttackModel m = init_model(small_config(), 64);
  std::fill(m.weights.dec.begin(), m.weights.dec.end(), 0.0);
  const Thumbnail t = decode(m, StyleLatent(6, 3.0));
  for (double v : t.values) EXPECT_DOUBLE_EQ(v, 127.5);
  m.weights.dec_bias[0] = 2.0;
  EXPECT_EQ(decode(m, StyleLatent(6, 0.0)).values[0], 255.0);
  EXPECT_EQ(decode_unclamped(m, StyleLatent(6, 0.0)).values[0], 510.0);
}

TEST(Decoder, ZeroLatentDecodesAverageLatent) {
  AttackModel m = init_model(small_config(), 64);
  Rng rng(7);
  for (auto& v : m.weights.avg_latent) v = rng.normal();
  StyleLatent wbar(6, 0.0);
  AttackModel shifted = m;
  std::fill(shifted.weights.avg_latent.begin(), shifted.weights.avg_latent.end(), 0.0);
  const auto a = decode_unclamped(m, wbar).values;
  const auto b = decode_unclamped(shifted, m.weights.avg_latent).values;
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
}

TEST(Loss, ZeroAtTargetAndReducesToMse) {
  const Image face = faces(1, 64, 8)[0];
  const Thumbnail target = thumbnail_of(face);
  TrainConfig cfg;
  const LossResult zero = total_loss(face, target, cfg);
  EXPECT_EQ(zero.pixel, 0.0);
  EXPECT_EQ(zero.perceptual, 0.0);
  EXPECT_EQ(zero.total, 0.0);

  Thumbnail off = target;
  for (auto& v : off.values) v = std::min(255.0, v + 10.0);
  cfg.lambda_perc = 0.0;
  cfg.lambda_pix = 2.0;
  const LossResult l = total_loss(face, off, cfg);
  double mse = 0;
  for (std::size_t k = 0; k < off.values.size(); ++k) mse += std::pow((off.values[k] - target.values[k]) / 255.0, 2);
  mse /= off.values.size();
  EXPECT_NEAR(l.total, 2.0 * mse, 1e-15);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  const Image face = faces(1, 32, 9)[0];
  Rng rng(10);
  Thumbnail recon = thumbnail_of(faces(1, 32, 11)[0]);
  for (auto& v : recon.values) v += 5 * rng.normal();
  const TrainConfig cfg;
  const LossResult l = total_loss(face, recon, cfg);
  for (std::size_t k = 0; k < recon.values.size(); k += 13) {
    Thumbnail p = recon, m = recon;
    const double h = 1e-3;
    p.values[k] += h;
    m.values[k] -= h;
    const double num = (total_loss(face, p, cfg).total - total_loss(face, m, cfg).total) / (2 * h);
    EXPECT_NEAR(l.grad[k], num, 1e-4 * std::max(std::abs(num), 1e-6)) << k;
  }
}

TEST(Training, EveryParameterGradientMatchesFiniteDifferences) {
  const GradientCheck g = gradient_check(12345);
  EXPECT_LE(g.max_rel_error, 1e-4) << g.worst_parameter;
  EXPECT_GT(g.parameters, 4000u);
}

TEST(Training, ZeroEpochsLeavesInitialWeights) {
  TrainConfig cfg = small_config();
  cfg.epochs = 0;
  const auto imgs = faces(8, 32, 13);
  const TrainResult r = train(imgs, cfg);
  const AttackModel init = init_model(cfg, 32);
  EXPECT_EQ(r.model.weights.w1, init.weights.w1);
  EXPECT_EQ(r.model.weights.dec, init.weights.dec);
  EXPECT_TRUE(r.epoch_loss.empty());
}

TEST(Training, DeterministicAndLossDecreases) {
  TrainConfig cfg = small_config();
  cfg.epochs = 6;
  cfg.learning_rate = 0.2;
  const auto imgs = faces(48, 32, 14);
  const TrainResult a = train(imgs, cfg), b = train(imgs, cfg);
  const auto ta = a.model.weights.tensors(), tb = b.model.weights.tensors();
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(*ta[i].second, *tb[i].second) << ta[i].first;
  EXPECT_LT(a.epoch_loss.back(), a.epoch_loss.front());
  EXPECT_TRUE(a.model.weights.all_finite());
  EXPECT_THROW(train(std::vector<Image>{}, cfg), std::invalid_argument);
}

TEST(Attack, RejectsWrongResolutionAndRoundTripsThroughJson) {
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const TrainResult r = train(faces(8, 32, 15), cfg);
  EXPECT_THROW(attack(r.model, Image(64, 64)), ImageError);
  const auto path = std::filesystem::temp_directory_path() / "etcbench_unit_model.json";
  save_model(r.model, path);
  const AttackModel back = load_model(path);
  const Image probe = faces(1, 32, 16)[0];
  EXPECT_EQ(attack(back, probe).values, attack(r.model, probe).values);
  EXPECT_EQ(back.config.epochs, 1);
}

TEST(Attack, AttributeCorrelationOfPerfectThumbnails) {
  const ToyCorpus c = generate_toy_corpus(60, 64, 17, 0.0);
  std::vector<Thumbnail> t;
  for (const auto& img : c.images) t.push_back(thumbnail_of(img));
  const AttributeScores s = recover_attributes(t, c.params);
  EXPECT_GT(s.skin, 0.8);
  EXPECT_GT(s.background, 0.8);
  EXPECT_GT(s.hair, 0.5);
  EXPECT_THROW(recover_attributes(t, {}), std::invalid_argument);
}

TEST(Config, ValidationAndJson) {
  TrainConfig c;
  EXPECT_EQ(c.key_period, 1);
  EXPECT_EQ(c.latent_dim, 32);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.features = FeatureMode::raw;
  c.key_period = 0;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(back.features, FeatureMode::raw);
  EXPECT_EQ(back.key_period, 0);
}
