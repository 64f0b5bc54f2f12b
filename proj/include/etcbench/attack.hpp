#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "etcbench/cipher.hpp"
#include "etcbench/corpus.hpp"
#include "etcbench/image.hpp"
#include "etcbench/metrics.hpp"

namespace etcbench {

inline constexpr int kThumbSide = 16;
inline constexpr int kThumbValues = kThumbSide * kThumbSide * kChannels;

/// Per-block encoder input: histograms of canonicalised blocks (invariant to
/// every per-block key transform) or of the raw ciphertext blocks.
enum class FeatureMode { canonical, raw };
const char* to_string(FeatureMode m);
FeatureMode feature_mode_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 50;
  int steps_per_epoch = 0;  // 0: one pass over the training split
  int batch_size = 16;
  double learning_rate = 0.05;
  double lambda_pix = 1.0;
  double lambda_perc = 0.1;
  int latent_dim = 32;
  int hidden_dim = 64;
  int embed_dim = 32;
  int block_size = kDefaultBlockSize;
  std::uint64_t init_seed = 1;
  std::uint64_t key_seed = 2;
  /// Epochs between fresh keys; 0 keeps the first key for the whole run.
  int key_period = 1;
  FeatureMode features = FeatureMode::canonical;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Trainable parameters. Also used as the gradient accumulator.
struct AttackWeights {
  std::vector<double> w1, b1;          // hidden x input, hidden
  std::vector<double> w2, b2;          // embed x hidden, embed
  std::vector<double> proj, proj_bias; // latent x embed, latent
  std::vector<double> avg_latent;      // latent
  std::vector<double> dec, dec_bias;   // values x latent, values (normalised [0, 1] units)

  AttackWeights zeros_like() const;
  std::vector<std::pair<std::string, std::vector<double>*>> tensors();
  std::vector<std::pair<std::string, const std::vector<double>*>> tensors() const;
  bool all_finite() const;
};

/// Encoder E (per-block MLP, mean pooling, projection), decoder G (affine
/// map to a 16x16 thumbnail) and the average latent added before decoding.
struct AttackModel {
  int input_dim = 3 * 32;
  int hidden_dim = 0;
  int embed_dim = 0;
  int latent_dim = 0;
  int block_size = kDefaultBlockSize;
  int image_size = 0;  // training resolution
  FeatureMode features = FeatureMode::canonical;
  AttackWeights weights;
  std::vector<double> mean_thumbnail;  // training-set mean, the constant baseline
  std::vector<double> loss_trace;      // mean training loss per epoch
  TrainConfig config;
};

/// Random encoder weights, zero average latent, small random decoder; the
/// decoder bias starts at mid-grey.
AttackModel init_model(const TrainConfig& cfg, int image_size);

using StyleLatent = std::vector<double>;

/// 16x16 RGB reconstruction, interleaved, pixel units.
struct Thumbnail {
  std::vector<double> values;
  Image to_image() const;  // rounds and clamps
};

Thumbnail thumbnail_of(const Image& img);

/// n x 96 per-block histogram features, row-major.
std::vector<double> block_features(const Image& enc, int block_size, FeatureMode mode);

StyleLatent encode(const AttackModel& model, const Image& enc);
StyleLatent encode_features(const AttackModel& model, const std::vector<double>& features);
/// Pre-clamp decoder output in pixel units.
Thumbnail decode_unclamped(const AttackModel& model, const StyleLatent& z);
/// Decoder output clamped to [0, 255].
Thumbnail decode(const AttackModel& model, const StyleLatent& z);
/// Ciphertext-only reconstruction.
Thumbnail attack(const AttackModel& model, const Image& enc);

/// Feature extractor used by the perceptual term of the training loss and by
/// evaluation.
const FeatureExtractor& attack_feature_extractor();

struct LossResult {
  double total = 0;
  double pixel = 0;
  double perceptual = 0;
  std::vector<double> grad;  // d total / d reconstruction, pixel units
};

/// lambda_pix * MSE + lambda_perc * perceptual distance between a target
/// thumbnail and a reconstruction, both in pixel units (MSE taken on [0, 1]
/// scaled values).
LossResult total_loss(const Thumbnail& target, const Thumbnail& recon, const TrainConfig& cfg);
/// Convenience form taking the plain image, downsampled to thumbnail size.
LossResult total_loss(const Image& plain, const Thumbnail& recon, const TrainConfig& cfg);

/// One training example with cached target.
struct TrainingTarget {
  Thumbnail thumb;
  FeatureExtractor::Trace trace;
};
TrainingTarget make_target(const Image& plain);

/// Mean loss over examples and its gradient w.r.t. every parameter.
double loss_and_gradients(const AttackModel& model, const std::vector<const std::vector<double>*>& features,
                          const std::vector<const TrainingTarget*>& targets, AttackWeights& grads);

struct TrainResult {
  AttackModel model;
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Algorithm: every key_period epochs draw a key; each batch is encrypted with
/// the current key, encoded, decoded with the average latent added, scored,
/// and both decoder and encoder are updated by SGD.
TrainResult train(const std::vector<Image>& train_images, const TrainConfig& cfg, const EpochCallback& on_epoch = {});
TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct AttributeScores {
  double hair = 0;
  double skin = 0;
  double background = 0;
  std::size_t samples = 0;
};

/// Pearson correlation (averaged over RGB) between region-mean colours of the
/// reconstructions at canonical hair/skin/background positions and the true
/// attribute colours.
AttributeScores recover_attributes(const std::vector<Thumbnail>& recon, const std::vector<ToyFaceParams>& truth);

struct EvalResult {
  std::vector<double> attack_mse;       // thumbnail MSE, pixel units
  std::vector<double> baseline_mse;     // constant mean predictor
  std::vector<double> attack_perceptual;
  std::vector<double> baseline_perceptual;
  std::vector<double> encrypted_perceptual;  // thumbnail of the ciphertext itself
  std::vector<double> heldout_loss;     // training objective on unseen keys
  std::vector<Thumbnail> reconstructions;
};

/// Encrypts each image with a fresh key drawn from `key_seed`, attacks the
/// ciphertext and scores against the plain thumbnail.
EvalResult evaluate_attack(const AttackModel& model, const std::vector<Image>& plain, std::uint64_t key_seed);
/// Same scoring for ciphertexts produced elsewhere (e.g. a pairs manifest).
EvalResult evaluate_ciphertexts(const AttackModel& model, const std::vector<Image>& plain,
                                const std::vector<Image>& enc);
nlohmann::json to_json(const EvalResult& r);

nlohmann::json to_json(const AttackModel& model);
AttackModel model_from_json(const nlohmann::json& j);
void save_model(const AttackModel& model, const std::filesystem::path& path);
AttackModel load_model(const std::filesystem::path& path);

}  // namespace etcbench
