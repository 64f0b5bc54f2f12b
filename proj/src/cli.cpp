#include "etcbench/cli.hpp"

#include <sodium.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "etcbench/attack.hpp"
#include "etcbench/cipher.hpp"
#include "etcbench/corpus.hpp"
#include "etcbench/leakage.hpp"
#include "etcbench/metrics.hpp"
#include "etcbench/puzzle.hpp"
#include "etcbench/repro.hpp"

namespace etcbench {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kOutDirEnv = "ETCBENCH_OUT_DIR";

// Relative output paths land under $ETCBENCH_OUT_DIR when it is set.
fs::path out_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kOutDirEnv); dir != nullptr && *dir != '\0') path = fs::path(dir) / path;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

// Records how an output was produced. Contains no clock or host data so that
// repeated runs stay byte-identical.
void write_provenance(const fs::path& output, const std::string& command, const nlohmann::json& params) {
  fs::path p = output;
  p += ".provenance.json";
  write_json(p, {{"tool", "etcbench"}, {"version", kVersion}, {"command", command}, {"output", output.filename().string()},
                 {"parameters", params}});
}

int check_block_size(int b) {
  if (b < 1) throw UsageError("--block-size must be >= 1");
  return b;
}

StepMask parse_mask(const std::string& text) {
  try {
    StepMask m = StepMask::parse(text);
    if (!m.any()) throw UsageError("--mask selects no step");
    return m;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

MasterKey key_for_encrypt(const std::string& path, bool generate) {
  if (generate) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    MasterKey k;
    randombytes_buf(k.seed.data(), k.seed.size());
    save_key(k, path);
    return k;
  }
  return load_key(path);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Block-scrambling EtC toolkit: cipher, leakage analysis, puzzle and learned attacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // encrypt / decrypt / steps
  struct {
    std::string in, out, key, mask = "1,2,3,4";
    int block = kDefaultBlockSize;
    bool gen_key = false;
  } cx;
  auto* enc = app.add_subcommand("encrypt", "Encrypt an image");
  auto* dec = app.add_subcommand("decrypt", "Decrypt an image");
  auto* steps = app.add_subcommand("steps", "Encrypt with a subset of the four steps");
  for (auto* sc : {enc, dec, steps}) {
    sc->add_option("--in", cx.in, "Input image (PNG or PPM)")->required()->check(CLI::ExistingFile);
    sc->add_option("--out", cx.out, "Output image; .ppm selects PPM, anything else PNG")->required();
    sc->add_option("--key", cx.key, "Key file (JSON with seed_hex)")->required();
    sc->add_option("--block-size", cx.block, "Block side B in pixels")->capture_default_str();
  }
  enc->add_flag("--gen-key", cx.gen_key, "Create a random key and write it to --key");
  steps->add_flag("--gen-key", cx.gen_key, "Create a random key and write it to --key");
  steps->add_option("--mask", cx.mask, "Steps to apply, e.g. 1,3")->required();
  dec->add_option("--mask", cx.mask, "Steps that were applied")->capture_default_str();
  steps->add_flag("--decrypt", "Invert the selected steps instead");

  // keyspace
  std::uint64_t ks_n = 256;
  bool ks_json = false;
  auto* ks = app.add_subcommand("keyspace", "Exact key-space size n! * 8^n * 2^n * 6^n");
  ks->add_option("--n", ks_n, "Number of blocks")->required()->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1} << 20));
  ks->add_flag("--json", ks_json, "Print JSON instead of text");

  // analyze
  struct {
    std::string plain, enc, out;
    int block = kDefaultBlockSize;
    std::uint64_t seed = 0;
  } an;
  auto* analyze = app.add_subcommand("analyze", "Leakage report: style descriptors and correlation preservation");
  analyze->add_option("--plain", an.plain)->required()->check(CLI::ExistingFile);
  analyze->add_option("--enc", an.enc)->required()->check(CLI::ExistingFile);
  analyze->add_option("--block-size", an.block)->capture_default_str();
  analyze->add_option("--analysis-seed", an.seed, "Key seed for the per-step table")->capture_default_str();
  analyze->add_option("--out", an.out, "Report JSON")->required();

  // puzzle-attack
  struct {
    std::string enc, truth, key, out, image;
    int block = kDefaultBlockSize;
    bool orient = false;
  } pz;
  auto* puzzle = app.add_subcommand("puzzle-attack", "Greedy jigsaw solver on a ciphertext");
  puzzle->add_option("--enc", pz.enc)->required()->check(CLI::ExistingFile);
  puzzle->add_option("--block-size", pz.block)->capture_default_str();
  puzzle->add_flag("--orient-hypotheses", pz.orient, "Also search the 8 rotations/flips per block");
  puzzle->add_option("--truth", pz.truth, "Plain image for scoring")->check(CLI::ExistingFile);
  puzzle->add_option("--key", pz.key, "Key file for scoring (exact truth)")->check(CLI::ExistingFile);
  puzzle->add_option("--image-out", pz.image, "Write the reassembled image");
  puzzle->add_option("--out", pz.out, "Result JSON")->required();

  // gen-dataset
  struct {
    int count = 300, size = 64;
    std::uint64_t seed = 1;
    double test_fraction = kDefaultTestFraction;
    std::string out_dir, from_dir;
  } gd;
  auto* gen = app.add_subcommand("gen-dataset", "Synthesise toy faces, or ingest a folder with --from-dir");
  gen->add_option("--count", gd.count)->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--size", gd.size)->capture_default_str();
  gen->add_option("--seed", gd.seed)->capture_default_str();
  gen->add_option("--test-fraction", gd.test_fraction)->capture_default_str()->check(CLI::Range(0.0, 0.99));
  gen->add_option("--from-dir", gd.from_dir, "Ingest existing images instead of generating")->check(CLI::ExistingDirectory);
  gen->add_option("--out-dir", gd.out_dir)->required();

  // make-pairs
  struct {
    std::string manifest, policy = "fresh";
    int block = kDefaultBlockSize;
    std::uint64_t key_seed = 1;
  } mp;
  auto* pairs = app.add_subcommand("make-pairs", "Encrypt every manifest entry and record the pairs in the manifest");
  pairs->add_option("--manifest", mp.manifest)->required()->check(CLI::ExistingFile);
  pairs->add_option("--key-policy", mp.policy)->capture_default_str()->check(CLI::IsMember({"fresh", "fixed"}));
  pairs->add_option("--block-size", mp.block)->capture_default_str();
  pairs->add_option("--key-seed", mp.key_seed)->capture_default_str();

  // train-attack
  struct {
    std::string manifest, config, out, features;
    int epochs = -1;
    double lr = -1;
    int key_period = -1;
  } ta;
  auto* train_cmd = app.add_subcommand("train-attack", "Train the ciphertext-only style attack");
  train_cmd->add_option("--manifest", ta.manifest)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", ta.config, "TrainConfig JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", ta.epochs, "Override epochs");
  train_cmd->add_option("--lr", ta.lr, "Override learning rate");
  train_cmd->add_option("--key-period", ta.key_period, "Override key-reschedule period (0: single key)");
  train_cmd->add_option("--features", ta.features, "canonical or raw")->check(CLI::IsMember({"canonical", "raw"}));
  train_cmd->add_option("--out", ta.out, "Model JSON")->required();

  // attack
  struct {
    std::string model, in, out;
  } at;
  auto* attack_cmd = app.add_subcommand("attack", "Reconstruct a ciphertext with a trained model");
  attack_cmd->add_option("--model", at.model)->required()->check(CLI::ExistingFile);
  attack_cmd->add_option("--in", at.in, "Encrypted image")->required()->check(CLI::ExistingFile);
  attack_cmd->add_option("--out", at.out, "Reconstruction at input size; a .thumb companion holds the 16x16")->required();

  // eval-attack
  struct {
    std::string model, manifest, out;
    std::uint64_t key_seed = 7;
  } ea;
  auto* eval_attack = app.add_subcommand("eval-attack", "Score a model on the test split");
  eval_attack->add_option("--model", ea.model)->required()->check(CLI::ExistingFile);
  eval_attack->add_option("--manifest", ea.manifest)->required()->check(CLI::ExistingFile);
  eval_attack->add_option("--key-seed", ea.key_seed, "Keys for entries without stored ciphertexts")->capture_default_str();
  eval_attack->add_option("--out", ea.out)->required();

  // eval
  struct {
    std::string pairs, out, csv;
  } ev;
  auto* eval = app.add_subcommand("eval", "Perceptual distance report over image pairs");
  eval->add_option("--pairs", ev.pairs, "Dataset manifest with ciphertexts, or {\"pairs\": [...]}")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", ev.out)->required();
  eval->add_option("--csv", ev.csv, "Also write per-pair scores as CSV");

  // repro
  struct {
    std::string suite = "paper", out;
    std::uint64_t seed = ReproOptions{}.seed;
    bool quiet = false;
  } rp;
  auto* repro = app.add_subcommand("repro", "Run a criterion suite and write a deterministic JSON report");
  repro->add_option("--suite", rp.suite)->capture_default_str()->check(CLI::IsMember(suite_names()));
  repro->add_option("--seed", rp.seed)->capture_default_str();
  repro->add_option("--out", rp.out)->required();
  repro->add_flag("--quiet", rp.quiet, "No progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*enc || *dec || *steps) {
      check_block_size(cx.block);
      const bool inverse = *dec || (*steps && steps->count("--decrypt") > 0);
      const StepMask mask = parse_mask(cx.mask);
      if (inverse && cx.gen_key) throw UsageError("--gen-key makes no sense when decrypting");
      const MasterKey key = inverse ? load_key(cx.key) : key_for_encrypt(cx.key, cx.gen_key);
      const Image img = load_image(cx.in);
      const Image result = inverse ? decrypt_steps(img, key, cx.block, mask) : encrypt_steps(img, key, cx.block, mask);
      const fs::path out = out_path(cx.out);
      write_image(result, out);
      const std::string cmd = *enc ? "encrypt" : *dec ? "decrypt" : "steps";
      write_provenance(out, cmd,
                       {{"in", cx.in}, {"block_size", cx.block}, {"mask", mask.to_string()}, {"inverse", inverse},
                        {"width", result.width()}, {"height", result.height()}});
      return 0;
    }
    if (*ks) {
      const KeySpace k = keyspace(ks_n);
      if (ks_json) {
        std::cout << nlohmann::json{{"n", ks_n}, {"cardinality", k.cardinality.str()}, {"log2", k.bits}}.dump(2) << "\n";
      } else {
        std::ostringstream bits;
        bits.precision(6);
        bits << std::fixed << k.bits;
        std::cout << "n = " << ks_n << "\n" << "K(n) = " << k.cardinality.str() << "\n" << "log2 K(n) = " << bits.str() << "\n";
      }
      return 0;
    }
    if (*analyze) {
      check_block_size(an.block);
      const nlohmann::json report =
          leakage_report(load_image(an.plain), load_image(an.enc), LeakageOptions{an.block, an.seed});
      const fs::path out = out_path(an.out);
      write_json(out, report);
      write_provenance(out, "analyze", {{"plain", an.plain}, {"enc", an.enc}, {"block_size", an.block}, {"analysis_seed", an.seed}});
      return 0;
    }
    if (*puzzle) {
      check_block_size(pz.block);
      const Image e = load_image(pz.enc);
      const PuzzleResult res = solve_puzzle(e, pz.block, pz.orient);
      nlohmann::json j{{"block_size", pz.block}, {"orientation_hypotheses", pz.orient}, {"placement", to_json(res.placement)}};
      if (!pz.key.empty()) {
        const KeyMaterial km = derive_key_material(load_key(pz.key), res.placement.cells.size());
        const Placement truth = truth_from_key(km, res.placement.rows, res.placement.cols, StepMask::all());
        j["direct_accuracy"] = direct_accuracy(res.placement, truth);
        j["truth_source"] = "key";
      } else if (!pz.truth.empty()) {
        const Image plain = load_image(pz.truth);
        const Placement truth = truth_from_plain(crop(plain, 0, 0, e.width(), e.height()), e, pz.block);
        j["direct_accuracy"] = direct_accuracy(res.placement, truth);
        j["truth_source"] = "plain";
        j["truth_complete"] = truth.complete;
      }
      const fs::path out = out_path(pz.out);
      write_json(out, j);
      if (!pz.image.empty()) write_image(res.reassembled, out_path(pz.image));
      write_provenance(out, "puzzle-attack", {{"enc", pz.enc}, {"block_size", pz.block}, {"orientation_hypotheses", pz.orient}});
      return 0;
    }
    if (*gen) {
      if (gd.size < 16 || gd.size % 16 != 0) throw UsageError("--size must be a positive multiple of 16");
      const fs::path dir = out_path(gd.out_dir);
      const DatasetManifest m = gd.from_dir.empty()
                                    ? gen_toy_faces(gd.count, gd.size, gd.seed, dir, gd.test_fraction)
                                    : ingest_directory(gd.from_dir, dir, gd.size, gd.test_fraction, gd.seed);
      std::cout << "wrote " << m.entries.size() << " images to " << dir.string() << "\n";
      return 0;
    }
    if (*pairs) {
      check_block_size(mp.block);
      const DatasetManifest m = load_manifest(mp.manifest);
      const DatasetManifest out =
          make_pairs(m, mp.policy == "fresh" ? KeyPolicy::fresh : KeyPolicy::fixed, mp.block, mp.key_seed);
      save_manifest(out, mp.manifest);
      std::cout << "encrypted " << out.entries.size() << " images; manifest updated\n";
      return 0;
    }
    if (*train_cmd) {
      TrainConfig cfg = ta.config.empty() ? TrainConfig{} : train_config_from_json(read_json(ta.config));
      if (ta.epochs >= 0) cfg.epochs = ta.epochs;
      if (ta.lr > 0) cfg.learning_rate = ta.lr;
      if (ta.key_period >= 0) cfg.key_period = ta.key_period;
      if (!ta.features.empty()) cfg.features = feature_mode_from_string(ta.features);
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const DatasetManifest m = load_manifest(ta.manifest);
      const TrainResult r = train(m, cfg, [](int e, double l) { std::cerr << "epoch " << e + 1 << " loss " << l << "\n"; });
      const fs::path out = out_path(ta.out);
      save_model(r.model, out);
      write_provenance(out, "train-attack", {{"manifest", ta.manifest}, {"config", to_json(cfg)}});
      return 0;
    }
    if (*attack_cmd) {
      const AttackModel model = load_model(at.model);
      const Image e = load_image(at.in);
      const Image thumb = attack(model, e).to_image();
      const fs::path out = out_path(at.out);
      write_image(upsample_nearest(thumb, e.width() / kThumbSide), out);
      fs::path companion = out;
      companion.replace_extension(".thumb" + out.extension().string());
      write_image(thumb, companion);
      write_provenance(out, "attack", {{"model", at.model}, {"in", at.in}, {"thumbnail", companion.filename().string()}});
      return 0;
    }
    if (*eval_attack) {
      const AttackModel model = load_model(ea.model);
      const DatasetManifest m = load_manifest(ea.manifest);
      const auto idx = m.indices(Split::test);
      if (idx.empty()) throw std::runtime_error("manifest has no test split");
      const std::vector<Image> plain = load_images(m, idx);
      const bool stored = std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return !m.entries[i].encrypted.empty(); });
      EvalResult r;
      if (stored) {
        std::vector<Image> enc_imgs;
        for (std::size_t i : idx) enc_imgs.push_back(load_image(m.resolve(m.entries[i].encrypted)));
        r = evaluate_ciphertexts(model, plain, enc_imgs);
      } else {
        r = evaluate_attack(model, plain, ea.key_seed);
      }
      nlohmann::json j = to_json(r);
      j["ciphertexts"] = stored ? "manifest" : "fresh keys";
      std::vector<ToyFaceParams> params;
      for (std::size_t i : idx)
        if (m.entries[i].params) params.push_back(*m.entries[i].params);
      if (params.size() == idx.size() && params.size() >= 2) {
        const AttributeScores a = recover_attributes(r.reconstructions, params);
        j["attribute_correlation"] = {{"hair", a.hair}, {"skin", a.skin}, {"background", a.background}};
      }
      const fs::path out = out_path(ea.out);
      write_json(out, j);
      write_provenance(out, "eval-attack", {{"model", ea.model}, {"manifest", ea.manifest}, {"key_seed", ea.key_seed}});
      return 0;
    }
    if (*eval) {
      const nlohmann::json in = read_json(ev.pairs);
      const fs::path base = fs::path(ev.pairs).parent_path();
      std::vector<std::pair<std::string, std::string>> names;
      if (in.contains("pairs")) {
        for (const auto& p : in.at("pairs"))
          names.emplace_back((base / p.at("reference").get<std::string>()).string(),
                             (base / p.at("candidate").get<std::string>()).string());
      } else {
        const DatasetManifest m = manifest_from_json(in, base);
        for (const auto& e : m.entries) {
          if (e.encrypted.empty()) throw UsageError("manifest entry without ciphertext; run make-pairs first");
          names.emplace_back(m.resolve(e.plain).string(), m.resolve(e.encrypted).string());
        }
      }
      if (names.empty()) throw UsageError("no pairs to score");
      std::vector<std::pair<Image, Image>> imgs;
      for (const auto& [a, b] : names) imgs.emplace_back(load_image(a), load_image(b));
      const ScoreReport report = score_set(imgs, FeatureExtractor::standard());
      nlohmann::json j = to_json(report);
      nlohmann::json per = nlohmann::json::array();
      for (std::size_t i = 0; i < names.size(); ++i)
        per.push_back({{"reference", fs::path(names[i].first).filename().string()},
                       {"candidate", fs::path(names[i].second).filename().string()},
                       {"score", report.scores[i]}});
      j["pairs"] = per;
      const fs::path out = out_path(ev.out);
      write_json(out, j);
      if (!ev.csv.empty()) {
        std::ostringstream csv;
        csv.precision(17);
        csv << "reference,candidate,score\n";
        for (const auto& p : per)
          csv << p["reference"].get<std::string>() << "," << p["candidate"].get<std::string>() << ","
              << p["score"].get<double>() << "\n";
        write_text(out_path(ev.csv), csv.str());
      }
      write_provenance(out, "eval", {{"pairs", ev.pairs}});
      return 0;
    }
    if (*repro) {
      ReproOptions opts;
      opts.seed = rp.seed;
      if (!rp.quiet) opts.log = [](const std::string& s) { std::cerr << s << "\n"; };
      const SuiteReport report = run_suite(rp.suite, opts);
      const fs::path out = out_path(rp.out);
      write_json(out, to_json(report));
      write_provenance(out, "repro", {{"suite", rp.suite}, {"seed", rp.seed}});
      for (const auto& c : report.criteria)
        std::cout << (c.passed ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << c.summary << "\n";
      return report.all_passed() ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace etcbench
