#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace etcbench {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;         // the property itself, timing excluded
  double seconds = 0.0;        // wall time; never serialised
  double limit_seconds = 0.0;  // 0: no runtime bound
  std::string summary;         // one line for humans
  nlohmann::json data;         // measured values

  bool within_limit() const { return limit_seconds <= 0.0 || seconds < limit_seconds; }
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CriterionResult> criteria;

  bool all_passed() const;
};

struct ReproOptions {
  std::uint64_t seed = 20240601;
  /// Progress lines (criterion start, training epochs); never part of the report.
  std::function<void(const std::string&)> log;
};

const std::vector<std::string>& suite_names();

/// Criteria grouped per module; "paper" runs all of them in order.
SuiteReport run_suite(const std::string& name, const ReproOptions& options = {});

/// Deterministic report: no timings, fixed key order and number formatting.
nlohmann::json to_json(const SuiteReport& report);

// Individual checks, usable on their own.
CriterionResult check_cipher_roundtrip(const ReproOptions& o);
CriterionResult check_keyspace(const ReproOptions& o);
CriterionResult check_negpos(const ReproOptions& o);
CriterionResult check_correlation_preservation(const ReproOptions& o);
CriterionResult check_canonical_invariance(const ReproOptions& o);
CriterionResult check_puzzle_contrast(const ReproOptions& o);
CriterionResult check_gradients(const ReproOptions& o);
CriterionResult check_attack_beats_baseline(const ReproOptions& o);
CriterionResult check_key_reschedule(const ReproOptions& o);
CriterionResult check_perceptual_metric(const ReproOptions& o);

/// Largest relative error between analytic and central-difference gradients
/// over every parameter of a miniature model (2 images, latent dim 4).
struct GradientCheck {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t parameters = 0;
};
GradientCheck gradient_check(std::uint64_t seed);

}  // namespace etcbench
