#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "etcbench/cipher.hpp"
#include "etcbench/image.hpp"

namespace etcbench {

enum class Edge { right = 0, down = 1 };

/// Boundary SSD between a and b when b sits to the right of / below a,
/// summed over channels and divided by the boundary length.
double edge_cost(const Image& a, const Image& b, Edge edge);

/// Pairwise costs between block variants. With orientation hypotheses each
/// block contributes 8 variants (its rot/flip images); variant v of block i
/// has id i * orientations + v.
class CompatibilityMatrix {
 public:
  CompatibilityMatrix() = default;
  CompatibilityMatrix(std::size_t blocks, int orientations);

  std::size_t blocks() const { return blocks_; }
  int orientations() const { return orientations_; }
  std::size_t variants() const { return blocks_ * orientations_; }

  double cost(std::size_t a, std::size_t b, Edge e) const {
    return costs_[(a * variants() + b) * 2 + static_cast<std::size_t>(e)];
  }
  void set(std::size_t a, std::size_t b, Edge e, double v) {
    costs_[(a * variants() + b) * 2 + static_cast<std::size_t>(e)] = v;
  }

 private:
  std::size_t blocks_ = 0;
  int orientations_ = 1;
  std::vector<double> costs_;
};

CompatibilityMatrix build_matrix(const std::vector<Image>& blocks, bool orientation_hypotheses = false);

struct PlacedBlock {
  int block = -1;     // ciphertext block index
  int rot_flip = 0;   // transform applied to the block before placing it
};

/// Grid of rows x cols cells, row-major.
struct Placement {
  int rows = 0;
  int cols = 0;
  std::vector<PlacedBlock> cells;
  bool complete = false;
};

/// Kernel-growing greedy assembly. Seeds with the globally cheapest ordered
/// pair, then repeatedly places the (cell, block, orientation) with the
/// lowest mean cost against its already placed neighbours, keeping the
/// occupied bounding box within rows x cols. Ties go to the lowest index.
Placement greedy_assemble(const CompatibilityMatrix& matrix, int rows, int cols);

/// Fraction of cells holding the true block (and the true orientation when
/// `check_orientation`).
double direct_accuracy(const Placement& placement, const Placement& truth, bool check_orientation = false);

/// Correct placement of ciphertext blocks produced with `material`.
Placement truth_from_key(const KeyMaterial& material, int rows, int cols, StepMask mask);

/// Correct placement recovered by matching each plaintext block to a
/// ciphertext block with the same canonical form (first unused match).
Placement truth_from_plain(const Image& plain, const Image& enc, int block_size);

/// Reassembled image: each cell holds its block rotated by the placement's
/// orientation.
Image render_placement(const Placement& placement, const std::vector<Image>& blocks);

struct PuzzleResult {
  Placement placement;
  Image reassembled;
};

PuzzleResult solve_puzzle(const Image& enc, int block_size, bool orientation_hypotheses);
nlohmann::json to_json(const Placement& placement);

}  // namespace etcbench
