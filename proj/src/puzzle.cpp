#include "etcbench/puzzle.hpp"

#include <limits>
#include <stdexcept>

#include "etcbench/leakage.hpp"

namespace etcbench {

double edge_cost(const Image& a, const Image& b, Edge edge) {
  if (a.width() != b.width() || a.height() != b.height()) throw ImageError("edge_cost: block sizes differ");
  double s = 0.0;
  if (edge == Edge::right) {
    const int xa = a.width() - 1;
    for (int y = 0; y < a.height(); ++y)
      for (int c = 0; c < kChannels; ++c) {
        const double d = static_cast<double>(a.at(xa, y, c)) - b.at(0, y, c);
        s += d * d;
      }
    return s / a.height();
  }
  const int ya = a.height() - 1;
  for (int x = 0; x < a.width(); ++x)
    for (int c = 0; c < kChannels; ++c) {
      const double d = static_cast<double>(a.at(x, ya, c)) - b.at(x, 0, c);
      s += d * d;
    }
  return s / a.width();
}

CompatibilityMatrix::CompatibilityMatrix(std::size_t blocks, int orientations)
    : blocks_(blocks), orientations_(orientations),
      costs_(blocks * orientations * blocks * orientations * 2, 0.0) {}

namespace {

std::vector<Image> block_variants(const std::vector<Image>& blocks, int orientations) {
  std::vector<Image> v;
  v.reserve(blocks.size() * orientations);
  for (const auto& b : blocks)
    for (int o = 0; o < orientations; ++o) v.push_back(o == 0 ? b : rotate_flip_block(b, o));
  return v;
}

}  // namespace

CompatibilityMatrix build_matrix(const std::vector<Image>& blocks, bool orientation_hypotheses) {
  if (blocks.size() < 2) throw std::invalid_argument("build_matrix: need at least two blocks");
  const int o = orientation_hypotheses ? kRotFlipCodes : 1;
  const auto vars = block_variants(blocks, o);
  CompatibilityMatrix m(blocks.size(), o);
  for (std::size_t a = 0; a < vars.size(); ++a)
    for (std::size_t b = 0; b < vars.size(); ++b) {
      if (a / o == b / o) continue;
      m.set(a, b, Edge::right, edge_cost(vars[a], vars[b], Edge::right));
      m.set(a, b, Edge::down, edge_cost(vars[a], vars[b], Edge::down));
    }
  return m;
}

Placement greedy_assemble(const CompatibilityMatrix& matrix, int rows, int cols) {
  const std::size_t n = matrix.blocks();
  if (rows < 1 || cols < 1 || static_cast<std::size_t>(rows) * cols != n) {
    throw std::invalid_argument("greedy_assemble: rows*cols must equal the block count");
  }
  const int o = matrix.orientations();
  Placement p;
  p.rows = rows;
  p.cols = cols;
  p.cells.assign(n, {});
  if (n == 1) {
    p.cells[0] = {0, 0};
    p.complete = true;
    return p;
  }

  // Relative canvas large enough for any placement whose bbox fits rows x cols.
  const int ch = 2 * rows - 1;
  const int cw = 2 * cols - 1;
  std::vector<int> canvas(static_cast<std::size_t>(ch) * cw, -1);  // variant id or -1
  std::vector<bool> used(n, false);
  int min_r = rows - 1, max_r = rows - 1, min_c = cols - 1, max_c = cols - 1;
  auto cell = [&](int r, int c) -> int& { return canvas[static_cast<std::size_t>(r) * cw + c]; };

  auto place = [&](int r, int c, int variant) {
    cell(r, c) = variant;
    used[variant / o] = true;
    min_r = std::min(min_r, r);
    max_r = std::max(max_r, r);
    min_c = std::min(min_c, c);
    max_c = std::max(max_c, c);
  };

  // Seed: cheapest ordered pair over both edge types.
  {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    Edge be = Edge::right;
    const std::size_t nv = matrix.variants();
    for (std::size_t a = 0; a < nv; ++a) {
      for (std::size_t b = 0; b < nv; ++b) {
        if (a / o == b / o) continue;
        if (cols > 1 && matrix.cost(a, b, Edge::right) < best) {
          best = matrix.cost(a, b, Edge::right);
          ba = static_cast<int>(a), bb = static_cast<int>(b), be = Edge::right;
        }
        if (rows > 1 && matrix.cost(a, b, Edge::down) < best) {
          best = matrix.cost(a, b, Edge::down);
          ba = static_cast<int>(a), bb = static_cast<int>(b), be = Edge::down;
        }
      }
    }
    place(rows - 1, cols - 1, ba);
    if (be == Edge::right) place(rows - 1, cols, bb);
    else place(rows, cols - 1, bb);
  }

  for (std::size_t placed = 2; placed < n; ++placed) {
    double best = std::numeric_limits<double>::infinity();
    int best_r = -1, best_c = -1, best_v = -1;
    for (int r = 0; r < ch; ++r) {
      for (int c = 0; c < cw; ++c) {
        if (cell(r, c) != -1) continue;
        if (std::max(max_r, r) - std::min(min_r, r) >= rows || std::max(max_c, c) - std::min(min_c, c) >= cols) continue;
        const int left = c > 0 ? cell(r, c - 1) : -1;
        const int right = c + 1 < cw ? cell(r, c + 1) : -1;
        const int up = r > 0 ? cell(r - 1, c) : -1;
        const int down = r + 1 < ch ? cell(r + 1, c) : -1;
        const int neighbours = (left >= 0) + (right >= 0) + (up >= 0) + (down >= 0);
        if (neighbours == 0) continue;
        for (std::size_t b = 0; b < n; ++b) {
          if (used[b]) continue;
          for (int v = 0; v < o; ++v) {
            const std::size_t id = b * o + v;
            double s = 0.0;
            if (left >= 0) s += matrix.cost(left, id, Edge::right);
            if (right >= 0) s += matrix.cost(id, right, Edge::right);
            if (up >= 0) s += matrix.cost(up, id, Edge::down);
            if (down >= 0) s += matrix.cost(id, down, Edge::down);
            s /= neighbours;
            if (s < best) {
              best = s;
              best_r = r, best_c = c, best_v = static_cast<int>(id);
            }
          }
        }
      }
    }
    if (best_v < 0) throw std::logic_error("greedy_assemble: no feasible frontier cell");
    place(best_r, best_c, best_v);
  }

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int v = cell(min_r + r, min_c + c);
      if (v < 0) throw std::logic_error("greedy_assemble: hole in final placement");
      p.cells[static_cast<std::size_t>(r) * cols + c] = {v / o, v % o};
    }
  p.complete = true;
  return p;
}

double direct_accuracy(const Placement& placement, const Placement& truth, bool check_orientation) {
  if (placement.rows != truth.rows || placement.cols != truth.cols || placement.cells.size() != truth.cells.size()) {
    throw std::invalid_argument("direct_accuracy: placement shapes differ");
  }
  if (truth.cells.empty()) throw std::invalid_argument("direct_accuracy: empty placement");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.cells.size(); ++i) {
    const auto& a = placement.cells[i];
    const auto& t = truth.cells[i];
    if (a.block == t.block && (!check_orientation || a.rot_flip == t.rot_flip)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.cells.size());
}

Placement truth_from_key(const KeyMaterial& material, int rows, int cols, StepMask mask) {
  const std::size_t n = material.size();
  if (static_cast<std::size_t>(rows) * cols != n) throw std::invalid_argument("truth_from_key: grid size mismatch");
  Placement p;
  p.rows = rows;
  p.cols = cols;
  p.cells.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t dest = mask.permute ? material.permutation[i] : i;
    p.cells[dest] = {static_cast<int>(i), mask.rot_flip ? rot_flip_inverse(material.rot_flip[i]) : 0};
  }
  p.complete = true;
  return p;
}

Placement truth_from_plain(const Image& plain, const Image& enc, int block_size) {
  const BlockGrid gp = split_blocks(plain, block_size, block_size);
  const BlockGrid ge = split_blocks(enc, block_size, block_size);
  if (gp.rows != ge.rows || gp.columns != ge.columns) throw ImageError("truth_from_plain: grid shapes differ");
  std::vector<CanonicalBlock> cp, ce;
  for (const auto& b : gp.blocks) cp.push_back(canonicalize_block(b));
  for (const auto& b : ge.blocks) ce.push_back(canonicalize_block(b));
  Placement p;
  p.rows = gp.rows;
  p.cols = gp.columns;
  p.cells.assign(gp.size(), {});
  std::vector<bool> used(ge.size(), false);
  bool complete = true;
  for (std::size_t pos = 0; pos < gp.size(); ++pos) {
    for (std::size_t i = 0; i < ge.size(); ++i) {
      if (used[i] || !(ce[i].block == cp[pos].block)) continue;
      used[i] = true;
      // plain = T_plain^-1 . T_enc (enc); keep the geometric part.
      const BlockTransform t = compose(inverse(cp[pos].transform), ce[i].transform);
      p.cells[pos] = {static_cast<int>(i), t.rot_flip};
      break;
    }
    if (p.cells[pos].block < 0) complete = false;
  }
  p.complete = complete;
  return p;
}

Image render_placement(const Placement& placement, const std::vector<Image>& blocks) {
  if (blocks.empty()) throw ImageError("render_placement: no blocks");
  BlockGrid g;
  g.block_width = blocks.front().width();
  g.block_height = blocks.front().height();
  g.columns = placement.cols;
  g.rows = placement.rows;
  for (const auto& c : placement.cells) {
    if (c.block < 0 || static_cast<std::size_t>(c.block) >= blocks.size()) {
      g.blocks.emplace_back(g.block_width, g.block_height);
      continue;
    }
    g.blocks.push_back(c.rot_flip == 0 ? blocks[c.block] : rotate_flip_block(blocks[c.block], c.rot_flip));
  }
  return merge_blocks(g);
}

PuzzleResult solve_puzzle(const Image& enc, int block_size, bool orientation_hypotheses) {
  const BlockGrid grid = split_blocks(enc, block_size, block_size);
  PuzzleResult r;
  if (grid.size() == 1) {
    r.placement = {1, 1, {{0, 0}}, true};
  } else {
    r.placement = greedy_assemble(build_matrix(grid.blocks, orientation_hypotheses), grid.rows, grid.columns);
  }
  r.reassembled = render_placement(r.placement, grid.blocks);
  return r;
}

nlohmann::json to_json(const Placement& placement) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : placement.cells) cells.push_back({{"block", c.block}, {"rot_flip", c.rot_flip}});
  return {{"rows", placement.rows}, {"cols", placement.cols}, {"complete", placement.complete}, {"cells", cells}};
}

}  // namespace etcbench
