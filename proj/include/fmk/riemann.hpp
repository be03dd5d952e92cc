#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fmk/interval.hpp"
#include "fmk/kernel.hpp"
#include "fmk/measure.hpp"

namespace fmk {

// How an interval is split into n cells.
//   Uniform               equal widths
//   Dyadic                2^floor(log2 n) equal cells with the leftmost
//                         n - 2^k of them halved (nested under doubling)
//   Random                widths |D| (0.1/n + 0.9 g_i / sum g), g_i ~ U(0,1)
//                         from a per-level stream seeded by `seed` and n
//   AdversarialGeometric  n-1 cells of width exp(-n), then one long cell;
//                         rejected when exp(-n) underflows or the short
//                         cells no longer fit
enum class SchemeKind { Uniform, Dyadic, Random, AdversarialGeometric };

struct PartitionScheme {
  SchemeKind kind = SchemeKind::Uniform;
  std::uint64_t seed = 0;  // Random only
};

// Where the tag sits inside each cell [a, b).
//   Left, Right, Midpoint as usual (Right backs off one ulp on open ends)
//   Random                uniform in the cell, per-level stream
//   NearRight             b - (b-a)^2, clamped to the cell
enum class TagKind { Left, Right, Midpoint, Random, NearRight };

struct TagRule {
  TagKind kind = TagKind::Left;
  std::uint64_t seed = 0;  // Random only
};

// A rule for producing tagged partitions of `domain` at every level n.
// `parts` non-empty marks a merged system: levels concatenate the part
// levels and sums fold each part separately before combining.
struct RiemannSystem {
  Interval domain;
  PartitionScheme scheme;
  TagRule tags;
  std::string label;
  std::vector<RiemannSystem> parts;
};

RiemannSystem make_system(const Interval& domain, SchemeKind scheme, TagKind tags,
                          std::uint64_t seed = 0, std::string label = "");

struct Level {
  std::vector<Interval> cells;
  std::vector<double> tags;
  // part boundaries into cells/tags; {0, size} for a simple system
  std::vector<std::size_t> part_offsets;
};

// Tagged partition of the system's domain with n cells (merged systems
// give each part its own n cells). Throws std::invalid_argument when the
// scheme cannot realize the level.
Level build_level(const RiemannSystem& sys, int n);

// sum_j K(tag_j, cell_j), folded left-to-right within each part, parts
// combined left-to-right (bit-stable under system merge).
double kernel_riemann_sum(const KernelHandle& K, const Level& level);

// sum_j sum_k K2((a_j, b_k), A_j x B_k) over two tagged partitions
double double_riemann_sum(const SecondOrderKernel& K2, const Level& a, const Level& b);

// Concatenate two systems over touching domains into one over the union.
RiemannSystem merge_systems(const RiemannSystem& a, const RiemannSystem& b);

// Riemann-Stieltjes sum of a continuous f against mu over I using the
// system's scheme and tags at level n: sum_j f(tag_j) mu(cell_j).
double integrate_riemann(const Measure1D& mu, const std::function<double(double)>& f,
                         const Interval& I, const RiemannSystem& sys, int n);

}  // namespace fmk
