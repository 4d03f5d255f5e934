#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mglue {

using IndexSet = std::vector<int>;               // sorted, positive
using SetPartition = std::vector<IndexSet>;      // blocks ordered by minimum

// Positions of the 1-bits of k, 1-indexed from the least significant bit.
IndexSet digit_map(std::uint64_t k);
// Inverse of digit_map: Σ_{j∈D} 2^{j−1}.
std::uint64_t digit_code(const IndexSet& d);

// All partitions of d into exactly `blocks` non-empty blocks, in the
// lexicographic order of their restricted growth strings.
std::vector<SetPartition> partitions(const IndexSet& d, int blocks);

std::uint64_t stirling2(int n, int k);

struct TangentTerm {
  int order;              // ℓ, the derivative order of ∇f
  std::vector<int> args;  // component indices e(A_1), ..., e(A_ℓ)
  bool operator==(const TangentTerm&) const = default;
};

// Component k of the m-fold tangent system; component 0 is the flow itself.
struct TangentComponent {
  int index;
  std::vector<TangentTerm> terms;
};

struct TangentSystemSpec {
  int m;
  std::vector<TangentComponent> components;  // 2^m entries
};

TangentSystemSpec build_tangent_system(int m);

}  // namespace mglue
