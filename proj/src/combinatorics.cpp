#include "mglue/combinatorics.hpp"

#include <algorithm>
#include <string>

namespace mglue {

IndexSet digit_map(std::uint64_t k) {
  if (k == 0) throw std::invalid_argument("digit_map needs k >= 1");
  IndexSet d;
  for (int j = 1; k; ++j, k >>= 1)
    if (k & 1) d.push_back(j);
  return d;
}

std::uint64_t digit_code(const IndexSet& d) {
  std::uint64_t k = 0;
  for (int j : d) {
    if (j < 1 || j > 64) throw std::invalid_argument("digit position out of range");
    k |= std::uint64_t{1} << (j - 1);
  }
  return k;
}

std::vector<SetPartition> partitions(const IndexSet& d, int blocks) {
  if (blocks < 1) throw std::invalid_argument("partitions need at least one block");
  if (d.empty()) throw std::invalid_argument("cannot partition the empty set");
  IndexSet elems = d;
  std::sort(elems.begin(), elems.end());
  const int n = static_cast<int>(elems.size());
  std::vector<SetPartition> out;
  if (blocks > n) return out;

  // Restricted growth string: rgs[0] = 0, rgs[i] <= 1 + max(rgs[0..i-1]).
  std::vector<int> rgs(n, 0);
  auto emit = [&] {
    SetPartition p(blocks);
    for (int i = 0; i < n; ++i) p[rgs[i]].push_back(elems[i]);
    out.push_back(std::move(p));
  };
  auto rec = [&](auto&& self, int i, int used) -> void {
    if (i == n) {
      if (used == blocks) emit();
      return;
    }
    if (used + (n - i) < blocks) return;
    for (int b = 0; b <= std::min(used, blocks - 1); ++b) {
      rgs[i] = b;
      self(self, i + 1, std::max(used, b + 1));
    }
  };
  rec(rec, 1, 1);
  return out;
}

std::uint64_t stirling2(int n, int k) {
  if (n < 0 || k < 0) throw std::invalid_argument("stirling2 arguments must be non-negative");
  std::vector<std::vector<std::uint64_t>> s(n + 1, std::vector<std::uint64_t>(k + 1, 0));
  s[0][0] = 1;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= std::min(i, k); ++j) s[i][j] = j * s[i - 1][j] + s[i - 1][j - 1];
  return s[n][k];
}

TangentSystemSpec build_tangent_system(int m) {
  if (m < 0 || m > 3) throw std::invalid_argument("tangent systems are available for m <= 3 (derivative tensors up to order 3)");
  TangentSystemSpec spec{m, {}};
  const int count = 1 << m;
  spec.components.push_back({0, {}});
  for (int k = 1; k < count; ++k) {
    TangentComponent comp{k, {{1, {k}}}};
    IndexSet d = digit_map(k);
    for (int l = 2; l <= static_cast<int>(d.size()); ++l)
      for (const auto& p : partitions(d, l)) {
        TangentTerm t{l, {}};
        for (const auto& block : p) t.args.push_back(static_cast<int>(digit_code(block)));
        comp.terms.push_back(std::move(t));
      }
    spec.components.push_back(std::move(comp));
  }
  return spec;
}

}  // namespace mglue
