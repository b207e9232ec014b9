#pragma once

#include <string>
#include <vector>

namespace pimo {

/// Set partition of k slots as a restricted-growth string: slot s belongs
/// to block rgs[s], and each new block number is one more than the largest
/// seen so far. "0011" is (a=b)(c=d).
struct SetPartition {
  std::vector<int> rgs;
  int blocks = 0;

  int slots() const { return static_cast<int>(rgs.size()); }
  std::string key() const;
  /// True if every block of *this lies inside a block of `coarse`.
  bool refines(const SetPartition& coarse) const;
  auto operator<=>(const SetPartition&) const = default;
};

/// All set partitions of k slots in lexicographic RGS order (Bell(k) of
/// them). Precomputed once per k; 1 <= k <= 8, else std::out_of_range.
const std::vector<SetPartition>& enumerate_partitions(int k);

/// Partition induced by a labelling: slots with equal labels share a block.
SetPartition partition_of(const std::vector<int>& labels);
SetPartition partition_from_key(const std::string& key);

/// Moebius function of the partition lattice between fine <= coarse:
/// product over blocks of `coarse` of (-1)^(n-1) (n-1)!, n = fine blocks merged.
double moebius(const SetPartition& fine, const SetPartition& coarse);

/// exact[p] = sum over coarsenings q of p of moebius(p, q) * unrestricted[q].
/// Vectors are indexed like enumerate_partitions(k).
std::vector<double> exact_from_unrestricted(int k, const std::vector<double>& unrestricted);
/// unrestricted[p] = sum over coarsenings q of p of exact[q].
std::vector<double> unrestricted_from_exact(int k, const std::vector<double>& exact);

}  // namespace pimo
