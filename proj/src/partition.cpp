#include "pimo/partition.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace pimo {
namespace {

void extend(std::vector<int>& rgs, int max_block, int k, std::vector<SetPartition>& out) {
  if (static_cast<int>(rgs.size()) == k) {
    out.push_back({rgs, max_block + 1});
    return;
  }
  for (int b = 0; b <= max_block + 1; ++b) {
    rgs.push_back(b);
    extend(rgs, std::max(max_block, b), k, out);
    rgs.pop_back();
  }
}

}  // namespace

std::string SetPartition::key() const {
  std::string s;
  for (int b : rgs) s += static_cast<char>(b < 10 ? '0' + b : 'a' + (b - 10));
  return s;
}

bool SetPartition::refines(const SetPartition& coarse) const {
  for (int s = 0; s < slots(); ++s)
    for (int t = s + 1; t < slots(); ++t)
      if (rgs[s] == rgs[t] && coarse.rgs[s] != coarse.rgs[t]) return false;
  return true;
}

const std::vector<SetPartition>& enumerate_partitions(int k) {
  if (k < 1 || k > 8) throw std::out_of_range("partition slot count must be in 1..8, got " + std::to_string(k));
  static const std::array<std::vector<SetPartition>, 9> cache = [] {
    std::array<std::vector<SetPartition>, 9> all;
    for (int n = 1; n <= 8; ++n) {
      std::vector<int> rgs{0};
      extend(rgs, 0, n, all[n]);
    }
    return all;
  }();
  return cache[k];
}

SetPartition partition_of(const std::vector<int>& labels) {
  SetPartition p;
  std::vector<int> seen;
  for (int l : labels) {
    auto it = std::find(seen.begin(), seen.end(), l);
    if (it == seen.end()) {
      p.rgs.push_back(static_cast<int>(seen.size()));
      seen.push_back(l);
    } else {
      p.rgs.push_back(static_cast<int>(it - seen.begin()));
    }
  }
  p.blocks = static_cast<int>(seen.size());
  return p;
}

SetPartition partition_from_key(const std::string& key) {
  std::vector<int> labels;
  for (char c : key) labels.push_back(c);
  return partition_of(labels);
}

double moebius(const SetPartition& fine, const SetPartition& coarse) {
  std::vector<std::vector<int>> merged(coarse.blocks);
  for (int s = 0; s < fine.slots(); ++s) {
    auto& v = merged[coarse.rgs[s]];
    if (std::find(v.begin(), v.end(), fine.rgs[s]) == v.end()) v.push_back(fine.rgs[s]);
  }
  double mu = 1.0;
  for (const auto& v : merged) {
    const int n = static_cast<int>(v.size());
    double f = 1.0;
    for (int q = 2; q < n; ++q) f *= q;
    mu *= (n % 2 == 1) ? f : -f;
  }
  return mu;
}

std::vector<double> exact_from_unrestricted(int k, const std::vector<double>& unrestricted) {
  const auto& parts = enumerate_partitions(k);
  if (unrestricted.size() != parts.size()) throw std::invalid_argument("unrestricted sums do not match Bell(k)");
  std::vector<double> exact(parts.size(), 0.0);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    double acc = 0.0;
    for (std::size_t q = 0; q < parts.size(); ++q) {
      if (parts[p].refines(parts[q])) acc += moebius(parts[p], parts[q]) * unrestricted[q];
    }
    exact[p] = acc;
  }
  return exact;
}

std::vector<double> unrestricted_from_exact(int k, const std::vector<double>& exact) {
  const auto& parts = enumerate_partitions(k);
  if (exact.size() != parts.size()) throw std::invalid_argument("exact sums do not match Bell(k)");
  std::vector<double> unrestricted(parts.size(), 0.0);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    double acc = 0.0;
    for (std::size_t q = 0; q < parts.size(); ++q) {
      if (parts[p].refines(parts[q])) acc += exact[q];
    }
    unrestricted[p] = acc;
  }
  return unrestricted;
}

}  // namespace pimo
