#pragma once

#include <vector>

#include "osmm/types.hpp"

namespace osmm {

/// Round-robin partition of M views into N ordered subsets. Subset n
/// (1-based) holds views {n, N+n, 2N+n, ...} (1-based), M/N of them.
class SubsetIndexMap {
 public:
  /// Throws ConfigError unless N >= 1 and N divides M.
  SubsetIndexMap(int num_views, int num_subsets);

  int num_views() const { return num_views_; }
  int num_subsets() const { return num_subsets_; }
  int subset_size() const { return num_views_ / num_subsets_; }

  /// 1-based parent views of subset n (1-based), increasing.
  const std::vector<int>& indices(int n) const;
  /// 0-based parent row of row k of subset n.
  int parent_row(int n, int k) const { return indices(n)[std::size_t(k)] - 1; }
  /// Subset (1-based) that owns 1-based view v.
  int subset_of(int view) const { return (view - 1) % num_subsets_ + 1; }

 private:
  int num_views_;
  int num_subsets_;
  std::vector<std::vector<int>> idx_;
};

/// x_n = OS(x, n): rows of the parent sinogram belonging to subset n.
struct SubsetSinogram {
  SinogramGeometry parent;
  int subset = 1;                // 1-based
  int num_subsets = 1;
  std::vector<int> parent_views;  // 1-based, increasing
  Array2 values;                  // (M/N) x D
};

SubsetIndexMap subset_indices(int num_views, int num_subsets);

/// OS(x, n) for a single subset.
Array2 os_extract(const Array2& x, const SubsetIndexMap& map, int n);

/// OS(x, {1..N}).
std::vector<SubsetSinogram> os_split(const Sinogram& x, int num_subsets);
std::vector<Array2> os_split(const Array2& x, const SubsetIndexMap& map);

/// OS^-(x_1..x_N). Parts may arrive in any order; every subset must appear once.
Sinogram os_merge(const std::vector<SubsetSinogram>& parts);
Array2 os_merge(const std::vector<Array2>& parts, const SubsetIndexMap& map);

/// Mask entries of the parent views of subset n, in subset row order.
ViewMask mask_for_subset(const ViewMask& mask, const SubsetIndexMap& map, int n);

/// Number of measured views that land in each subset (index n-1).
std::vector<int> measured_per_subset(const ViewMask& mask, const SubsetIndexMap& map);

}  // namespace osmm
