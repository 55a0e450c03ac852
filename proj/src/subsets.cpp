#include "osmm/subsets.hpp"

#include <string>

namespace osmm {

SubsetIndexMap::SubsetIndexMap(int num_views, int num_subsets) : num_views_(num_views), num_subsets_(num_subsets) {
  if (num_views < 1) throw ConfigError("subset map needs at least one view");
  if (num_subsets < 1) throw ConfigError("subset count must be at least 1");
  if (num_views % num_subsets != 0)
    throw ConfigError("subset count " + std::to_string(num_subsets) + " does not divide " + std::to_string(num_views) +
                      " views");
  idx_.resize(std::size_t(num_subsets));
  for (int n = 1; n <= num_subsets; ++n) {
    auto& list = idx_[std::size_t(n - 1)];
    list.reserve(std::size_t(subset_size()));
    for (int v = n; v <= num_views; v += num_subsets) list.push_back(v);
  }
}

const std::vector<int>& SubsetIndexMap::indices(int n) const {
  if (n < 1 || n > num_subsets_) throw std::out_of_range("subset index " + std::to_string(n) + " out of range");
  return idx_[std::size_t(n - 1)];
}

SubsetIndexMap subset_indices(int num_views, int num_subsets) { return SubsetIndexMap(num_views, num_subsets); }

Array2 os_extract(const Array2& x, const SubsetIndexMap& map, int n) {
  if (x.rows() != map.num_views()) throw ShapeError("sinogram rows do not match subset map");
  const auto& idx = map.indices(n);
  Array2 out(Eigen::Index(idx.size()), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(Eigen::Index(k)) = x.row(idx[k] - 1);
  return out;
}

std::vector<Array2> os_split(const Array2& x, const SubsetIndexMap& map) {
  std::vector<Array2> parts;
  parts.reserve(std::size_t(map.num_subsets()));
  for (int n = 1; n <= map.num_subsets(); ++n) parts.push_back(os_extract(x, map, n));
  return parts;
}

std::vector<SubsetSinogram> os_split(const Sinogram& x, int num_subsets) {
  x.validate_shape();
  const SubsetIndexMap map(x.geometry.num_views, num_subsets);
  std::vector<SubsetSinogram> parts;
  parts.reserve(std::size_t(num_subsets));
  for (int n = 1; n <= num_subsets; ++n)
    parts.push_back({x.geometry, n, num_subsets, map.indices(n), os_extract(x.values, map, n)});
  return parts;
}

Array2 os_merge(const std::vector<Array2>& parts, const SubsetIndexMap& map) {
  if (int(parts.size()) != map.num_subsets()) throw ShapeError("expected one part per subset");
  const Eigen::Index cols = parts.front().cols();
  Array2 out(map.num_views(), cols);
  for (int n = 1; n <= map.num_subsets(); ++n) {
    const auto& part = parts[std::size_t(n - 1)];
    if (part.rows() != map.subset_size() || part.cols() != cols) throw ShapeError("subset part has wrong shape");
    for (int k = 0; k < map.subset_size(); ++k) out.row(map.parent_row(n, k)) = part.row(k);
  }
  return out;
}

Sinogram os_merge(const std::vector<SubsetSinogram>& parts) {
  if (parts.empty()) throw ShapeError("nothing to merge");
  const auto& geom = parts.front().parent;
  const int num_subsets = parts.front().num_subsets;
  const SubsetIndexMap map(geom.num_views, num_subsets);
  if (int(parts.size()) != num_subsets) throw ShapeError("expected " + std::to_string(num_subsets) + " subset parts");

  std::vector<const SubsetSinogram*> by_index(std::size_t(num_subsets), nullptr);
  for (const auto& part : parts) {
    if (!(part.parent == geom) || part.num_subsets != num_subsets)
      throw ShapeError("subset parts come from different parent geometries");
    if (part.subset < 1 || part.subset > num_subsets) throw ShapeError("subset index out of range");
    auto& slot = by_index[std::size_t(part.subset - 1)];
    if (slot != nullptr) throw ShapeError("duplicate subset " + std::to_string(part.subset));
    if (part.parent_views != map.indices(part.subset)) throw ShapeError("subset parent views do not match the map");
    slot = &part;
  }
  std::vector<Array2> ordered;
  ordered.reserve(std::size_t(num_subsets));
  for (const auto* p : by_index) ordered.push_back(p->values);
  Sinogram out(geom, os_merge(ordered, map));
  return out;
}

ViewMask mask_for_subset(const ViewMask& mask, const SubsetIndexMap& map, int n) {
  if (mask.size() != map.num_views()) throw ShapeError("mask length does not match subset map");
  const auto& idx = map.indices(n);
  std::vector<bool> kept;
  kept.reserve(idx.size());
  for (int v : idx) kept.push_back(mask[v - 1]);
  return ViewMask(std::move(kept));
}

std::vector<int> measured_per_subset(const ViewMask& mask, const SubsetIndexMap& map) {
  std::vector<int> counts;
  for (int n = 1; n <= map.num_subsets(); ++n) counts.push_back(mask_for_subset(mask, map, n).count());
  return counts;
}

}  // namespace osmm
