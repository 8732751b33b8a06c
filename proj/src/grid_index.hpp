#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "landtriage/geo.hpp"

namespace landtriage::detail {

// Fixed-grid binning of bounding boxes. Candidates are a superset of true hits.
class GridIndex {
 public:
  explicit GridIndex(double cell_deg = 0.05) : cell_deg_(cell_deg) {}

  void insert(std::size_t id, const geo::GeoBBox& b) {
    const auto [r0, c0] = cell_of(b.min_lat, b.min_lon);
    const auto [r1, c1] = cell_of(b.max_lat, b.max_lon);
    for (std::int64_t r = r0; r <= r1; ++r) {
      for (std::int64_t c = c0; c <= c1; ++c) cells_[key(r, c)].push_back(id);
    }
    ++count_;
  }

  // Sorted, unique candidate ids whose cells overlap the query box.
  std::vector<std::size_t> candidates(const geo::GeoBBox& q) const {
    std::vector<std::size_t> out;
    const auto [r0, c0] = cell_of(q.min_lat, q.min_lon);
    const auto [r1, c1] = cell_of(q.max_lat, q.max_lon);
    const double span = double(r1 - r0 + 1) * double(c1 - c0 + 1);
    if (span > double(cells_.size())) {
      for (const auto& [k, ids] : cells_) {
        std::int64_t r = k >> 32;
        std::int64_t c = static_cast<std::int32_t>(k & 0xffffffff);
        if (r >= r0 && r <= r1 && c >= c0 && c <= c1) out.insert(out.end(), ids.begin(), ids.end());
      }
    } else {
      for (std::int64_t r = r0; r <= r1; ++r) {
        for (std::int64_t c = c0; c <= c1; ++c) {
          auto it = cells_.find(key(r, c));
          if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::size_t size() const { return count_; }

 private:
  std::pair<std::int64_t, std::int64_t> cell_of(double lat, double lon) const {
    return {static_cast<std::int64_t>(std::floor(lat / cell_deg_)),
            static_cast<std::int64_t>(std::floor(lon / cell_deg_))};
  }
  static std::int64_t key(std::int64_t r, std::int64_t c) {
    return (r << 32) | static_cast<std::int64_t>(static_cast<std::uint32_t>(c));
  }

  double cell_deg_;
  std::size_t count_ = 0;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

}  // namespace landtriage::detail
