// avdiar/clustering.hpp
//
// Average-linkage agglomerative clustering of unit-norm embeddings under
// cosine distance, with hard cannot-link constraints.  A constrained pair is
// never merged, no matter how small its distance; constraints propagate to
// merged clusters so the guarantee holds transitively.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AVDIAR_CLUSTERING_HPP
#define AVDIAR_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "avdiar/errors.hpp"

namespace avdiar {

inline double cosine_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ValidationError("cosine_distance: dimension mismatch (" +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  double dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return 1.0 - dot;
}

inline double l2_norm(const std::vector<double>& v) {
  double sq = 0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

inline std::vector<double> normalized(std::vector<double> v) {
  double n = l2_norm(v);
  if (n < 1e-12)
    throw ValidationError("cannot normalize a zero-norm vector");
  for (double& x : v) x /= n;
  return v;
}

struct ClusterItem {
  std::string id;
  std::vector<double> vector;
};

inline std::pair<std::string, std::string> ordered_pair(std::string a,
                                                        std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

struct ClusterInput {
  std::vector<ClusterItem> items;
  // Unordered id pairs that must never share a cluster.
  std::set<std::pair<std::string, std::string>> cannot_link;
  double stop_threshold = 0.0;
};

struct Partition {
  // id -> cluster label; labels are contiguous integers rendered as strings,
  // numbered by each cluster's smallest member id.
  std::map<std::string, std::string> assignment;
  std::size_t n_clusters = 0;

  std::vector<std::vector<std::string>> clusters() const {
    std::map<std::string, std::vector<std::string>> by_label;
    for (const auto& [id, label] : assignment) by_label[label].push_back(id);
    std::vector<std::vector<std::string>> out(by_label.size());
    for (auto& [label, ids] : by_label) {
      std::sort(ids.begin(), ids.end());
      out[static_cast<std::size_t>(std::stoul(label))] = std::move(ids);
    }
    return out;
  }
};

namespace detail {

inline void validate_cluster_input(const ClusterInput& input) {
  if (input.stop_threshold < 0 || input.stop_threshold > 2)
    throw ValidationError("stop_threshold must lie in [0, 2]");
  std::set<std::string> ids;
  std::size_t dim = 0;
  for (const ClusterItem& item : input.items) {
    if (!ids.insert(item.id).second)
      throw ValidationError("duplicate item id '" + item.id + "'");
    if (dim == 0) dim = item.vector.size();
    if (item.vector.size() != dim)
      throw ValidationError("item '" + item.id + "' has dimension " +
                            std::to_string(item.vector.size()) +
                            ", expected " + std::to_string(dim));
    if (std::abs(l2_norm(item.vector) - 1.0) > 1e-6)
      throw ValidationError("item '" + item.id + "' is not unit-norm");
  }
  for (const auto& [a, b] : input.cannot_link) {
    if (!ids.count(a) || !ids.count(b))
      throw ValidationError("cannot-link pair (" + a + ", " + b +
                            ") references an unknown id");
  }
}

}  // namespace detail

// Deterministic constrained AHC.  At each step the admissible cluster pair
// with the smallest average linkage is merged; ties go to the smallest
// (min id, min id) pair.  Stops when the smallest admissible linkage
// exceeds stop_threshold or no admissible pair remains.
inline Partition ahc_constrained(const ClusterInput& input) {
  detail::validate_cluster_input(input);
  const std::size_t n = input.items.size();

  // Pairs are unordered; normalize whatever orientation the caller used.
  std::set<std::pair<std::string, std::string>> constraints;
  for (const auto& [a, b] : input.cannot_link)
    constraints.insert(ordered_pair(a, b));

  // Items sorted by id so results do not depend on input order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return input.items[a].id < input.items[b].id;
  });

  std::vector<const ClusterItem*> items(n);
  for (std::size_t i = 0; i < n; ++i) items[i] = &input.items[order[i]];

  // Pairwise sums of item distances; average linkage between clusters A and
  // B is sum(A,B) / (|A| |B|), maintained incrementally on merge.
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<char>> forbidden(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum[i][j] = sum[j][i] =
          cosine_distance(items[i]->vector, items[j]->vector);
      if (constraints.count(ordered_pair(items[i]->id, items[j]->id)))
        forbidden[i][j] = forbidden[j][i] = 1;
    }
  }

  std::vector<char> active(n, 1);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::string> min_id(n);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) {
    min_id[i] = items[i]->id;
    members[i] = {i};
  }

  while (true) {
    double best = 0;
    std::size_t bi = n, bj = n;
    std::pair<std::string, std::string> best_key;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j] || forbidden[i][j]) continue;
        double linkage =
            sum[i][j] / (static_cast<double>(size[i]) * size[j]);
        auto key = ordered_pair(min_id[i], min_id[j]);
        if (bi == n || linkage < best ||
            (linkage == best && key < best_key)) {
          best = linkage;
          bi = i;
          bj = j;
          best_key = key;
        }
      }
    }
    if (bi == n || best > input.stop_threshold) break;

    // Merge bj into bi.
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      sum[bi][k] = sum[k][bi] = sum[bi][k] + sum[bj][k];
      forbidden[bi][k] = forbidden[k][bi] = forbidden[bi][k] | forbidden[bj][k];
    }
    size[bi] += size[bj];
    min_id[bi] = std::min(min_id[bi], min_id[bj]);
    members[bi].insert(members[bi].end(), members[bj].begin(),
                       members[bj].end());
    active[bj] = 0;
  }

  // Number clusters by smallest member id.
  std::vector<std::size_t> final_clusters;
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) final_clusters.push_back(i);
  std::sort(final_clusters.begin(), final_clusters.end(),
            [&](std::size_t a, std::size_t b) { return min_id[a] < min_id[b]; });

  Partition part;
  part.n_clusters = final_clusters.size();
  for (std::size_t label = 0; label < final_clusters.size(); ++label)
    for (std::size_t m : members[final_clusters[label]])
      part.assignment[items[m]->id] = std::to_string(label);
  return part;
}

}  // namespace avdiar

#endif  // AVDIAR_CLUSTERING_HPP
