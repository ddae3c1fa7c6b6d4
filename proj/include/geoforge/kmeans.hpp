#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace geoforge {

struct KMeansResult {
  Eigen::MatrixXd centroids;        // k x d
  std::vector<int> labels;          // one per input row
  std::vector<std::size_t> counts;  // members per centroid
  // Inertia (sum of squared distances to the assigned centroid) measured after
  // every assignment step.
  std::vector<double> inertia;
  int iterations = 0;
  bool converged = false;

  // Index of the most populous cluster; ties go to the lowest index.
  std::size_t largest() const;
};

// Lloyd's algorithm with k-means++ seeding drawn from `seed`. Rows of `points`
// are samples. k is reduced to the number of samples when fewer are given,
// and seeding stops early once every remaining sample coincides with a chosen
// centre. Iterates until assignments stop changing or `max_iterations`.
KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, int k, std::uint64_t seed,
                    int max_iterations = 50);

}  // namespace geoforge
