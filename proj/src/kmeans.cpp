#include "geoforge/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace geoforge {

std::size_t KMeansResult::largest() const {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::Ref<const Eigen::MatrixXd>& points, int k,
                               std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  std::vector<Eigen::Index> chosen;
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  chosen.push_back(first(rng));

  Eigen::VectorXd d2 = (points.rowwise() - points.row(chosen[0])).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(chosen.size()) < k) {
    const double total = d2.sum();
    if (!(total > 0)) break;
    const double target = unit(rng) * total;
    double acc = 0;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0) {
        pick = i;
        break;
      }
    }
    while (d2[pick] == 0 && pick > 0) --pick;
    chosen.push_back(pick);
    d2 = d2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }

  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(chosen.size()), points.cols());
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(chosen[c]);
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, int k, std::uint64_t seed,
                    int max_iterations) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
  const Eigen::Index n = points.rows();
  if (n == 0) throw std::invalid_argument("kmeans: no samples");
  k = static_cast<int>(std::min<Eigen::Index>(k, n));

  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  const Eigen::Index kk = result.centroids.rows();
  result.labels.assign(static_cast<std::size_t>(n), -1);

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      const double d = (result.centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
      inertia += d;
      if (result.labels[i] != static_cast<int>(best)) {
        result.labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    result.inertia.push_back(inertia);
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kk, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(kk), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.labels[i]) += points.row(i);
      ++counts[static_cast<std::size_t>(result.labels[i])];
    }
    for (Eigen::Index c = 0; c < kk; ++c) {
      // Empty clusters keep their previous centre.
      if (counts[static_cast<std::size_t>(c)] > 0) {
        result.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }

  result.counts.assign(static_cast<std::size_t>(kk), 0);
  for (int label : result.labels) ++result.counts[static_cast<std::size_t>(label)];
  return result;
}

}  // namespace geoforge
