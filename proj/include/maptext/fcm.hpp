#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maptext/raster.hpp"

namespace maptext::fcm {

struct FcmConfig {
  int k = 3;
  double fuzzifier = 2.0;
  // Stop once max |delta u| over one iteration drops below this.
  double epsilon = 1e-4;
  int max_iterations = 100;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const FcmConfig&, const FcmConfig&) = default;
};

// K×n membership matrix; column i holds the memberships of point i.
class PartitionMatrix {
 public:
  PartitionMatrix() = default;
  PartitionMatrix(std::size_t k, std::size_t n) : k_(k), n_(n), u_(k * n, 0.0) {}

  std::size_t clusters() const noexcept { return k_; }
  std::size_t points() const noexcept { return n_; }

  double& operator()(std::size_t k, std::size_t i) { return u_[k * n_ + i]; }
  double operator()(std::size_t k, std::size_t i) const { return u_[k * n_ + i]; }

  double column_sum(std::size_t i) const;
  // argmax_k u_ki, lowest index on ties.
  std::size_t argmax(std::size_t i) const;

  friend bool operator==(const PartitionMatrix&, const PartitionMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::size_t n_ = 0;
  std::vector<double> u_;
};

struct ClusterModel {
  std::vector<double> centers;
  double fuzzifier = 2.0;
  double validity = 0.0;
  int iterations = 0;
  bool converged = false;
  // J_m after every center update, followed by the J_m of the returned pair.
  std::vector<double> validity_history;

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

struct ClusterResult {
  PartitionMatrix u;
  ClusterModel model;
};

struct CenterUpdate {
  std::vector<double> centers;
  // Clusters whose membership mass was zero; they keep the previous center.
  std::vector<std::size_t> empty_clusters;
};

// K distinct point values drawn without replacement by a seeded mt19937_64.
std::vector<double> init_centers(std::span<const double> points, int k, std::uint64_t seed);

PartitionMatrix memberships(std::span<const double> points, std::span<const double> centers, double fuzzifier);

CenterUpdate update_centers(const PartitionMatrix& u, std::span<const double> points, double fuzzifier,
                            std::span<const double> previous = {});

double validity(const PartitionMatrix& u, std::span<const double> centers, std::span<const double> points,
                double fuzzifier);

// Alternating minimization. Points are collapsed to distinct values with
// multiplicities before iterating, so the per-point and histogram routes
// share one code path.
ClusterResult cluster(std::span<const double> points, const FcmConfig& config);

// Same iteration over distinct `values` carrying positive `weights`.
// The returned matrix is over `values`, not over expanded points.
ClusterResult cluster_weighted(std::span<const double> values, std::span<const double> weights,
                               const FcmConfig& config);

struct Selection {
  enum class Kind { Darkest, Brightest, Index };
  Kind kind = Kind::Darkest;
  int index = 0;

  static Selection darkest() { return {Kind::Darkest, 0}; }
  static Selection brightest() { return {Kind::Brightest, 0}; }
  static Selection cluster(int k) { return {Kind::Index, k}; }
  friend bool operator==(const Selection&, const Selection&) = default;
};

struct Segmentation {
  BinaryMask mask;
  ClusterModel model;
  std::size_t selected = 0;
};

Segmentation segment(const GrayImage& img, const FcmConfig& config, Selection selection = Selection::darkest());
BinaryMask segment_mask(const GrayImage& img, const FcmConfig& config, Selection selection = Selection::darkest());

struct KSweepEntry {
  int k;
  double validity;
};

// J_m per K for the operator to compare. Raw J_m shrinks as K grows, so
// nothing is chosen automatically.
std::vector<KSweepEntry> validity_by_k(const GrayImage& img, FcmConfig config, int k_min = 2, int k_max = 5);

}  // namespace maptext::fcm
