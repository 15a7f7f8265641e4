#include "maptext/fcm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace maptext::fcm {

namespace {

// Unbiased draw in [0, n) with a fixed recipe; std::uniform_int_distribution
// is implementation-defined and would break cross-platform determinism.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t reject_below = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= reject_below) return r % n;
  }
}

std::vector<double> distinct_sorted(std::span<const double> points) {
  std::vector<double> values(points.begin(), points.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

void check_fuzzifier(double m) {
  if (!(m > 1.0) || !std::isfinite(m))
    throw Error(Errc::InvalidArgument, "fuzzifier must be > 1, got " + std::to_string(m));
}

CenterUpdate update_impl(const PartitionMatrix& u, std::span<const double> points, std::span<const double> weights,
                         double m, std::span<const double> previous) {
  if (u.points() != points.size()) throw Error(Errc::DimensionMismatch, "partition matrix does not match points");
  if (!previous.empty() && previous.size() != u.clusters())
    throw Error(Errc::DimensionMismatch, "previous centers do not match cluster count");
  CenterUpdate out;
  out.centers.resize(u.clusters());
  for (std::size_t k = 0; k < u.clusters(); ++k) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double w = std::pow(u(k, i), m);
      if (!weights.empty()) w *= weights[i];
      num += w * points[i];
      den += w;
    }
    if (den > 0.0) {
      out.centers[k] = num / den;
    } else {
      if (previous.empty())
        throw Error(Errc::InvalidArgument, "cluster " + std::to_string(k) + " is empty and no previous center given");
      out.centers[k] = previous[k];
      out.empty_clusters.push_back(k);
    }
  }
  return out;
}

double validity_impl(const PartitionMatrix& u, std::span<const double> centers, std::span<const double> points,
                     std::span<const double> weights, double m) {
  if (u.points() != points.size() || u.clusters() != centers.size())
    throw Error(Errc::DimensionMismatch, "validity: inconsistent shapes");
  double total = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = centers[k] - points[i];
      double term = std::pow(u(k, i), m) * d * d;
      if (!weights.empty()) term *= weights[i];
      total += term;
    }
  }
  return total;
}

}  // namespace

void FcmConfig::validate() const {
  if (k < 1) throw Error(Errc::InvalidArgument, "fcm.k must be >= 1");
  check_fuzzifier(fuzzifier);
  if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "fcm.epsilon must be > 0");
  if (max_iterations < 1) throw Error(Errc::InvalidArgument, "fcm.max_iterations must be >= 1");
}

double PartitionMatrix::column_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t k = 0; k < k_; ++k) s += (*this)(k, i);
  return s;
}

std::size_t PartitionMatrix::argmax(std::size_t i) const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < k_; ++k)
    if ((*this)(k, i) > (*this)(best, i)) best = k;
  return best;
}

std::vector<double> init_centers(std::span<const double> points, int k, std::uint64_t seed) {
  if (points.empty()) throw Error(Errc::InvalidArgument, "init_centers: no points");
  if (k < 1) throw Error(Errc::InvalidArgument, "init_centers: k must be >= 1");
  std::vector<double> values = distinct_sorted(points);
  if (static_cast<std::size_t>(k) > values.size())
    throw Error(Errc::TooFewDistinctValues, "need " + std::to_string(k) + " distinct values, found " +
                                                std::to_string(values.size()));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(draw_below(rng, values.size() - i));
    std::swap(values[i], values[j]);
  }
  values.resize(static_cast<std::size_t>(k));
  return values;
}

PartitionMatrix memberships(std::span<const double> points, std::span<const double> centers, double fuzzifier) {
  check_fuzzifier(fuzzifier);
  if (centers.empty()) throw Error(Errc::InvalidArgument, "memberships: no centers");
  const std::size_t k_count = centers.size();
  const double exponent = 2.0 / (fuzzifier - 1.0);
  PartitionMatrix u(k_count, points.size());
  std::vector<double> dist(k_count);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t coincident = 0;
    for (std::size_t k = 0; k < k_count; ++k) {
      dist[k] = std::abs(centers[k] - points[i]);
      if (dist[k] == 0.0) ++coincident;
    }
    if (coincident > 0) {
      const double share = 1.0 / static_cast<double>(coincident);
      for (std::size_t k = 0; k < k_count; ++k) u(k, i) = dist[k] == 0.0 ? share : 0.0;
      continue;
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      double denom = 0.0;
      for (std::size_t j = 0; j < k_count; ++j) denom += std::pow(dist[k] / dist[j], exponent);
      u(k, i) = 1.0 / denom;
    }
  }
  return u;
}

CenterUpdate update_centers(const PartitionMatrix& u, std::span<const double> points, double fuzzifier,
                            std::span<const double> previous) {
  check_fuzzifier(fuzzifier);
  return update_impl(u, points, {}, fuzzifier, previous);
}

double validity(const PartitionMatrix& u, std::span<const double> centers, std::span<const double> points,
                double fuzzifier) {
  check_fuzzifier(fuzzifier);
  return validity_impl(u, centers, points, {}, fuzzifier);
}

ClusterResult cluster_weighted(std::span<const double> values, std::span<const double> weights,
                               const FcmConfig& config) {
  config.validate();
  if (values.empty()) throw Error(Errc::InvalidArgument, "cluster: no points");
  if (weights.size() != values.size()) throw Error(Errc::DimensionMismatch, "cluster: weights/values mismatch");

  const double m = config.fuzzifier;
  ClusterModel model;
  model.fuzzifier = m;
  model.centers = init_centers(values, config.k, config.seed);

  PartitionMatrix u = memberships(values, model.centers, m);
  for (int it = 1; it <= config.max_iterations; ++it) {
    model.centers = update_impl(u, values, weights, m, model.centers).centers;
    model.validity_history.push_back(validity_impl(u, model.centers, values, weights, m));

    PartitionMatrix next = memberships(values, model.centers, m);
    double delta = 0.0;
    for (std::size_t k = 0; k < next.clusters(); ++k)
      for (std::size_t i = 0; i < next.points(); ++i) delta = std::max(delta, std::abs(next(k, i) - u(k, i)));
    u = std::move(next);
    model.iterations = it;
    if (delta < config.epsilon) {
      model.converged = true;
      break;
    }
  }
  model.validity = validity_impl(u, model.centers, values, weights, m);
  model.validity_history.push_back(model.validity);
  return {std::move(u), std::move(model)};
}

ClusterResult cluster(std::span<const double> points, const FcmConfig& config) {
  config.validate();
  if (points.empty()) throw Error(Errc::InvalidArgument, "cluster: no points");
  const std::vector<double> values = distinct_sorted(points);
  std::vector<double> weights(values.size(), 0.0);
  std::vector<std::size_t> slot(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    slot[i] = static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), points[i]) - values.begin());
    weights[slot[i]] += 1.0;
  }
  ClusterResult compact = cluster_weighted(values, weights, config);

  PartitionMatrix full(compact.u.clusters(), points.size());
  for (std::size_t k = 0; k < full.clusters(); ++k)
    for (std::size_t i = 0; i < points.size(); ++i) full(k, i) = compact.u(k, slot[i]);
  return {std::move(full), std::move(compact.model)};
}

Segmentation segment(const GrayImage& img, const FcmConfig& config, Selection selection) {
  config.validate();
  if (img.empty()) throw Error(Errc::InvalidArgument, "segment: empty image");
  if (selection.kind == Selection::Kind::Index && (selection.index < 0 || selection.index >= config.k))
    throw Error(Errc::IndexOutOfRange, "cluster index " + std::to_string(selection.index) + " outside [0, " +
                                           std::to_string(config.k) + ")");

  std::array<double, 256> hist{};
  for (Intensity v : img.pixels()) hist[v] += 1.0;
  std::vector<double> values, weights;
  for (int v = 0; v < 256; ++v) {
    if (hist[v] > 0.0) {
      values.push_back(v);
      weights.push_back(hist[v]);
    }
  }
  ClusterResult result = cluster_weighted(values, weights, config);
  const auto& centers = result.model.centers;

  std::size_t chosen = 0;
  switch (selection.kind) {
    case Selection::Kind::Darkest:
      chosen = static_cast<std::size_t>(std::min_element(centers.begin(), centers.end()) - centers.begin());
      break;
    case Selection::Kind::Brightest:
      chosen = static_cast<std::size_t>(std::max_element(centers.begin(), centers.end()) - centers.begin());
      break;
    case Selection::Kind::Index:
      chosen = static_cast<std::size_t>(selection.index);
      break;
  }

  std::array<std::uint8_t, 256> in_cluster{};
  for (std::size_t i = 0; i < values.size(); ++i)
    in_cluster[static_cast<std::size_t>(values[i])] = result.u.argmax(i) == chosen;

  BinaryMask mask(img.width(), img.height());
  auto src = img.pixels();
  auto dst = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = in_cluster[src[i]];
  return {std::move(mask), std::move(result.model), chosen};
}

BinaryMask segment_mask(const GrayImage& img, const FcmConfig& config, Selection selection) {
  return segment(img, config, selection).mask;
}

std::vector<KSweepEntry> validity_by_k(const GrayImage& img, FcmConfig config, int k_min, int k_max) {
  std::vector<KSweepEntry> out;
  for (int k = k_min; k <= k_max; ++k) {
    config.k = k;
    out.push_back({k, segment(img, config).model.validity});
  }
  return out;
}

}  // namespace maptext::fcm
