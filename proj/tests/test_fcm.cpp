#include <doctest.h>

#include <limits>
#include <map>
#include <random>
#include <set>

#include "maptext/fcm.hpp"
#include "oracles.hpp"

using namespace maptext;
using namespace maptext::fcm;

namespace {

std::vector<std::vector<double>> as_rows(const PartitionMatrix& u) {
  std::vector<std::vector<double>> rows(u.clusters(), std::vector<double>(u.points()));
  for (std::size_t k = 0; k < u.clusters(); ++k)
    for (std::size_t i = 0; i < u.points(); ++i) rows[k][i] = u(k, i);
  return rows;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(FcmConfig{}.validate());
  CHECK_THROWS_AS((FcmConfig{0}.validate()), Error);
  CHECK_THROWS_AS((FcmConfig{2, 1.0}.validate()), Error);
  CHECK_THROWS_AS((FcmConfig{2, 2.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((FcmConfig{2, 2.0, 1e-4, 0}.validate()), Error);
}

TEST_CASE("center initialization") {
  const std::vector<double> one{5};
  CHECK(init_centers(one, 1, 0) == std::vector<double>{5});

  std::vector<double> seq;
  for (int i = 1; i <= 100; ++i) seq.push_back(i);
  const auto a = init_centers(seq, 3, 7);
  CHECK(a == init_centers(seq, 3, 7));
  CHECK(a.size() == 3);
  CHECK(std::set<double>(a.begin(), a.end()).size() == 3);

  const std::vector<double> flat{0, 0, 0};
  try {
    init_centers(flat, 2, 0);
    FAIL("expected TooFewDistinctValues");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooFewDistinctValues);
  }
}

TEST_CASE("memberships") {
  const std::vector<double> centers{0, 10};
  auto col = [&](double x) {
    const std::vector<double> p{x};
    const PartitionMatrix u = memberships(p, centers, 2.0);
    return std::pair{u(0, 0), u(1, 0)};
  };
  CHECK(col(5).first == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(col(0) == std::pair{1.0, 0.0});
  CHECK(col(2).first == doctest::Approx(16.0 / 17.0).epsilon(1e-12));
  CHECK(col(2).second == doctest::Approx(1.0 / 17.0).epsilon(1e-12));

  SUBCASE("coincident duplicate centers split the mass") {
    const std::vector<double> dup{3, 3, 9};
    const std::vector<double> p{3};
    const PartitionMatrix u = memberships(p, dup, 2.0);
    CHECK(u(0, 0) == 0.5);
    CHECK(u(1, 0) == 0.5);
    CHECK(u(2, 0) == 0.0);
  }

  SUBCASE("agrees with direct evaluation") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> x(-50, 50), mdist(1.05, 4.0);
    for (int trial = 0; trial < 2000; ++trial) {
      const int k = 1 + trial % 5;
      std::vector<double> c(k);
      for (auto& v : c) v = x(rng);
      std::vector<double> pts(3);
      for (auto& v : pts) v = x(rng);
      pts[0] = c[trial % k];
      const double m = mdist(rng);
      const PartitionMatrix u = memberships(pts, c, m);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto expect = oracle::membership(pts[i], c, m);
        for (int kk = 0; kk < k; ++kk) REQUIRE(std::abs(u(kk, i) - expect[kk]) <= 1e-12);
        REQUIRE(u.column_sum(i) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("center update") {
  PartitionMatrix single(1, 1);
  single(0, 0) = 1.0;
  const std::vector<double> four{4};
  for (double m : {1.5, 2.0, 3.0}) CHECK(update_centers(single, four, m).centers[0] == 4.0);

  PartitionMatrix u(1, 2);
  u(0, 0) = 0.8;
  u(0, 1) = 0.2;
  const std::vector<double> pts{0, 10};
  CHECK(update_centers(u, pts, 2.0).centers[0] == doctest::Approx(0.4 / 0.68).epsilon(1e-12));

  SUBCASE("near-crisp memberships give the k-means mean") {
    const std::vector<double> data{1, 2, 3, 10, 11, 15};
    PartitionMatrix crisp(2, data.size());
    for (std::size_t i = 0; i < data.size(); ++i) crisp(i < 3 ? 0 : 1, i) = 1.0;
    const auto c = update_centers(crisp, data, 1.0001).centers;
    CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(c[1] == doctest::Approx(12.0).epsilon(1e-3));
  }

  SUBCASE("empty cluster keeps its previous center") {
    PartitionMatrix z(2, 2);
    z(0, 0) = z(0, 1) = 1.0;
    const std::vector<double> prev{1.0, 42.0};
    const CenterUpdate up = update_centers(z, pts, 2.0, prev);
    CHECK(up.centers[1] == 42.0);
    CHECK(up.empty_clusters == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(update_centers(z, pts, 2.0), Error);
  }
}

TEST_CASE("objective") {
  PartitionMatrix one(1, 1);
  one(0, 0) = 1.0;
  const std::vector<double> five{5}, zero{0};
  CHECK(validity(one, zero, five, 2.0) == 25.0);

  const std::vector<double> pts{0, 10};
  const PartitionMatrix crisp = memberships(pts, pts, 2.0);
  CHECK(validity(crisp, pts, pts, 2.0) == 0.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> x(0, 100);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> p(20), c(3);
    for (auto& v : p) v = x(rng);
    for (auto& v : c) v = x(rng);
    const PartitionMatrix u = memberships(p, c, 2.5);
    REQUIRE(validity(u, c, p, 2.5) == doctest::Approx(oracle::objective(as_rows(u), c, p, 2.5)).epsilon(1e-12));
  }
}

TEST_CASE("clustering") {
  const std::vector<double> pts{0, 1, 2, 100, 101, 102};
  const ClusterResult r = cluster(pts, {2, 2.0, 1e-9, 500, 1});

  double best = std::numeric_limits<double>::infinity();
  double b0 = 0, b1 = 0;
  for (int i = 0; i <= 204; ++i)
    for (int j = i + 1; j <= 204; ++j) {
      const std::vector<double> c{i * 0.5, j * 0.5};
      const double jm = oracle::objective_for_centers(c, pts, 2.0);
      if (jm < best) {
        best = jm;
        b0 = c[0];
        b1 = c[1];
      }
    }
  std::vector<double> got = r.model.centers;
  std::sort(got.begin(), got.end());
  CHECK(std::abs(got[0] - b0) <= 0.5);
  CHECK(std::abs(got[1] - b1) <= 0.5);
  CHECK(std::abs(got[0] - 1.0) <= 0.5);
  CHECK(std::abs(got[1] - 101.0) <= 0.5);
  CHECK(r.model.validity <= best);

  SUBCASE("single cluster is the mean") {
    const ClusterResult one = cluster(pts, {1});
    CHECK(one.model.centers[0] == doctest::Approx(51.0).epsilon(1e-12));
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(one.u(0, i) == 1.0);
  }

  SUBCASE("deterministic for a seed") {
    const FcmConfig cfg{3, 2.0, 1e-4, 100, 123};
    std::vector<double> data;
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> d(0, 255);
    for (int i = 0; i < 300; ++i) data.push_back(d(rng));
    const ClusterResult a = cluster(data, cfg), b = cluster(data, cfg);
    CHECK(a.model == b.model);
    CHECK(a.u == b.u);
  }

  SUBCASE("weighted histogram route equals expanded points") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> d(0, 40);
    std::vector<double> data;
    for (int i = 0; i < 500; ++i) data.push_back(d(rng));
    std::map<double, double> hist;
    for (double v : data) hist[v] += 1.0;
    std::vector<double> values, weights;
    for (auto [v, w] : hist) {
      values.push_back(v);
      weights.push_back(w);
    }
    const FcmConfig cfg{3, 2.0, 1e-6, 200, 5};
    const ClusterResult full = cluster(data, cfg);
    const ClusterResult compact = cluster_weighted(values, weights, cfg);
    CHECK(full.model == compact.model);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto slot = static_cast<std::size_t>(std::find(values.begin(), values.end(), data[i]) - values.begin());
      for (std::size_t k = 0; k < 3; ++k) REQUIRE(full.u(k, i) == compact.u(k, slot));
    }
  }

  SUBCASE("objective history never increases") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(0, 1000);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> data(200);
      for (auto& v : data) v = d(rng);
      const ClusterResult res = cluster(data, {2 + trial % 3, 1.5 + trial * 0.1, 1e-6, 300, static_cast<std::uint64_t>(trial)});
      const auto& h = res.model.validity_history;
      for (std::size_t i = 1; i < h.size(); ++i) REQUIRE(h[i] <= h[i - 1] * (1 + 1e-12));
      for (std::size_t i = 0; i < data.size(); ++i) REQUIRE(std::abs(res.u.column_sum(i) - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("segmentation") {
  GrayImage two(8, 8, 230);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if ((x * 3 + y) % 5 == 0) two.at(x, y) = 20;
  const FcmConfig cfg{2, 2.0, 1e-6, 100, 3};

  const BinaryMask dark = segment_mask(two, cfg);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) REQUIRE(dark.at(x, y) == (two.at(x, y) == 20 ? 1 : 0));

  const BinaryMask bright = segment_mask(two, cfg, Selection::brightest());
  for (std::size_t i = 0; i < two.size(); ++i) REQUIRE(bright.pixels()[i] + dark.pixels()[i] == 1);

  const Segmentation seg = segment(two, cfg, Selection::cluster(0));
  CHECK(seg.selected == 0);
  CHECK_THROWS_AS(segment(two, cfg, Selection::cluster(2)), Error);

  CHECK(segment_mask(two, {1}) == BinaryMask(8, 8, 1));

  try {
    segment_mask(GrayImage(4, 4, 9), cfg);
    FAIL("expected TooFewDistinctValues");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooFewDistinctValues);
  }

  SUBCASE("validity by k reports every k without choosing") {
    GrayImage img(16, 16);
    for (int i = 0; i < 256; ++i) img.pixels()[i] = static_cast<std::uint8_t>(i);
    const auto sweep = validity_by_k(img, cfg, 2, 5);
    REQUIRE(sweep.size() == 4);
    for (std::size_t i = 0; i < sweep.size(); ++i) CHECK(sweep[i].k == static_cast<int>(i) + 2);
  }
}
