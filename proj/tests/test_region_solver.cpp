#include <doctest.h>

#include <cmath>
#include <omp.h>

#include "oracles.hpp"
#include "rdp/errors.hpp"
#include "rdp/info_measures.hpp"
#include "rdp/region_solver.hpp"

using namespace rdp;
using doctest::Approx;

namespace {

Channel encoder(std::size_t nx, std::size_t nv, std::vector<double> rows) {
  return Channel({{"X", nx}}, {{"V", nv}}, std::move(rows));
}

Channel decoder(std::size_t nz, std::size_t nv, std::size_t ny, std::vector<double> rows) {
  return Channel({{"Z", nz}, {"V", nv}}, {{"Y", ny}}, std::move(rows));
}

// Y copies V (requires nv == ny)
Channel copy_decoder(std::size_t nz, std::size_t nv) {
  std::vector<double> rows(nz * nv * nv, 0.0);
  for (std::size_t z = 0; z < nz; ++z)
    for (std::size_t v = 0; v < nv; ++v) rows[(z * nv + v) * nv + v] = 1.0;
  return decoder(nz, nv, nv, rows);
}

SolverOptions quick(std::uint64_t seed = 1, std::size_t starts = 8) {
  SolverOptions o;
  o.seed = seed;
  o.starts = starts;
  return o;
}

}  // namespace

TEST_SUITE("region_solver") {
  TEST_CASE("SourceSpec validation") {
    const auto pxz = SourceSpec::dsbs(0.2).pxz();
    CHECK_THROWS_AS(SourceSpec(pxz, {{0, 1}}), ArgumentError);
    CHECK_THROWS_AS(SourceSpec(pxz, {{0, 1}, {1, -1}}), ArgumentError);
    CHECK_THROWS_AS(SourceSpec(pxz.renamed({"A", "B"}), SourceSpec::hamming(2)), ArgumentError);
    CHECK_THROWS_AS(SourceSpec::dsbs(1.5), ArgumentError);
    const auto s = SourceSpec::independent({0.3, 0.7}, {0.5, 0.5});
    CHECK(independent_distortion(s) == Approx(2 * 0.3 * 0.7));
    CHECK(default_v_size(s) == 6);
  }

  TEST_CASE("assemble: independent encoder, decoder emitting p_X") {
    const auto src = SourceSpec::independent({0.3, 0.7}, {0.4, 0.6});
    const auto enc = encoder(2, 2, {0.5, 0.5, 0.5, 0.5});
    const auto dec = decoder(2, 2, 2, {0.3, 0.7, 0.3, 0.7, 0.3, 0.7, 0.3, 0.7});
    const auto pt = assemble(src, enc, dec);
    const auto r = evaluate(pt, src);
    CHECK(std::abs(r.rate) < 1e-12);
    CHECK(std::abs(r.rc_sum) < 1e-12);
    CHECK(r.realism_gap < 1e-12);
    CHECK(r.distortion == Approx(independent_distortion(src)).epsilon(1e-12));
    const auto back = marginalize(pt.joint, {"X", "Z"});
    CHECK(oracle::half_l1(oracle::to_vec(back), oracle::to_vec(src.pxz())) < 1e-15);
  }

  TEST_CASE("assemble: V = X, Y = V") {
    const auto src = SourceSpec::dsbs(0.2);
    const auto r = evaluate(assemble(src, encoder(2, 2, {1, 0, 0, 1}), copy_decoder(2, 2)), src);
    CHECK(r.rate == Approx(oracle::h2(0.2)).epsilon(1e-12));
    CHECK(std::abs(r.distortion) < 1e-15);
    CHECK(r.realism_gap < 1e-15);
  }

  TEST_CASE("evaluate: Z = X makes the rate vanish") {
    const SourceSpec src(FinitePmf({{"X", 2}, {"Z", 2}}, {0.5, 0, 0, 0.5}), SourceSpec::hamming(2));
    const auto r = evaluate(assemble(src, encoder(2, 2, {1, 0, 0, 1}), copy_decoder(2, 2)), src);
    CHECK(std::abs(r.rate) < 1e-12);
  }

  TEST_CASE("evaluate matches a dense tensor contraction") {
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
      const std::size_t nx = 2 + rng.below(2), nz = 2 + rng.below(2), nv = 2 + rng.below(3);
      const auto pxz = oracle::random_pmf(rng, {{"X", nx}, {"Z", nz}}, 0.2);
      std::vector<std::vector<double>> d(nx, std::vector<double>(nx));
      for (auto& row : d)
        for (auto& v : row) v = rng.uniform();
      const SourceSpec src(pxz, d);
      const auto er = oracle::random_rows(rng, nx, nv, 0.2);
      const auto dr = oracle::random_rows(rng, nz * nv, nx, 0.2);
      const auto r = evaluate(assemble(src, encoder(nx, nv, er), decoder(nz, nv, nx, dr)), src);

      const auto p = oracle::to_vec(pxz);
      double dist = 0.0;
      std::vector<double> py(nx, 0.0), px(nx, 0.0), pyv(nx * nv, 0.0), pzv(nz * nv, 0.0);
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t z = 0; z < nz; ++z) {
          px[x] += p[x * nz + z];
          for (std::size_t v = 0; v < nv; ++v)
            for (std::size_t y = 0; y < nx; ++y) {
              const double w = p[x * nz + z] * er[x * nv + v] * dr[(z * nv + v) * nx + y];
              dist += w * d[x][y];
              py[y] += w;
              pyv[y * nv + v] += w;
              pzv[z * nv + v] += w;
            }
        }
      const double rate = oracle::cmi_xv_given_z(oracle::xzv(p, nx, nz, er, nv), nx, nz, nv);
      CHECK(r.rate == Approx(rate).epsilon(1e-10));
      CHECK(r.distortion == Approx(dist).epsilon(1e-12));
      CHECK(r.realism_gap == Approx(oracle::half_l1(py, px)).epsilon(1e-12));
      CHECK(r.rc_sum == Approx(oracle::mi2(pyv, nx, nv) - oracle::mi2(pzv, nz, nv)).epsilon(1e-10));
    }
  }

  TEST_CASE("rate of assembled points equals I(X;V) - I(Z;V)") {
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
      const std::size_t nx = 2 + rng.below(3), nz = 2 + rng.below(3), nv = 1 + rng.below(5);
      const SourceSpec src(oracle::random_pmf(rng, {{"X", nx}, {"Z", nz}}, 0.2), SourceSpec::hamming(nx));
      const auto pt = assemble(src, encoder(nx, nv, oracle::random_rows(rng, nx, nv, 0.2)),
                               decoder(nz, nv, nx, oracle::random_rows(rng, nz * nv, nx)));
      const double diff = mutual_information(pt.joint, {"X"}, {"V"}) - mutual_information(pt.joint, {"Z"}, {"V"});
      CHECK(std::abs(evaluate(pt, src).rate - diff) < 1e-9);
    }
  }

  TEST_CASE("markov_check") {
    Rng rng(10);
    const auto src = SourceSpec::dsbs(0.3);
    const auto pt = assemble(src, encoder(2, 3, oracle::random_rows(rng, 2, 3)),
                             decoder(2, 3, 2, oracle::random_rows(rng, 6, 2)));
    const auto g = markov_check(pt.joint);
    CHECK(g.z_x_v <= 1e-10);
    CHECK(g.x_zv_y <= 1e-10);

    const auto ind = FinitePmf::uniform({{"X", 2}, {"Z", 2}, {"V", 2}, {"Y", 2}});
    CHECK(markov_check(ind).z_x_v == Approx(0.0));
    CHECK(markov_check(ind).x_zv_y == Approx(0.0));

    auto w = oracle::to_vec(pt.joint);
    w[5] += 0.01;
    const auto pert = FinitePmf::from_weights(pt.joint.axes(), w);
    CHECK(markov_check(pert).z_x_v > 1e-4);
  }

  TEST_CASE("assemble rejects malformed channels") {
    const auto src = SourceSpec::dsbs(0.2);
    CHECK_THROWS_AS(assemble(src, Channel({{"Z", 2}}, {{"V", 2}}, {1, 0, 0, 1}), copy_decoder(2, 2)), ArgumentError);
    CHECK_THROWS_AS(assemble(src, encoder(2, 2, {1, 0, 0, 1}), copy_decoder(2, 3)), ArgumentError);
  }

  TEST_CASE("min_rate: delta above the independent distortion gives rate 0") {
    const auto src = SourceSpec::dsbs(0.2);
    for (std::size_t v : {1, 2, 3}) {
      const auto r = min_rate(src, 0.55, v, quick());
      REQUIRE(r.feasible);
      CHECK(r.point.rate < 1e-9);
      CHECK(r.point.distortion <= 0.55 + 1e-9);
    }
  }

  TEST_CASE("min_rate: independent Z, delta = 0 needs one bit") {
    const auto src = SourceSpec::independent({0.5, 0.5}, {0.3, 0.7});
    const auto r = min_rate(src, 0.0, 3, quick());
    REQUIRE(r.feasible);
    CHECK(r.point.rate == Approx(1.0).epsilon(1e-6));
    CHECK(brute_force_min_rate(src, 0.0, 3, 0.05).rate == Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("min_rate: infeasible delta is reported with its witness") {
    const auto src = SourceSpec::dsbs(0.2);
    const auto r = min_rate(src, 0.1, 1, quick());
    CHECK_FALSE(r.feasible);
    CHECK(r.min_distortion_found == Approx(0.2).epsilon(1e-9));
    CHECK_THROWS_AS(min_rate(src, -0.1, 2), ArgumentError);
    CHECK_THROWS_AS(min_rate(src, 0.1, 0), ArgumentError);
  }

  TEST_CASE("min_rate solutions satisfy every constraint they claim") {
    const auto src = SourceSpec::dsbs(0.2);
    for (double delta : {0.02, 0.1, 0.15}) {
      const auto r = min_rate(src, delta, 3, quick(2));
      REQUIRE(r.feasible);
      REQUIRE(r.solution);
      const auto e = evaluate(*r.solution, src);
      CHECK(e.distortion <= delta + 1e-9);
      CHECK(e.realism_gap <= 1e-9);
      CHECK(e.rate == Approx(r.point.rate).epsilon(1e-12));
      const auto g = markov_check(r.solution->joint);
      CHECK(g.z_x_v <= 1e-10);
      CHECK(g.x_zv_y <= 1e-10);
      CHECK(r.inner_bound_only);
    }
  }

  TEST_CASE("min_rate matches the grid oracle on DSBS(0.2), delta = 0.1") {
    const auto src = SourceSpec::dsbs(0.2);
    const auto r = min_rate(src, 0.1, 3);
    const auto bf = brute_force_min_rate(src, 0.1, 3, 0.05);
    CHECK(std::abs(r.point.rate - bf.rate) <= 0.02);
  }

  TEST_CASE("with enough starts the optimizer is no worse than the grid") {
    const auto src = SourceSpec::dsbs(0.2);
    const auto r = min_rate(src, 0.1, 3, quick(1, 256));
    CHECK(r.point.rate <= brute_force_min_rate(src, 0.1, 3, 0.05).rate + 1e-9);
  }

  TEST_CASE("brute force oracle: monotone, nested refinement, guards") {
    const auto src = SourceSpec::dsbs(0.2);
    double prev = 2.0;
    for (double d : {0.0, 0.05, 0.1, 0.2, 0.3}) {
      const double r = brute_force_min_rate(src, d, 2, 0.05).rate;
      CHECK(r <= prev + 1e-12);
      prev = r;
    }
    for (double d : {0.05, 0.12}) {
      CHECK(brute_force_min_rate(src, d, 2, 0.05).rate <= brute_force_min_rate(src, d, 2, 0.1).rate + 1e-9);
    }
    CHECK(brute_force_min_rate(src, 0.6, 3, 0.1).rate == Approx(0.0));
    const SourceSpec tern(FinitePmf::uniform({{"X", 3}, {"Z", 2}}), SourceSpec::hamming(3));
    CHECK_THROWS_AS(brute_force_min_rate(tern, 0.1, 2, 0.1), CapacityError);
    CHECK_THROWS_AS(brute_force_min_rate(src, 0.1, 4, 0.1), CapacityError);
  }

  TEST_CASE("ed_min_rate") {
    const SourceSpec same(FinitePmf({{"X", 2}, {"Z", 2}}, {0.5, 0, 0, 0.5}), SourceSpec::hamming(2));
    const auto z_eq_x = ed_min_rate(same, 0.0, 2, quick());
    REQUIRE(z_eq_x.feasible);
    CHECK(z_eq_x.point.rate < 1e-9);

    const auto ind = SourceSpec::independent({0.5, 0.5}, {0.3, 0.7});
    for (double d : {0.05, 0.2}) {
      const auto a = ed_min_rate(ind, d, 3, quick());
      const auto b = min_rate(ind, d, 3, quick());
      CHECK(std::abs(a.point.rate - b.point.rate) <= 0.02);
      CHECK(a.point.rate <= b.point.rate + 1e-9);
      CHECK(a.point.realism_gap <= 1e-9);
      CHECK(a.point.distortion <= d + 1e-9);
    }
  }

  TEST_CASE("region_curve: envelope, constant tail, determinism") {
    const auto src = SourceSpec::dsbs(0.2);
    const std::vector<double> deltas{0.3, 0.02, 0.1, 0.05, 0.2};
    const auto curve = region_curve(src, deltas, RegionMode::D, 2, quick(4, 4));
    REQUIRE(curve.size() == deltas.size());
    for (std::size_t i = 1; i < curve.size(); ++i) {
      CHECK(curve[i].delta > curve[i - 1].delta);
      CHECK(curve[i].point.rate <= curve[i - 1].point.rate + 1e-12);
    }
    const auto flat = region_curve(src, {0.6, 0.7, 0.8}, RegionMode::D, 2, quick(4, 4));
    for (const auto& r : flat) CHECK(r.point.rate < 1e-9);

    const auto again = region_curve(src, deltas, RegionMode::D, 2, quick(4, 4));
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(again[i].point.rate == curve[i].point.rate);
  }

  TEST_CASE("results do not depend on the thread count") {
    const auto src = SourceSpec::dsbs(0.2);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = min_rate(src, 0.1, 3, quick(6, 6));
    omp_set_num_threads(4);
    const auto b = min_rate(src, 0.1, 3, quick(6, 6));
    omp_set_num_threads(saved);
    CHECK(a.point.rate == b.point.rate);
    CHECK(a.point.distortion == b.point.distortion);
  }
}
