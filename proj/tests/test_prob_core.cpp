#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rdp/errors.hpp"
#include "rdp/pmf_json.hpp"
#include "rdp/prob_core.hpp"
#include "rdp/region_solver.hpp"
#include "rdp/rng.hpp"

using namespace rdp;
using doctest::Approx;

namespace {

FinitePmf bern(double p, const std::string& name = "A") { return FinitePmf({{name, 2}}, {1 - p, p}); }

Channel bsc(double c, const std::string& in = "A", const std::string& out = "B") {
  return Channel({{in, 2}}, {{out, 2}}, {1 - c, c, c, 1 - c});
}

}  // namespace

TEST_SUITE("prob_core") {
  TEST_CASE("construction validates normalization and shape") {
    CHECK_THROWS_AS(FinitePmf({{"A", 2}}, {0.5, 0.6}), ArgumentError);
    CHECK_THROWS_AS(FinitePmf({{"A", 2}}, {0.5}), ArgumentError);
    CHECK_THROWS_AS(FinitePmf({{"A", 2}}, {-0.1, 1.1}), ArgumentError);
    CHECK_THROWS_AS(FinitePmf({{"A", 2}, {"A", 2}}, {0.25, 0.25, 0.25, 0.25}), ArgumentError);
    CHECK_THROWS_AS(Channel({{"A", 2}}, {{"B", 2}}, {0.5, 0.5, 0.9, 0.2}), ArgumentError);
    const FinitePmf p({{"A", 2}}, {0.5 + 4e-10, 0.5});
    CHECK(p[0] + p[1] == Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("support guard") {
    CHECK_THROWS_AS(support_size({{"A", 1 << 12}, {"B", 1 << 13}}), CapacityError);
    CHECK_THROWS_AS(product_power(FinitePmf::uniform({{"A", 2}}), 25), CapacityError);
  }

  TEST_CASE("marginalize examples") {
    const auto u = FinitePmf::uniform({{"A", 2}, {"B", 2}});
    const auto ua = marginalize(u, {"A"});
    CHECK(ua[0] == Approx(0.5));
    CHECK(ua[1] == Approx(0.5));
    const auto pm = FinitePmf::point_mass({{"A", 2}, {"B", 2}}, {1, 0});
    const auto pb = marginalize(pm, {"B"});
    CHECK(pb[0] == 1.0);
    CHECK(pb[1] == 0.0);
    const auto ds = marginalize(SourceSpec::dsbs(0.2).pxz(), {"X"});
    CHECK(ds[0] == Approx(0.5));
    CHECK_THROWS_AS(marginalize(u, {"C"}), ArgumentError);
  }

  TEST_CASE("condition examples") {
    const auto q = FinitePmf({{"B", 3}}, {0.2, 0.3, 0.5});
    const auto ch = condition(product(bern(0.3), q), {"A"});
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 3; ++b) CHECK(ch.at(a, b) == Approx(q[b]).epsilon(1e-14));

    const auto pm = condition(FinitePmf::point_mass({{"A", 2}, {"B", 2}}, {1, 1}), {"A"});
    CHECK(pm.at(1, 1) == 1.0);
    CHECK(pm.at(0, 0) == 0.5);
    CHECK(pm.at(0, 1) == 0.5);

    const double qf = 0.2;
    const auto ds = condition(SourceSpec::dsbs(qf).pxz(), {"X"});
    CHECK(ds.at(0, 1) == Approx(qf).epsilon(1e-14));
    CHECK(ds.at(1, 0) == Approx(qf).epsilon(1e-14));
    CHECK(ds.at(0, 0) == Approx(1 - qf).epsilon(1e-14));
  }

  TEST_CASE("compose examples") {
    const FinitePmf p({{"A", 3}}, {0.2, 0.3, 0.5});
    const auto diag = compose(p, Channel::identity({"A", 3}, "B"));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(diag[i * 3 + j] == (i == j ? p[i] : 0.0));

    const auto j = compose(bern(0.5), bsc(0.1));
    CHECK(j[1] + j[2] == Approx(0.1).epsilon(1e-14));
    CHECK(j.axis_names() == AxisNames{"A", "B"});

    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      const auto src = oracle::random_pmf(rng, {{"A", 3}, {"B", 2}});
      const Channel ch({{"B", 2}, {"A", 3}}, {{"C", 4}}, oracle::random_rows(rng, 6, 4, 0.3));
      const auto back = marginalize(compose(src, ch), {"A", "B"});
      CHECK(oracle::half_l1(oracle::to_vec(back), oracle::to_vec(src)) < 1e-15);
    }
    CHECK_THROWS_AS(compose(bern(0.5), bsc(0.1, "A", "A")), ArgumentError);
    CHECK_THROWS_AS(compose(FinitePmf::uniform({{"A", 3}}), bsc(0.1)), ArgumentError);
  }

  TEST_CASE("compose uses input axes by name, not position") {
    Rng rng(4);
    const auto src = oracle::random_pmf(rng, {{"A", 2}, {"B", 3}});
    const auto rows = oracle::random_rows(rng, 6, 2);
    const Channel ch({{"B", 3}, {"A", 2}}, {{"C", 2}}, rows);
    const auto j = compose(src, ch);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t c = 0; c < 2; ++c)
          CHECK(j.at({a, b, c}) == Approx(src.at({a, b}) * rows[(b * 2 + a) * 2 + c]).epsilon(1e-14));
  }

  TEST_CASE("product_power examples") {
    const auto u = product_power(bern(0.5), 3);
    CHECK(u.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(u[i] == Approx(0.125));
    const auto pm = product_power(FinitePmf::point_mass({{"A", 3}}, {2}), 4);
    CHECK(pm.at({2, 2, 2, 2}) == 1.0);
    const auto b = product_power(bern(0.25), 2);
    CHECK(b[0] == Approx(0.5625));
    CHECK(b[1] == Approx(0.1875));
    CHECK(b[2] == Approx(0.1875));
    CHECK(b[3] == Approx(0.0625));
    CHECK(b.axes()[1].name == block_axis_name("A", 1));
  }

  TEST_CASE("total_variation examples") {
    const auto p = bern(0.3);
    CHECK(total_variation(p, p) == 0.0);
    CHECK(total_variation(bern(0.0), bern(1.0)) == 1.0);
    CHECK(total_variation(bern(0.5), bern(0.25)) == Approx(0.25));
    CHECK_THROWS_AS(total_variation(bern(0.5), bern(0.5, "B")), ArgumentError);
  }

  TEST_CASE("maximal coupling examples") {
    const auto p = FinitePmf({{"A", 3}}, {0.2, 0.3, 0.5});
    const auto same = maximal_coupling(p, p);
    CHECK(mismatch_probability(same) == 0.0);
    const auto k = coupling_to_channel(same);
    for (std::size_t i = 0; i < 3; ++i) CHECK(k.at(i, i) == 1.0);

    CHECK(mismatch_probability(maximal_coupling(bern(0.0), bern(1.0))) == Approx(1.0));

    const auto c = maximal_coupling(bern(0.5), bern(0.25));
    CHECK(mismatch_probability(c) == Approx(0.25).epsilon(1e-14));
    // brute force over the one-parameter family of 2x2 couplings: P(a=0,b=1) = t
    double best = 1.0;
    for (int i = 0; i <= 100000; ++i) {
      const double t = 0.5 * i / 100000.0;
      const double p00 = 0.5 - t, p10 = 0.75 - p00, p11 = 0.5 - p10;
      if (p10 < -1e-15 || p11 < -1e-15) continue;
      best = std::min(best, t + p10);
    }
    CHECK(mismatch_probability(c) == Approx(best).epsilon(1e-9));

    const auto kc = coupling_to_channel(c);
    const auto out = push_forward(bern(0.5), kc);
    CHECK(std::abs(out[1] - 0.25) < 1e-12);
  }

  TEST_CASE("independent coupling gives the constant channel") {
    const auto p = FinitePmf({{"A", 3}}, {0.2, 0.3, 0.5});
    const auto q = FinitePmf({{"A'", 3}}, {0.6, 0.1, 0.3});
    const Coupling c{p, q, product(p, q)};
    const auto k = coupling_to_channel(c);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(k.at(i, j) == Approx(q[j]).epsilon(1e-14));
  }

  TEST_CASE("maximal coupling properties") {
    Rng rng(11);
    for (int t = 0; t < 300; ++t) {
      const std::size_t n = 2 + rng.below(6);
      const auto p = oracle::random_pmf(rng, {{"A", n}}, 0.3);
      const auto q = oracle::random_pmf(rng, {{"A", n}}, 0.3);
      const auto c = maximal_coupling(p, q);
      const double tv = oracle::half_l1(oracle::to_vec(p), oracle::to_vec(q));
      CHECK(std::abs(mismatch_probability(c) - tv) < 1e-12);
      const auto left = marginalize(c.joint, {"A"});
      const auto right = marginalize(c.joint, {"A'"});
      CHECK(oracle::half_l1(oracle::to_vec(left), oracle::to_vec(p)) < 1e-12);
      CHECK(oracle::half_l1(oracle::to_vec(right), oracle::to_vec(q)) < 1e-12);
      const auto out = push_forward(p, coupling_to_channel(c));
      CHECK(oracle::half_l1(oracle::to_vec(out), oracle::to_vec(q)) < 1e-12);
    }
  }

  TEST_CASE("TV lemmas hold on random instances") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
      const std::size_t nw = 2 + rng.below(4), nl = 2 + rng.below(4);
      const auto pi = oracle::random_pmf(rng, {{"W", nw}, {"L", nl}}, 0.2);
      const auto ga = oracle::random_pmf(rng, {{"W", nw}, {"L", nl}}, 0.2);
      // marginal contraction
      CHECK(total_variation(marginalize(pi, {"W"}), marginalize(ga, {"W"})) <= total_variation(pi, ga) + 1e-12);
      // shared channel
      const Channel k({{"W", nw}}, {{"L", nl}}, oracle::random_rows(rng, nw, nl, 0.2));
      const auto pw = marginalize(pi, {"W"}), gw = marginalize(ga, {"W"});
      CHECK(std::abs(total_variation(compose(pw, k), compose(gw, k)) - total_variation(pw, gw)) < 1e-12);
      // expectation of row-wise TV
      const Channel k2({{"W", nw}}, {{"L", nl}}, oracle::random_rows(rng, nw, nl, 0.2));
      double e = 0.0;
      for (std::size_t w = 0; w < nw; ++w) {
        std::vector<double> r1(k.row(w).begin(), k.row(w).end()), r2(k2.row(w).begin(), k2.row(w).end());
        e += pw[w] * oracle::half_l1(r1, r2);
      }
      CHECK(std::abs(total_variation(compose(pw, k), compose(pw, k2)) - e) < 1e-12);
    }
  }

  TEST_CASE("json round trip") {
    Rng rng(5);
    const auto p = oracle::random_pmf(rng, {{"X", 2}, {"Z", 3}});
    const auto back = pmf_from_json(to_json(p));
    CHECK(back.axes() == p.axes());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(back[i] == Approx(p[i]).epsilon(1e-15));
    const Channel ch({{"X", 2}}, {{"Y", 3}}, oracle::random_rows(rng, 2, 3));
    const auto cb = channel_from_json(to_json(ch));
    CHECK(cb.inputs() == ch.inputs());
    CHECK(cb.outputs() == ch.outputs());
    for (std::size_t i = 0; i < 6; ++i) CHECK(cb.probs()[i] == Approx(ch.probs()[i]).epsilon(1e-15));
    CHECK_THROWS_AS(pmf_from_json(nlohmann::json::parse(R"({"axes":[{"name":"A"}],"probs":[1]})")), ArgumentError);
    CHECK_THROWS_AS(pmf_from_json(nlohmann::json::parse(R"({"axes":[{"name":"A","size":2}],"probs":[0.2]})")),
                    ArgumentError);
  }

  TEST_CASE("derive_seed separates purposes and indices") {
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
    CHECK(derive_seed(7, "x", 3) == derive_seed(7, "x", 3));
    Rng a(9), b(9);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  }

  TEST_CASE("Rng draws have the requested laws") {
    Rng rng(17);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    std::vector<double> w{0.1, 0.6, 0.3};
    std::vector<int> cnt(3, 0);
    for (int i = 0; i < n; ++i) cnt[rng.categorical(w)]++;
    for (int k = 0; k < 3; ++k) CHECK(std::abs(cnt[k] / double(n) - w[k]) < 5 * std::sqrt(w[k] * (1 - w[k]) / n));
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
  }
}
