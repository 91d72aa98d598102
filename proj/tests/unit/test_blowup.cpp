#include <doctest.h>

#include "toda/blowup.hpp"
#include "toda/errors.hpp"
#include "toda/solver.hpp"

using namespace toda;

namespace {

FieldPair normalized(const FieldPair &s) {
  ScalarField one(s.grid(), 1.0);
  return normalize(s, one, one);
}

} // namespace

TEST_CASE("detect_peaks") {
  TorusGrid g(64);
  ScalarField zero(g);
  auto flat = detect_peaks(zero, 1);
  REQUIRE(flat.size() == 1);
  CHECK(flat[0].height == 0.0);
  CHECK(flat[0].scale == 1.0);

  // off-grid bubble centre
  TorusGrid g128(128);
  ScalarField one(g128, 1.0);
  const double eps = 0.05;
  FieldPair s = normalized(FieldPair(bubble_profile(g128, {0.3, 0.7}, eps), ScalarField(g128)));
  auto p = detect_peaks(s.u1, 1);
  REQUIRE(p.size() == 1);
  CHECK(torus_dist(p[0].location, {0.3, 0.7}) <= 1.0 / 128);
  // the normalized construction peaks at -2 log eps^2 - log I
  const double expected = -2.0 * std::log(eps * eps) - exp_integral(bubble_profile(g128, {0.3, 0.7}, eps), one).log_value();
  CHECK(std::abs(p[0].height - expected) < 0.05);
  CHECK(p[0].scale == std::exp(-p[0].height / 2.0));

  FieldPair two = normalized(toda_bubble_pair(g128, {0.25, 0.3}, {0.7, 0.8}, 0.03));
  auto q = detect_peaks(two);
  REQUIRE(q.size() == 2);
  CHECK(q[0].component == 1);
  CHECK(q[1].component == 2);
  CHECK(torus_dist(q[0].location, {0.25, 0.3}) < 1e-3);
  CHECK(torus_dist(q[1].location, {0.7, 0.8}) < 1e-3);
}

TEST_CASE("pohozaev_residual") {
  CHECK(pohozaev_residual(1, 0) == 0.0);
  CHECK(pohozaev_residual(1, 2) == 0.0);
  CHECK(pohozaev_residual(1, 1) == -1.0);
  CHECK(pohozaev_residual(0, 0) == 0.0);
}

TEST_CASE("ball_masses") {
  TorusGrid g(64);
  ScalarField one(g, 1.0), zero(g);
  FieldPair z(zero, zero);
  auto peaks = detect_peaks(z);
  auto bm = ball_masses(z, one, one, peaks, 0.1);
  REQUIRE(bm.sites.size() == 1);
  CHECK(std::abs(bm.sites[0].sigma1 - M_PI * 0.01) < 2e-3);
  CHECK(std::abs(bm.sites[0].sigma1 + bm.remainder1 - 1.0) < 1e-8);
  CHECK_THROWS_AS(ball_masses(z, one, one, peaks, 0.05), InvalidArgument);

  // sharp bubble in component 1
  TorusGrid g256(256);
  ScalarField one256(g256, 1.0);
  FieldPair s = normalized(FieldPair(bubble_profile(g256, {0.5, 0.5}, 0.01), ScalarField(g256)));
  auto pk = detect_peaks(s.u1, 1);
  auto m = ball_masses(s, one256, one256, pk, 0.1);
  REQUIRE(m.sites.size() == 1);
  CHECK(std::abs(m.sites[0].sigma1 - 1.0) < 0.05);
  CHECK(std::abs(m.sites[0].sigma2 - M_PI * 0.01) < 2e-3);
  CHECK(m.remainder1 <= 0.05);
  for (const auto &site : m.sites) {
    CHECK(site.gamma1 == 8 * M_PI * site.sigma1 - 4 * M_PI * site.sigma2);
    CHECK(site.gamma2 == 8 * M_PI * site.sigma2 - 4 * M_PI * site.sigma1);
  }
  CHECK(std::abs(m.sites[0].sigma2 + m.remainder2 - 1.0) < 1e-8);

  // overlapping balls
  FieldPair two = normalized(toda_bubble_pair(g, {0.25, 0.25}, {0.25, 0.4}, 0.05));
  CHECK_THROWS_AS(ball_masses(two, one, one, detect_peaks(two), 0.1), BallOverlap);
}

TEST_CASE("Case-3 family sharpens toward the admissible masses") {
  TorusGrid g(128);
  ScalarField one(g, 1.0);
  double prev = 1e9;
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    FieldPair s = normalized(toda_bubble_pair(g, {0.25, 0.25}, {0.75, 0.7}, eps));
    auto bm = ball_masses(s, one, one, detect_peaks(s), 0.1);
    REQUIRE(bm.sites.size() == 2);
    double worst = 0.0;
    for (const auto &site : bm.sites) {
      worst = std::max(worst, std::abs(site.pohozaev));
      // gamma threshold consistency
      if (std::abs(site.gamma1) >= 4 * M_PI || std::abs(site.gamma2) >= 4 * M_PI)
        CHECK(std::max(site.sigma1, site.sigma2) >= 0.9 * 0.25);
      double total = 0.0;
      for (const auto &t : bm.sites)
        total += t.sigma1;
      CHECK(total <= 1.0 + 1e-8);
    }
    CHECK(worst < prev);
    prev = worst;
    if (eps == 0.0125) {
      CHECK(std::abs(bm.sites[0].sigma1 - 1.0) < 0.01);
      CHECK(std::abs(bm.sites[0].sigma2) < 0.01);
      CHECK(std::abs(bm.sites[1].sigma2 - 1.0) < 0.01);
    }
  }
}

TEST_CASE("bubble_fit") {
  TorusGrid g(256);
  ScalarField one(g, 1.0);
  for (double eps : {0.01, 0.02, 0.025}) {
    FieldPair s = normalized(FieldPair(bubble_profile(g, {0.4, 0.55}, eps), ScalarField(g)));
    auto pk = detect_peaks(s.u1, 1);
    REQUIRE(pk.size() == 1);
    CHECK(bubble_fit(s, pk[0], one) <= 0.05);
    CHECK(bubble_fit(s, pk[0], one, 10.0, 2 * M_PI) >= 0.3);
  }
  // zero field: the deviation is the model term itself
  TorusGrid g64(64);
  ScalarField zero(g64), one64(g64, 1.0);
  FieldPair z(zero, zero);
  Peak p = detect_peaks(zero, 1)[0];
  double model = 0.0;
  for (std::size_t k = 0; k < g64.size(); ++k) {
    const double r2 = torus_dist2(g64.node(k), p.location);
    if (r2 <= 0.25 * 0.25)
      model = std::max(model, 2.0 * std::log(1.0 + M_PI * r2));
  }
  CHECK(std::abs(bubble_fit(z, p, one64, 0.25) - model) < 1e-14);
  CHECK_THROWS_AS(bubble_fit(z, p, one64, 10.0), InvalidArgument);
  CHECK_THROWS_AS(bubble_fit(z, p, ScalarField(g64, -1.0), 0.25), NegativeHeightDensity);
}

TEST_CASE("improved Moser-Trudinger probe") {
  TorusGrid g(64);
  const double ep = 1.0 / 3.0;
  const double c = calibrated_mt_constant(ep);
  CHECK(c >= 0.0);
  auto z = improved_mt_probe(FieldPair(ScalarField(g), ScalarField(g)), ep);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == c);
  CHECK_FALSE(z.hypothesis_violated);
  CHECK(z.satisfied);

  // out-of-corpus two-site states stay within 0.1 of the calibrated constant
  for (const auto &spec : two_site_corpus(977, 16)) {
    auto p = improved_mt_probe(two_site_state(g, spec), ep);
    CHECK_FALSE(p.hypothesis_violated);
    CHECK(p.excess <= c + 0.1);
    CHECK(p.satisfied);
    CHECK(p.rhs - p.lhs > 0.0);
  }
  TorusGrid g128(128);
  for (auto spec : two_site_corpus(978, 6)) {
    spec.eps1 *= 0.5;
    spec.eps2 *= 0.5;
    CHECK(improved_mt_probe(two_site_state(g128, spec), ep).excess <= c + 0.1);
  }
  // a single sharp bubble violates the hypothesis
  FieldPair single = normalized(FieldPair(bubble_profile(g128, {0.3, 0.3}, 0.02), bubble_profile(g128, {0.3, 0.3}, 0.02)));
  auto sp = improved_mt_probe(single, ep);
  CHECK(sp.hypothesis_violated);
  CHECK_FALSE(sp.satisfied);
}

TEST_CASE("blow-up indicators on the bubble family") {
  TorusGrid g(128);
  ScalarField one(g, 1.0);
  Indicators prev{};
  bool first = true;
  for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
    FieldPair s = normalized(toda_bubble_pair(g, {0.25, 0.25}, {0.75, 0.7}, eps));
    Indicators i = blowup_indicators(make_record(s, one, one, 0.01));
    if (eps == 0.05) {
      CHECK(std::abs(i.max_sum - 2.0 * std::log(1.0 / (eps * eps))) < 0.5);
      CHECK(i.mean_sum < -5.0);
    }
    if (!first) {
      CHECK(i.max_sum > prev.max_sum);
      CHECK(i.energy > prev.energy);
      CHECK(i.mean_sum < prev.mean_sum);
    }
    prev = i;
    first = false;
  }
}

TEST_CASE("classify_case on constructed families") {
  TorusGrid g(64);
  ScalarField one(g, 1.0);
  std::vector<ContinuationRecord> both, only1;
  for (int k = 0; k < 16; ++k) {
    const double eps = 0.05 * std::ldexp(1.0, -k);
    FieldPair s = normalized(toda_bubble_pair(g, {0.25, 0.25}, {0.75, 0.75}, eps));
    both.push_back(make_record(s, one, one, 0.01));
    FieldPair t = normalized(FieldPair(bubble_profile(g, {0.25, 0.25}, eps), ScalarField(g)));
    only1.push_back(make_record(t, one, one, 0.01));
  }
  auto v3 = classify_case(both);
  CHECK(v3.blew_up);
  CHECK(v3.which == BlowupCase::Case3);
  auto v1 = classify_case(only1);
  CHECK(v1.blew_up);
  CHECK(v1.which == BlowupCase::Case1);
  // swapping the components gives Case 2
  for (auto &r : only1) {
    std::swap(r.mean1, r.mean2);
    std::swap(r.max1, r.max2);
  }
  CHECK(classify_case(only1).which == BlowupCase::Case2);
  // oscillating tails are inconclusive
  std::vector<ContinuationRecord> osc = both;
  for (std::size_t k = 0; k < osc.size(); ++k)
    osc[k].mean2 = (k % 2 == 0) ? -1.0 : -3.0;
  CHECK_THROWS_AS(classify_case(osc), Inconclusive);
}
