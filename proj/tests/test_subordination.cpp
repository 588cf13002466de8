#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "oracles.hpp"
#include "whoeffding/whoeffding.hpp"

using namespace whoeffding;

namespace {

const double kE = std::numbers::e;

SubordinatorSpec one_or_two() { return SubordinatorSpec::discrete_iid({{1, 0.5}, {2, 0.5}}); }

DiscreteMeasure empirical(const ModelSpec& m, double x0, double t, int n, std::uint64_t seed) {
  std::vector<double> a, w(n, 1.0 / n);
  for (int r = 0; r < n; ++r) {
    a.push_back(simulate_path(m, State::make(x0, m.space()), t, derive_seed(seed, r)).states.back());
  }
  return DiscreteMeasure::normalized(a, w, m.space());
}

}  // namespace

TEST(SampleSubordinator, Examples) {
  for (const auto& s : {SubordinatorSpec::unit(), one_or_two(), SubordinatorSpec::poisson(3.0)}) {
    EXPECT_EQ(sample_subordinator(s, 0.0, 9), 0.0) << s.name();
  }
  EXPECT_EQ(sample_subordinator(SubordinatorSpec::unit(), 5.0, 1), 5.0);
  EXPECT_EQ(sample_subordinator(SubordinatorSpec::discrete_iid({{1, 1.0}}), 5.0, 2), 5.0);
}

TEST(SampleSubordinator, PoissonMean) {
  const auto s = SubordinatorSpec::poisson(2.0);
  const int n = 100000;
  double sum = 0.0;
  for (int r = 0; r < n; ++r) sum += sample_subordinator(s, 1.0, derive_seed(3, r));
  EXPECT_NEAR(sum / n, 2.0, 3.0 * std::sqrt(2.0 / n));
}

TEST(SampleSubordinator, NonDecreasingUnderACommonSeed) {
  for (const auto& s : {one_or_two(), SubordinatorSpec::poisson(0.7)}) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      double prev = 0.0;
      for (int t = 0; t <= 25; ++t) {
        const double v = sample_subordinator(s, t, seed);
        EXPECT_GE(v, prev);
        prev = v;
      }
    }
  }
}

TEST(SampleSubordinator, Errors) {
  EXPECT_THROW(sample_subordinator(one_or_two(), 1.5, 0), ArgumentError);
  EXPECT_THROW(sample_subordinator(SubordinatorSpec::poisson(1.0), -1.0, 0), ArgumentError);
  EXPECT_THROW(sample_subordinator(SubordinatorSpec::bernstein(BernsteinFunction::geometric_stable()), 1.0, 0),
               UnsupportedError);
}

TEST(SubordinatorSpec, Validation) {
  EXPECT_THROW(SubordinatorSpec::discrete_iid({{0, 0.5}, {1, 0.5}}), ArgumentError);
  EXPECT_THROW(SubordinatorSpec::discrete_iid({{1, 0.5}, {2, 0.4}}), ArgumentError);
  EXPECT_THROW(SubordinatorSpec::discrete_iid(std::vector<StepAtom>{}), ArgumentError);
  EXPECT_THROW(SubordinatorSpec::poisson(0.0), ArgumentError);
  EXPECT_THROW(SubordinatorSpec::poisson(INFINITY), ArgumentError);
  const auto merged = SubordinatorSpec::discrete_iid({{2, 0.25}, {1, 0.5}, {2, 0.25}});
  ASSERT_EQ(merged.steps().size(), 2u);
  EXPECT_EQ(merged.steps()[1].size, 2);
  EXPECT_DOUBLE_EQ(merged.steps()[1].prob, 0.5);
  const DiscreteMeasure law({1.0, 3.0}, {0.25, 0.75}, Space::interval(0.0, 10.0));
  EXPECT_EQ(SubordinatorSpec::discrete_iid(law).max_step(), 3);
  const DiscreteMeasure fractional({1.5}, {1.0}, Space::interval(0.0, 10.0));
  EXPECT_THROW(SubordinatorSpec::discrete_iid(fractional), ArgumentError);
}

TEST(SubordinatorLaw, MatchesEnumerationAndPoissonPmf) {
  const auto s = SubordinatorSpec::discrete_iid({{1, 0.2}, {3, 0.8}});
  for (int t = 0; t <= 6; ++t) {
    const auto want = oracle::enumerate_sums({{1, 0.2}, {3, 0.8}}, t);
    const auto law = subordinator_law(s, t);
    for (auto [k, p] : want) {
      const auto i = static_cast<std::size_t>(k - law.first);
      ASSERT_LT(i, law.p.size());
      EXPECT_NEAR(law.p[i], p, 1e-15);
    }
  }
  const auto pl = subordinator_law(SubordinatorSpec::poisson(1.7), 2.0);
  EXPECT_LT(pl.dropped_mass, 1e-14);
  for (std::size_t i = 0; i < pl.p.size(); ++i) {
    EXPECT_NEAR(pl.p[i], oracle::poisson_pmf(pl.first + static_cast<long>(i), 3.4), 1e-14);
  }
}

TEST(SubordinateModel, UnitClockIsTheIdentity) {
  const auto m = subordinate_model(ModelSpec::ar1(), SubordinatorSpec::unit());
  EXPECT_EQ(m.time_domain(), TimeDomain::Discrete);
  for (int t = 0; t <= 10; ++t) {
    const auto a = transition_law(m, 0.3, t).measure;
    const auto b = ar1_t_step_law(0.3, t);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a.atoms()[i], b.atoms()[i], 1e-15);
      EXPECT_NEAR(a.weights()[i], b.weights()[i], 1e-15);
    }
  }
}

TEST(SubordinateModel, PoissonFlowIsAPoissonMixtureOfDiracs) {
  const double lambda = 1.3, t = 2.0;
  const auto m = subordinate_model(ModelSpec::flow(1.0), SubordinatorSpec::poisson(lambda));
  EXPECT_EQ(m.time_domain(), TimeDomain::Continuous);
  const auto law = transition_law(m, 1.0, t);
  for (long n = 0; n <= 12; ++n) {
    const double at = std::exp(-static_cast<double>(n));
    double mass = 0.0;
    for (std::size_t i = 0; i < law.measure.size(); ++i) {
      if (std::fabs(law.measure.atoms()[i] - at) < 1e-13) mass += law.measure.weights()[i];
    }
    EXPECT_NEAR(mass, oracle::poisson_pmf(n, lambda * t), 1e-13) << n;
  }
}

TEST(SubordinateModel, TorusUnderRandomStepsMatchesPathEnumeration) {
  const auto m = subordinate_model(ModelSpec::torus(), one_or_two());
  for (int t = 1; t <= 6; ++t) {
    // enumerate subordinator paths, then every +-1 path of the walk
    std::map<long, double> offsets;
    for (std::uint32_t p = 0; p < (1u << t); ++p) {
      int s = 0;
      for (int i = 0; i < t; ++i) s += ((p >> i) & 1u) ? 2 : 1;
      for (std::uint32_t q = 0; q < (1u << s); ++q) {
        long pos = 0;
        for (int j = 0; j < s; ++j) pos += ((q >> j) & 1u) ? 1 : -1;
        offsets[pos] += std::ldexp(1.0, -t - s);
      }
    }
    const auto law = transition_law(m, 0.0, t).measure;
    ASSERT_EQ(law.size(), offsets.size()) << t;
    for (auto [k, p] : offsets) {
      const double at = Space::circle().canonical(static_cast<double>(k));
      bool found = false;
      for (std::size_t i = 0; i < law.size(); ++i) {
        if (Space::circle().distance(law.atoms()[i], at) < 1e-9) {
          EXPECT_NEAR(law.weights()[i], p, 1e-14);
          found = true;
        }
      }
      EXPECT_TRUE(found) << t << " " << k;
    }
  }
}

TEST(SubordinateModel, Errors) {
  EXPECT_THROW(subordinate_model(ModelSpec::ar1(), SubordinatorSpec::bernstein(BernsteinFunction::stable_power(0.5))),
               ArgumentError);
  const auto once = subordinate_model(ModelSpec::ar1(), SubordinatorSpec::unit());
  EXPECT_THROW(subordinate_model(once, SubordinatorSpec::unit()), ArgumentError);
  EXPECT_EQ(once.invariant().kind, InvariantMeasure::Kind::UniformInterval01);
  EXPECT_EQ(subordinate_model(ModelSpec::torus(), SubordinatorSpec::poisson(1.0)).name(), "torus@poisson(1)");
}

TEST(ExpectedRate, Examples) {
  const auto e1 = RateFunction::exp_decay(1.0);
  for (int t = 0; t <= 10; ++t) EXPECT_NEAR(expected_rate(SubordinatorSpec::unit(), e1, t), std::exp(-t), 1e-15);
  for (double lambda : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(expected_rate(SubordinatorSpec::poisson(lambda), e1, 1.0), std::exp(-lambda * (1.0 - std::exp(-1.0))),
                1e-15);
  }
}

TEST(ExpectedRate, PolyDecayUnderPoissonMatchesSeriesAndMonteCarlo) {
  const double alpha = 1.5, lambda = 1.0, t = 3.0;
  const auto r = RateFunction::poly_decay(alpha);
  const auto s = SubordinatorSpec::poisson(lambda);
  double series = 0.0;
  for (long n = 0; n <= 200; ++n) series += r(static_cast<double>(n)) * oracle::poisson_pmf(n, lambda * t);
  const double v = expected_rate(s, r, t);
  EXPECT_NEAR(v, series, 1e-12);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r(sample_subordinator(s, t, derive_seed(21, i)));
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n, sd = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, v, 3.0 * sd);
}

TEST(ExpectedRate, NonIncreasingInTime) {
  const SubordinatorSpec specs[] = {SubordinatorSpec::unit(), one_or_two(), SubordinatorSpec::poisson(0.5),
                                    SubordinatorSpec::poisson(2.0),
                                    SubordinatorSpec::bernstein(BernsteinFunction::geometric_stable())};
  const RateFunction rates[] = {RateFunction::exp_decay(1.0), RateFunction::exp_decay(0.1), RateFunction::poly_decay(1.5),
                                RateFunction::poly_decay(1.2)};
  for (const auto& s : specs) {
    for (const auto& r : rates) {
      if (s.kind() == SubordinatorSpec::Kind::BernsteinDescribed && r.kind() == RateFunction::Kind::PolyDecay) continue;
      double prev = 1.0 + 1e-15;
      for (int t = 0; t <= 30; ++t) {
        const double v = expected_rate(s, r, t);
        EXPECT_LE(v, prev + 1e-15) << s.name() << " " << r.name() << " " << t;
        prev = v;
      }
    }
  }
}

TEST(IntegratedRate, ContinuousPoissonClosedForm) {
  for (double lambda : {0.5, 1.0, 2.0}) {
    const auto res = integrated_rate(SubordinatorSpec::poisson(lambda), RateFunction::exp_decay(1.0), TimeDomain::Continuous);
    ASSERT_TRUE(res.converged());
    EXPECT_NEAR(res.value, kE / (lambda * (kE - 1.0)), 1e-8) << lambda;
  }
}

TEST(IntegratedRate, DiscreteGeometricSeries) {
  const auto unit = integrated_rate(SubordinatorSpec::unit(), RateFunction::exp_decay(1.0), TimeDomain::Discrete);
  ASSERT_TRUE(unit.converged());
  EXPECT_NEAR(unit.value, 1.0 / (1.0 - std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(unit.value, 1.58198, 1e-5);
  const auto s = one_or_two();
  for (double c : {0.3, 1.0, 2.0}) {
    const double q = s.step_laplace(c);
    EXPECT_NEAR(q, 0.5 * std::exp(-c) + 0.5 * std::exp(-2 * c), 1e-15);
    EXPECT_NEAR(integrated_rate(s, RateFunction::exp_decay(c), TimeDomain::Discrete).value, 1.0 / (1.0 - q), 1e-10);
  }
}

TEST(IntegratedRate, PolyDecayClosedForms) {
  // r(t) = (t/2 + 1)^-2 = 4 / (t + 2)^2, so the unit clock gives 4 (pi^2/6 - 1);
  // a Poisson(lambda) clock spends expected time 1/lambda at every count n
  const auto r = RateFunction::poly_decay(1.5);
  const double sum = 4.0 * (std::numbers::pi * std::numbers::pi / 6.0 - 1.0);
  const auto unit = integrated_rate(SubordinatorSpec::unit(), r, TimeDomain::Discrete);
  ASSERT_TRUE(unit.converged());
  EXPECT_NEAR(unit.value, sum, 1e-6);
  for (double lambda : {0.5, 2.0}) {
    const auto cont = integrated_rate(SubordinatorSpec::poisson(lambda), r, TimeDomain::Continuous);
    ASSERT_TRUE(cont.converged());
    EXPECT_NEAR(cont.value, sum / lambda, 1e-5) << lambda;
  }
}

TEST(IntegratedRate, IidStepsInContinuousTimeAreRejected) {
  EXPECT_THROW(integrated_rate(one_or_two(), RateFunction::exp_decay(1.0), TimeDomain::Continuous), ArgumentError);
}

TEST(RenewalMeasure, UnitAndRandomSteps) {
  const auto u = renewal_measure(SubordinatorSpec::unit(), 20);
  for (double v : u) EXPECT_DOUBLE_EQ(v, 1.0);
  const auto v = renewal_measure(one_or_two(), 60);
  EXPECT_NEAR(v[60], 1.0 / 1.5, 1e-12);
}

TEST(CheckR2, Examples) {
  const auto sqrt_psi = check_R2(BernsteinFunction::stable_power(0.5), 2.0);
  EXPECT_TRUE(sqrt_psi.pass);
  EXPECT_NEAR(sqrt_psi.liminf_scaling_ratio, std::sqrt(2.0), 1e-9);
  for (auto [u, r] : sqrt_psi.scaling_ratio_samples) EXPECT_NEAR(r, std::sqrt(2.0), 1e-12);
  EXPECT_GT(sqrt_psi.liminf_log_ratio, 100.0);

  const auto log_psi = check_R2(BernsteinFunction::geometric_stable(), 2.0);
  EXPECT_TRUE(log_psi.pass);
  EXPECT_NEAR(log_psi.liminf_log_ratio, 1.0, 1e-3);
  EXPECT_NEAR(log_psi.liminf_scaling_ratio, 2.0, 1e-6);

  const auto drift = check_R2(BernsteinFunction::drift_plus_levy(3.0, {}), 2.0);
  EXPECT_TRUE(drift.pass);
  EXPECT_NEAR(drift.liminf_scaling_ratio, 2.0, 1e-12);
}

TEST(CheckR2, BoundedExponentFails) {
  // a compound Poisson clock has bounded psi, so psi(u) / log u -> 0
  const auto d = check_R2(BernsteinFunction::poisson_exponent(1.0), 2.0);
  EXPECT_FALSE(d.pass);
  EXPECT_LT(d.liminf_log_ratio, 1e-6);
  EXPECT_THROW(check_R2(BernsteinFunction::geometric_stable(), 1.0), ArgumentError);
}

TEST(BernsteinFunction, NonDecreasingAndConcave) {
  const BernsteinFunction fs[] = {BernsteinFunction::stable_power(0.3), BernsteinFunction::stable_power(0.9),
                                  BernsteinFunction::geometric_stable(), BernsteinFunction::poisson_exponent(2.0),
                                  BernsteinFunction::drift_plus_levy(0.5, {{1.0, 2.0}, {0.1, 5.0}})};
  for (const auto& psi : fs) {
    double prev = psi(1e-6);
    for (double u = 2e-6; u < 1e4; u *= 1.3) {
      const double v = psi(u);
      EXPECT_GE(v, prev) << psi.name();
      const double h = 0.01 * u;
      EXPECT_LE(psi(u + h) + psi(u - h), 2.0 * v * (1.0 + 1e-12) + 1e-15) << psi.name() << " " << u;
      prev = v;
    }
  }
}

TEST(BernsteinFunction, DriftPlusLevyRepresentation) {
  const std::vector<LevyAtom> nu{{0.5, 1.5}, {2.0, 0.25}};
  const auto psi = BernsteinFunction::drift_plus_levy(0.7, nu);
  for (double u : {0.01, 0.3, 1.0, 7.0}) {
    double want = 0.7 * u;
    for (const auto& a : nu) want += (1.0 - std::exp(-u * a.location)) * a.mass;
    EXPECT_NEAR(psi(u), want, 1e-14);
  }
  // the Poisson exponent is drift 0 with nu = lambda delta_1
  const auto as_levy = BernsteinFunction::drift_plus_levy(0.0, {{1.0, 2.5}});
  for (double u : {0.1, 1.0, 4.0}) EXPECT_NEAR(as_levy(u), BernsteinFunction::poisson_exponent(2.5)(u), 1e-15);
  EXPECT_THROW(BernsteinFunction::drift_plus_levy(-1.0, {}), ArgumentError);
  EXPECT_THROW(BernsteinFunction::stable_power(1.0), ArgumentError);
}

TEST(BernsteinFunction, PoissonClockLaplaceTransform) {
  // E exp(-u S_t) = exp(-t psi(u)) for the Poisson law of S_t
  const auto s = SubordinatorSpec::poisson(1.4);
  const auto psi = *s.psi();
  for (double u : {0.2, 1.0, 3.0}) {
    const auto law = subordinator_law(s, 2.5);
    double lt = 0.0;
    for (std::size_t i = 0; i < law.p.size(); ++i) lt += law.p[i] * std::exp(-u * static_cast<double>(law.first + i));
    EXPECT_NEAR(lt, std::exp(-2.5 * psi(u)), 1e-13);
  }
}

TEST(BernsteinFunction, InverseRoundTrips) {
  const auto psi = BernsteinFunction::geometric_stable();
  for (double y : {1e-6, 0.1, 1.0, 30.0}) EXPECT_NEAR(psi(psi.inverse(y)), y, 1e-9 * std::max(1.0, y));
  EXPECT_TRUE(std::isinf(BernsteinFunction::poisson_exponent(1.0).inverse(1.5)));
}

TEST(RateIntegral, FiniteForStableAndLogExponents) {
  const auto a = check_rate_integral(BernsteinFunction::stable_power(0.5), 1.5);
  EXPECT_TRUE(a.finite);
  // psi^{-1}(1/u) = u^-2 above u = 1 and the integrand is 1 below, so the total is 1 + 1/3
  EXPECT_NEAR(a.result.value, 1.0 + 1.0 / 3.0, 1e-6);
  EXPECT_FALSE(a.note.empty());
  EXPECT_TRUE(check_rate_integral(BernsteinFunction::geometric_stable(), 1.5).finite);
}

TEST(Invariance, SubordinatedAr1KeepsDyadicCdfValues) {
  const auto m = subordinate_model(ModelSpec::ar1(), one_or_two());
  const int n = 8;
  for (int t = 1; t <= 3; ++t) {
    std::vector<DiscreteMeasure> parts;
    std::vector<double> c;
    for (int j = 0; j < n; ++j) {
      parts.push_back(transition_law(m, (j + 0.5) / n, t).measure);
      c.push_back(1.0 / n);
    }
    const auto pushed = mixture(c, parts);
    for (int j = 0; j <= n; ++j) {
      double cdf = 0.0;
      for (std::size_t i = 0; i < pushed.size(); ++i) cdf += pushed.atoms()[i] < static_cast<double>(j) / n ? pushed.weights()[i] : 0.0;
      EXPECT_NEAR(cdf, static_cast<double>(j) / n, 1e-14) << t << " " << j;
    }
  }
}

TEST(Invariance, SubordinatedTorusKeepsTheUniformGrid) {
  const auto m = subordinate_model(ModelSpec::torus(), one_or_two());
  const int n = 90;
  std::vector<double> g(n), gw(n, 1.0 / n);
  for (int j = 0; j < n; ++j) g[j] = kTwoPi * j / n;
  const double base = w1_vs_uniform(DiscreteMeasure::normalized(g, gw, Space::circle()), {Space::circle()});
  for (int t = 1; t <= 3; ++t) {
    std::vector<DiscreteMeasure> parts;
    std::vector<double> c;
    for (int j = 0; j < n; ++j) {
      parts.push_back(transition_law(m, g[j], t).measure);
      c.push_back(1.0 / n);
    }
    const auto pushed = mixture(c, parts);
    EXPECT_LE(w1_vs_uniform(pushed, {Space::circle()}), base + 1e-12);
    for (int k = 1; k <= 3; ++k) {
      EXPECT_NEAR(pushed.expectation([k](double y) { return std::cos(k * y); }), 0.0, 1e-12);
    }
  }
}

TEST(MixtureIdentity, EmpiricalLawsMatchExactMixtures) {
  const int n = 100000;
  const struct {
    ModelSpec m;
    double x0, t;
  } cases[] = {{subordinate_model(ModelSpec::torus(), one_or_two()), 0.5, 4.0},
               {subordinate_model(ModelSpec::ar1(), SubordinatorSpec::poisson(1.0)), 0.0, 1.0},
               {subordinate_model(ModelSpec::ar1(), one_or_two()), 1.0, 5.0}};
  for (const auto& c : cases) {
    const auto exact = transition_law(c.m, c.x0, c.t).measure;
    const auto emp = empirical(c.m, c.x0, c.t, n, 33);
    EXPECT_LE(w1(exact, emp), 3.0 / std::sqrt(n) * c.m.space().diameter()) << c.m.name();
  }
}

TEST(NonIrreducibility, SubordinatedAr1FromDyadicStartStaysDyadic) {
  const auto m = subordinate_model(ModelSpec::ar1(), one_or_two());
  for (int t = 0; t <= 6; ++t) {
    const auto law = transition_law(m, 0.25, t).measure;
    for (double a : law.atoms()) {
      const double scaled = std::ldexp(a, 2 + 2 * t);
      EXPECT_EQ(scaled, std::floor(scaled)) << t << " " << a;
    }
  }
}
