#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "whoeffding/whoeffding.hpp"

using namespace whoeffding;
using std::numbers::pi;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

bool is_dyadic(double v, int level) {
  const double scaled = std::ldexp(v, level);
  return scaled == std::floor(scaled);
}

}  // namespace

TEST(FlowState, Examples) {
  for (double a : {1.0, 1.2, 1.9}) EXPECT_EQ(flow_state(1.0, 0.0, a), 1.0);
  EXPECT_NEAR(flow_state(1.0, 1.0, 1.0), 0.36787944117144233, 1e-16);
  EXPECT_NEAR(flow_state(1.0, 2.0, 1.5), 0.25, 1e-15);
  EXPECT_NEAR(flow_state(1.0, 2.0, 1.5), oracle::flow_rk4(1.0, 2.0, 1.5), 1e-10);
  EXPECT_THROW(flow_state(0.5, 1.0, 2.0), ArgumentError);
  EXPECT_THROW(flow_state(0.5, 1.0, 0.9), ArgumentError);
}

TEST(FlowState, MatchesRk4AndKeepsSignAndShrinks) {
  for (double a : {1.0, 1.25, 1.5, 1.75}) {
    for (double x : {-1.0, -0.4, 0.3, 0.95}) {
      for (double t : {0.3, 1.0, 4.0}) {
        const double v = flow_state(x, t, a);
        EXPECT_NEAR(v, oracle::flow_rk4(x, t, a), 1e-9);
        EXPECT_EQ(std::signbit(v), std::signbit(x));
        EXPECT_LE(std::fabs(v), std::fabs(x));
      }
    }
  }
  EXPECT_EQ(flow_state(0.0, 5.0, 1.5), 0.0);
}

TEST(Ar1Law, Examples) {
  const auto d = ar1_t_step_law(0.3, 0);
  EXPECT_EQ(vec(d.atoms()), std::vector<double>{0.3});
  const auto one = ar1_t_step_law(0.0, 1);
  EXPECT_EQ(vec(one.atoms()), (std::vector<double>{0.0, 0.5}));
  EXPECT_EQ(vec(one.weights()), (std::vector<double>{0.5, 0.5}));
  const auto two = ar1_t_step_law(1.0, 2);
  EXPECT_EQ(vec(two.atoms()), (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
  for (double w : two.weights()) EXPECT_EQ(w, 0.25);
  EXPECT_THROW(ar1_t_step_law(0.0, 25), ArgumentError);
}

TEST(Ar1Law, MatchesPathEnumeration) {
  for (double x : {0.0, 0.3, 1.0}) {
    for (int t = 1; t <= 10; ++t) {
      // sums over t+1 states include X_t in the last slot; reuse the walker directly
      std::vector<double> ends;
      for (std::uint32_t p = 0; p < (1u << t); ++p) {
        double y = x;
        for (int u = 0; u < t; ++u) y = 0.5 * y + (((p >> u) & 1u) ? 0.5 : 0.0);
        ends.push_back(y);
      }
      std::sort(ends.begin(), ends.end());
      const auto law = ar1_t_step_law(x, t);
      ASSERT_EQ(law.size(), ends.size());
      for (std::size_t i = 0; i < ends.size(); ++i) EXPECT_NEAR(law.atoms()[i], ends[i], 1e-15);
    }
  }
}

TEST(TorusLaw, Examples) {
  const auto one = torus_t_step_law(0.0, 1);
  ASSERT_EQ(one.size(), 2u);
  EXPECT_NEAR(one.atoms()[0], 1.0, 1e-15);
  EXPECT_NEAR(one.atoms()[1], kTwoPi - 1.0, 1e-15);
  const auto two = torus_t_step_law(0.0, 2);
  ASSERT_EQ(two.size(), 3u);
  EXPECT_EQ(two.atoms()[0], 0.0);
  EXPECT_DOUBLE_EQ(two.weights()[0], 0.5);
  EXPECT_NEAR(two.atoms()[1], 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(two.weights()[1], 0.25);
  EXPECT_NEAR(two.atoms()[2], kTwoPi - 2.0, 1e-15);
  const auto zero = torus_t_step_law(2.5, 0);
  EXPECT_EQ(vec(zero.atoms()), std::vector<double>{2.5});
  EXPECT_THROW(torus_t_step_law(0.0, 31), ArgumentError);
}

TEST(TorusLaw, IsBinomial) {
  for (int t : {5, 13, 30}) {
    const auto law = torus_t_step_law(1.0, t);
    EXPECT_EQ(law.size(), static_cast<std::size_t>(t + 1));
    for (int k = 0; k <= t; ++k) {
      const double at = Space::circle().canonical(1.0 + 2 * k - t);
      const double want = std::exp(std::lgamma(t + 1.0) - std::lgamma(k + 1.0) - std::lgamma(t - k + 1.0) - t * std::log(2.0));
      bool found = false;
      for (std::size_t i = 0; i < law.size(); ++i) {
        if (std::fabs(law.atoms()[i] - at) < 1e-9) {
          EXPECT_NEAR(law.weights()[i], want, 1e-14);
          found = true;
        }
      }
      EXPECT_TRUE(found) << t << " " << k;
    }
  }
}

TEST(ExactWToInvariant, Examples) {
  EXPECT_NEAR(exact_w_to_invariant(ModelSpec::flow(1.0), 1.0, 1.0), std::exp(-1.0), 1e-16);
  EXPECT_NEAR(exact_w_to_invariant(ModelSpec::ar1(), 0.0, 1.0), 0.25, 1e-15);
  EXPECT_NEAR(exact_w_to_invariant(ModelSpec::torus(), 0.0, 0.0), pi / 2, 1e-12);
  EXPECT_THROW(exact_w_to_invariant(ModelSpec::ar1(), 0.0, 30.0), ArgumentError);
}

TEST(ExactWToInvariant, Ar1ClosedForm) {
  // the t-step law is a uniform grid of spacing h = 2^-t offset by x h, so its
  // distance to Leb is h (x^2 + (1 - x)^2) / 2
  for (double x : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    for (int t = 0; t <= 16; ++t) {
      const double h = std::ldexp(1.0, -t);
      EXPECT_NEAR(exact_w_to_invariant(ModelSpec::ar1(), x, t), h * (x * x + (1 - x) * (1 - x)) / 2, 1e-13);
    }
  }
}

TEST(ExactWToInvariant, MonotoneInTime) {
  const ModelSpec models[] = {ModelSpec::flow(1.0), ModelSpec::flow(1.5), ModelSpec::ar1(), ModelSpec::torus()};
  for (const auto& m : models) {
    const double x = m.space().is_circle() ? 0.0 : (m.kind() == ModelSpec::Kind::Flow ? 0.8 : 0.3);
    double prev = std::numeric_limits<double>::infinity();
    for (int t = 0; t <= 20; ++t) {
      const double w = exact_w_to_invariant(m, x, t);
      EXPECT_LE(w, prev + 1e-12) << m.name() << " t=" << t;
      prev = w;
    }
  }
}

TEST(ExactWToInvariant, TorusStaysBoundedAwayFromZero) {
  // the law is a finite atom set which stays at positive distance from the
  // uniform law; this is why integrating over t diverges
  double total = 0.0;
  for (int t = 0; t <= 30; ++t) {
    const double w = exact_w_to_invariant(ModelSpec::torus(), 0.0, t);
    EXPECT_GT(w, 0.0) << t;
    total += w;
  }
  EXPECT_GT(total, 3.0);
}

TEST(OneStepContraction, Ar1) {
  const auto m = ModelSpec::ar1();
  const double v = one_step_contraction(m, 0.0, 1.0);
  EXPECT_NEAR(v, 0.5, 1e-15);
  EXPECT_NEAR(v, w1_oracle_lp(ar1_t_step_law(0.0, 1), ar1_t_step_law(1.0, 1)), 1e-15);
  EXPECT_EQ(one_step_contraction(m, 0.4, 0.4), 0.0);
}

TEST(OneStepContraction, TorusIsAnIsometry) {
  // a step of +-1 from x and from y = x + 0.2 gives two rotated copies of the
  // same two-atom law; the LP oracle confirms nothing beats moving each atom 0.2
  const auto m = ModelSpec::torus();
  const double v = one_step_contraction(m, 0.0, 0.2);
  const double lp = w1_oracle_lp(torus_t_step_law(0.0, 1), torus_t_step_law(0.2, 1));
  EXPECT_NEAR(v, lp, 1e-12);
  EXPECT_NEAR(v, 0.2, 1e-12);
}

TEST(OneStepContraction, RejectsContinuousTime) {
  EXPECT_THROW(one_step_contraction(ModelSpec::flow(1.0), 0.1, 0.2), UnsupportedError);
}

TEST(Contraction, Ar1GeometricRateOnGrid) {
  const auto m = ModelSpec::ar1();
  for (int t = 0; t <= 10; ++t) {
    for (double x = 0.0; x <= 1.0; x += 0.125) {
      for (double y = 0.0; y <= 1.0; y += 0.2) {
        EXPECT_NEAR(transition_distance(m, x, y, t), std::ldexp(std::fabs(x - y), -t), 1e-12);
      }
    }
  }
}

TEST(Contraction, TorusIsNonExpansiveButNotGeometric) {
  // P^t(x + d, .) is P^t(x, .) rotated by d, so W <= d; for short rotations
  // nothing cheaper exists and the distance never shrinks at rate 2^-t
  const auto m = ModelSpec::torus();
  for (int t = 0; t <= 10; ++t) {
    for (double x : {0.0, 1.0, 4.0}) {
      for (double d : {0.05, 0.2}) EXPECT_NEAR(transition_distance(m, x, x + d, t), d, 1e-9) << t;
      for (double d : {0.3, 1.1, 2.5}) {
        const double w = transition_distance(m, x, x + d, t);
        EXPECT_LE(w, d + 1e-12);
        if (t >= 4) EXPECT_GT(w, 2.0 * std::ldexp(d, -t)) << t << " " << d;
      }
    }
  }
}

TEST(Invariance, GridsMapToGrids) {
  // one ar1 step maps the N-point grid (j + 1/2)/N onto the 2N-point grid of the same form
  for (int k = 0; k <= 8; ++k) {
    const int n = 1 << k;
    std::vector<DiscreteMeasure> parts;
    std::vector<double> c;
    for (int j = 0; j < n; ++j) {
      parts.push_back(ar1_t_step_law((j + 0.5) / n, 1));
      c.push_back(1.0 / n);
    }
    const auto pushed = mixture(c, parts);
    ASSERT_EQ(pushed.size(), 2u * n);
    for (std::size_t i = 0; i < pushed.size(); ++i) {
      EXPECT_NEAR(pushed.atoms()[i], (i + 0.5) / (2.0 * n), 1e-15);
      EXPECT_NEAR(pushed.weights()[i], 0.5 / n, 1e-15);
    }
  }
  // torus: each step direction rotates the equally spaced grid into another
  // equally spaced grid, so the pushed law is no farther from uniform
  const int n = 360;
  std::vector<double> g(n), gw(n, 1.0 / n);
  for (int j = 0; j < n; ++j) g[j] = kTwoPi * j / n;
  const auto grid = DiscreteMeasure::normalized(g, gw, Space::circle());
  const double base = w1_vs_uniform(grid, {Space::circle()});
  EXPECT_NEAR(base, kTwoPi / (4.0 * n), 1e-12);
  std::vector<DiscreteMeasure> parts;
  for (double s : {-1.0, 1.0}) {
    parts.push_back(grid.map([s](double y) { return Space::circle().canonical(y + s); }));
    EXPECT_NEAR(w1_vs_uniform(parts.back(), {Space::circle()}), base, 1e-12);
  }
  const double half[] = {0.5, 0.5};
  EXPECT_LE(w1_vs_uniform(mixture(half, parts), {Space::circle()}), base + 1e-12);
  for (double a : {1.0, 1.5, 1.99}) EXPECT_EQ(flow_state(0.0, 3.0, a), 0.0);
}

TEST(NonIrreducibility, DyadicStartsStayDyadic) {
  for (double x : {0.0, 0.5, 0.375, 1.0}) {
    for (int t = 0; t <= 12; ++t) {
      const auto law = ar1_t_step_law(x, t);
      for (double a : law.atoms()) EXPECT_TRUE(is_dyadic(a, t + 3)) << x << " " << t << " " << a;
    }
  }
}

TEST(ModelSpec, ShapesAndErrors) {
  EXPECT_EQ(ModelSpec::flow(1.3).time_domain(), TimeDomain::Continuous);
  EXPECT_TRUE(ModelSpec::flow(1.3).space() == Space::interval(-1.0, 1.0));
  EXPECT_EQ(ModelSpec::ar1().time_domain(), TimeDomain::Discrete);
  EXPECT_TRUE(ModelSpec::torus().space().is_circle());
  EXPECT_THROW(ModelSpec::flow(2.0), ArgumentError);
  EXPECT_THROW(ModelSpec::by_name("lorenz"), ArgumentError);
  EXPECT_EQ(ModelSpec::by_name("flow", 1.5).name(), "flow(alpha=1.5)");
  EXPECT_THROW(ModelSpec::ar1().require_state(-0.1), DomainError);
  EXPECT_NEAR(ModelSpec::torus().require_state(-1.0), kTwoPi - 1.0, 1e-15);
}

TEST(ExactExpectation, AgreesWithLaws) {
  const auto ar1 = ModelSpec::ar1();
  const auto f = functionals::identity(ar1.space());
  for (int t = 0; t <= 12; ++t) {
    const double want = ar1_t_step_law(0.3, t).mean();
    EXPECT_NEAR(*exact_expectation(ar1, f, 0.3, t), want, 1e-13);
  }
  const auto torus = ModelSpec::torus();
  const auto c = functionals::cosine(torus.space());
  for (int t = 0; t <= 20; ++t) {
    const double want = torus_t_step_law(0.7, t).expectation([](double y) { return std::cos(y); });
    EXPECT_NEAR(*exact_expectation(torus, c, 0.7, t), want, 1e-13);
  }
}

TEST(InvariantMean, ClosedFormsAndQuadrature) {
  EXPECT_EQ(invariant_mean(ModelSpec::flow(1.0), functionals::identity(Space::interval(-1, 1))), 0.0);
  EXPECT_EQ(invariant_mean(ModelSpec::ar1(), functionals::identity(Space::interval(0, 1))), 0.5);
  EXPECT_EQ(invariant_mean(ModelSpec::torus(), functionals::cosine(Space::circle())), 0.0);
  EXPECT_NEAR(invariant_mean(ModelSpec::torus(), functionals::clipped_distance(Space::circle())), (0.5 + (pi - 1.0)) / pi,
              1e-10);
}
