#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "satdock/errors.hpp"
#include "satdock/funnel.hpp"
#include "satdock/mission.hpp"
#include "satdock/policy.hpp"

namespace satdock {
namespace {

constexpr double kPi = std::numbers::pi;

Vec9 unit(int i, double s = 1.0) { return s * Vec9::Unit(i); }

TEST(FunnelSpec, Defaults) {
  const FunnelSpec f;
  EXPECT_DOUBLE_EQ(f.phi(0.0), 8.0 / kPi);
  EXPECT_DOUBLE_EQ(f.phi(37.0), 8.0 / kPi);
  EXPECT_EQ(f.threshold, 0.8);
  EXPECT_EQ(f.dwell_time, 1.0);
  EXPECT_EQ(f.weights, Vec9::Ones());
  EXPECT_NO_THROW(f.validate());
}

TEST(FunnelSpec, ValidationNamesField) {
  FunnelSpec f;
  f.threshold = 1.0;
  try {
    f.validate();
    FAIL();
  } catch (const InvalidConfig& e) {
    EXPECT_NE(std::string(e.what()).find("funnel.threshold"), std::string::npos);
  }
  f = FunnelSpec{};
  f.dwell_time = 0.0;
  EXPECT_THROW(f.validate(), InvalidConfig);
  f = FunnelSpec{};
  f.boundary.final_radius = -1.0;
  EXPECT_THROW(f.validate(), InvalidConfig);
}

TEST(FunnelBoundary, ShrinkingTube) {
  FunnelBoundary b;
  b.initial_radius = 1.0;
  b.final_radius = 0.2;
  b.decay_rate = 0.5;
  EXPECT_DOUBLE_EQ(b.radius(0.0), 1.0);
  EXPECT_NEAR(b.radius(2.0), 0.8 * std::exp(-1.0) + 0.2, 1e-15);
  EXPECT_GT(b.phi(10.0), b.phi(1.0));
}

TEST(ErrorVariables, PerfectTracking) {
  const FunnelSpec f;
  const Reference ref = docking_reference();
  for (double t : {0.0, 13.0, 20.0, 33.3, 60.0}) {
    const ErrorVariables ev = error_variables(t, ref.value(t), ref.rate(t), ref, f);
    EXPECT_EQ(ev.e, Vec9::Zero());
    EXPECT_EQ(ev.e1, Vec9::Zero());
    EXPECT_EQ(ev.e2, Vec9::Zero());
  }
}

TEST(ErrorVariables, WorkedExample) {
  const FunnelSpec f;
  const ErrorVariables ev =
      error_variables(0.0, unit(0, kPi / 16), Vec9::Zero(), Vec9::Zero(), Vec9::Zero(), f);
  EXPECT_NEAR(ev.e1[0], 0.5, 1e-15);
  EXPECT_NEAR(ev.e2[0], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(ev.e2.tail<8>(), (Eigen::Matrix<double, 8, 1>::Zero()));
}

TEST(ErrorVariables, RateTerm) {
  const FunnelSpec f;
  const Vec9 ydot = unit(3, 0.1);
  const ErrorVariables ev =
      error_variables(0.0, Vec9::Zero(), ydot, Vec9::Zero(), Vec9::Zero(), f);
  EXPECT_NEAR(ev.e2[3], 0.8 / kPi, 1e-15);
}

TEST(ErrorVariables, WeightsScaleError) {
  FunnelSpec f;
  f.weights[2] = 2.0;
  const ErrorVariables ev =
      error_variables(0.0, unit(2, 0.1), Vec9::Zero(), Vec9::Zero(), Vec9::Zero(), f);
  EXPECT_NEAR(ev.e[2], 0.2, 1e-15);
}

TEST(ErrorVariables, BreachThrows) {
  const FunnelSpec f;
  EXPECT_THROW(error_variables(0.0, unit(8, kPi / 8), Vec9::Zero(), Vec9::Zero(),
                               Vec9::Zero(), f),
               FunnelBreach);
}

TEST(ErrorVariables, InitialStateOnReference) {
  const FunnelSpec f;
  const ErrorVariables ev =
      error_variables(0.0, Vec9::Zero(), Vec9::Zero(), docking_reference(), f);
  EXPECT_EQ(ev.e, Vec9::Zero());
}

TEST(FunnelFeedback, Examples) {
  EXPECT_EQ(funnel_feedback(Vec9::Zero()), Vec9::Zero());
  const Vec9 u = funnel_feedback(unit(0, 0.8));
  EXPECT_NEAR(u[0], -0.8 / 0.36, 1e-14);
  EXPECT_NEAR(u[0], -2.2222, 1e-4);
  EXPECT_THROW(funnel_feedback(unit(4, 1.0)), FunnelBreach);
}

TEST(FunnelFeedback, MonotoneAlongRays) {
  Rng rng(3);
  for (int ray = 0; ray < 100; ++ray) {
    Vec9 d;
    for (int i = 0; i < 9; ++i) d[i] = rng.normal();
    d.normalize();
    double last = -1.0;
    for (int k = 0; k < 100; ++k) {
      const double s = k / 100.0;
      const double n = funnel_feedback(s * d).norm();
      EXPECT_GT(n, last);
      last = n;
    }
    EXPECT_GE(funnel_feedback(0.99 * d).norm(), 10.0);
    EXPECT_GE(funnel_feedback(0.995 * d).norm(), 10.0);
  }
}

TEST(Activation, Examples) {
  const FunnelSpec f;
  std::vector<NormSample> flat;
  for (int i = 0; i <= 200; ++i) flat.push_back({0.01 * i, 0.5});
  EXPECT_EQ(activation(flat, 2.0, f), 0.0);
  std::vector<NormSample> peak = flat;
  peak[150].norm_e2 = 0.9;
  EXPECT_NEAR(activation(peak, 2.0, f), 0.1, 1e-15);
  // Out of the window once t - t_d passes the peak.
  EXPECT_EQ(activation(peak, 2.6, f), 0.0);
  EXPECT_EQ(activation({}, 0.0, f), 0.0);
}

// Synthetic trace crossing the threshold once at t* = 3.
std::vector<NormSample> crossing_trace(double dt) {
  std::vector<NormSample> h;
  const int n = static_cast<int>(std::lround(10.0 / dt));
  for (int i = 0; i <= n; ++i) {
    const double t = i * dt;
    const double v = std::abs(t - 3.0) < 1e-12 ? 0.85 : 0.5 * std::exp(-std::abs(t - 3.0));
    h.push_back({t, v});
  }
  return h;
}

TEST(Activation, DwellWindowAfterSingleCrossing) {
  const FunnelSpec f;
  const double dt = 0.01;
  const auto trace = crossing_trace(dt);
  double first_on = -1, last_on = -1;
  for (const NormSample& s : trace) {
    const std::span<const NormSample> upto(trace.data(),
                                           static_cast<std::size_t>(&s - trace.data()) + 1);
    if (activation(upto, s.t, f) > 0.0) {
      if (first_on < 0) first_on = s.t;
      last_on = s.t;
    }
  }
  EXPECT_NEAR(first_on, 3.0, dt);
  EXPECT_NEAR(last_on, 4.0, dt);
}

TEST(ActivationWindow, MatchesBruteForceOnRandomTraces) {
  const FunnelSpec f;
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    ActivationWindow w(f);
    std::vector<NormSample> history;
    double v = 0.5;
    for (int i = 0; i <= 1000; ++i) {
      const double t = 0.01 * i;
      v = std::clamp(v + 0.05 * rng.normal(), 0.0, 0.99);
      history.push_back({t, v});
      w.record(t, v);
      EXPECT_EQ(w.alpha(t), activation(history, t, f)) << "t = " << t;
    }
  }
}

TEST(ActivationWindow, StageQueryIncludesCurrentValue) {
  const FunnelSpec f;
  ActivationWindow w(f);
  w.record(0.0, 0.5);
  EXPECT_EQ(w.alpha(0.005, 0.7), 0.0);
  EXPECT_NEAR(w.alpha(0.005, 0.95), 0.15, 1e-15);
  // The stage value is not stored.
  EXPECT_EQ(w.alpha(0.005), 0.0);
}

TEST(ActivationWindow, ResetClearsHistory) {
  const FunnelSpec f;
  ActivationWindow w(f);
  w.record(0.0, 0.95);
  EXPECT_GT(w.alpha(0.0), 0.0);
  w.reset();
  EXPECT_EQ(w.alpha(0.0), 0.0);
}

TEST(CombinedControl, Examples) {
  const Vec9 ur = unit(0, 0.75);
  EXPECT_EQ(combined_control(0.0, unit(0, -2.2222), ur), ur);
  EXPECT_EQ(combined_control(1.0, unit(1, 3.0), Vec9::Zero()), unit(1, 3.0));
  EXPECT_NEAR(combined_control(0.1, unit(0, -2.2222), ur)[0], 0.52778, 1e-12);
  // No clipping of the sum.
  EXPECT_EQ(combined_control(1.0, unit(6, 40.0), unit(6, 0.15))[6], 40.15);
}

TEST(InitialConditions, StrictInequalities) {
  EXPECT_NO_THROW(check_initial_conditions(Vec9::Zero(), Vec9::Zero()));
  EXPECT_THROW(check_initial_conditions(unit(0, 1.0), Vec9::Zero()), InfeasibleStart);
  EXPECT_NO_THROW(check_initial_conditions(unit(0, 0.999), unit(1, 0.5)));
  EXPECT_THROW(check_initial_conditions(Vec9::Zero(), unit(1, 1.0)), InfeasibleStart);
  try {
    check_initial_conditions(unit(0, 1.5), unit(1, 0.25));
  } catch (const InfeasibleStart& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("1.5"), std::string::npos);
    EXPECT_NE(m.find("0.25"), std::string::npos);
  }
}

TEST(PiecewisePolynomial, SegmentsAndDerivatives) {
  const PiecewisePolynomial p({0.0, 1.0, 3.0}, {{1.0, 2.0, 3.0}, {6.0, 8.0}});
  EXPECT_DOUBLE_EQ(p.value(0.5), 1 + 1 + 0.75);
  EXPECT_DOUBLE_EQ(p.value(1.0), 6.0);  // left segment owns its right end
  EXPECT_DOUBLE_EQ(p.derivative(1.0), 8.0);
  EXPECT_DOUBLE_EQ(p.derivative(0.5, 2), 6.0);
  EXPECT_DOUBLE_EQ(p.value(2.0), 14.0);
  EXPECT_EQ(p.segment_index(0.0), 0u);
  EXPECT_EQ(p.segment_index(1.0), 0u);
  EXPECT_EQ(p.segment_index(1.5), 1u);
  EXPECT_THROW(PiecewisePolynomial({0.0, 0.0}, {{1.0}}), InvalidArgument);
  EXPECT_THROW(PiecewisePolynomial({0.0, 1.0}, {}), InvalidArgument);
}

}  // namespace
}  // namespace satdock
