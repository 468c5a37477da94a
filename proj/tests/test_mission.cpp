#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "satdock/errors.hpp"
#include "satdock/mission.hpp"

namespace satdock {
namespace {

constexpr double kPi = std::numbers::pi;

// Closed-form joint reference, written out independently.
Vec3 joint_reference(double t) {
  if (t <= 20) {
    return {0.0, -kPi / 16000 * t * t * t + kPi / 800 * t * t + kPi / 40 * t, 0.0};
  }
  if (t <= 40) {
    const double s = t - 20;
    const double p2 = -kPi / 4000 * s * s * s + 3 * kPi / 400 * s * s;
    return {p2, kPi / 2, -p2};
  }
  const double s = t - 40;
  return {kPi, kPi / 16000 * s * s * s - kPi / 400 * s * s + kPi / 2, -kPi};
}

MissionConfig mode_config(Mode m) {
  MissionConfig c;
  c.mode = m;
  return c;
}

TEST(MissionConfig, Defaults) {
  const MissionConfig c;
  EXPECT_EQ(c.horizon, 60.0);
  EXPECT_EQ(c.decision_interval, 1.0);
  EXPECT_EQ(c.mode, Mode::kFunnelRl);
  EXPECT_EQ(c.step_count(), 60);
  EXPECT_EQ(c.substep_count(), 100);
  EXPECT_DOUBLE_EQ(c.funnel.phi(0), 8 / kPi);
  EXPECT_EQ(c.funnel.threshold, 0.8);
  EXPECT_EQ(c.funnel.dwell_time, 1.0);
}

TEST(MissionConfig, Validation) {
  MissionConfig c;
  c.dt_sub = 0.3;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = MissionConfig{};
  c.horizon = 61;
  EXPECT_THROW(c.validate(), InvalidConfig);
  c = MissionConfig{};
  c.decision_interval = 0.7;
  EXPECT_THROW(c.validate(), InvalidConfig);
  EXPECT_EQ(parse_mode("funnel"), Mode::kFunnelRl);
  EXPECT_EQ(parse_mode("pure"), Mode::kPureRl);
  EXPECT_THROW(parse_mode("other"), InvalidConfig);
}

TEST(ActionBox, HalfWidths) {
  const Vec9 h = action_half_width();
  for (int i = 0; i < 6; ++i) EXPECT_EQ(h[i], 0.75);
  for (int i = 6; i < 9; ++i) EXPECT_EQ(h[i], 0.15);
}

TEST(Reference, MatchesClosedForm) {
  const Reference ref = docking_reference();
  for (int k = 0; k <= 600; ++k) {
    const double t = 0.1 * k;
    const Vec9 y = ref.value(t);
    EXPECT_EQ(y.head<6>(), Vec6::Zero());
    EXPECT_LT((y.tail<3>() - joint_reference(t)).cwiseAbs().maxCoeff(), 1e-12) << t;
    EXPECT_EQ(ref.rate(t).head<6>(), Vec6::Zero());
  }
}

TEST(Reference, InitialValueAndRate) {
  const Reference ref = docking_reference();
  EXPECT_EQ(ref.value(0.0), Vec9::Zero());
  const Vec9 r = ref.rate(0.0);
  EXPECT_DOUBLE_EQ(r[7], kPi / 40);  // psi1 slot
  Vec9 others = r;
  others[7] = 0;
  EXPECT_EQ(others, Vec9::Zero());
}

TEST(Reference, Junctions) {
  const Reference ref = docking_reference();
  const Vec9 y20 = ref.value(20.0);
  EXPECT_NEAR(y20[6], 0.0, 1e-15);
  EXPECT_NEAR(y20[7], kPi / 2, 1e-15);
  EXPECT_NEAR(y20[8], 0.0, 1e-15);
  for (int ch = 6; ch < 9; ++ch) {
    const PiecewisePolynomial& p = ref.channel(ch);
    for (std::size_t seg = 1; seg < 3; ++seg) {
      const double t = p.breaks()[seg];
      EXPECT_LT(std::abs(p.evaluate_segment(seg - 1, t, 0) - p.evaluate_segment(seg, t, 0)), 1e-12);
      EXPECT_LT(std::abs(p.evaluate_segment(seg - 1, t, 1)), 1e-12);
      EXPECT_LT(std::abs(p.evaluate_segment(seg, t, 1)), 1e-12);
    }
  }
  const PiecewisePolynomial& th1 = ref.channel(6);
  const PiecewisePolynomial& psi1 = ref.channel(7);
  const PiecewisePolynomial& th2 = ref.channel(8);
  EXPECT_NEAR(th1.evaluate_segment(1, 40, 0), kPi, 1e-15);
  EXPECT_NEAR(th1.evaluate_segment(2, 40, 0), kPi, 1e-15);
  EXPECT_NEAR(psi1.evaluate_segment(1, 40, 0), kPi / 2, 1e-15);
  EXPECT_NEAR(psi1.evaluate_segment(2, 40, 0), kPi / 2, 1e-15);
  EXPECT_NEAR(th2.evaluate_segment(1, 40, 0), -kPi, 1e-15);
  EXPECT_NEAR(th2.evaluate_segment(2, 40, 0), -kPi, 1e-15);
}

TEST(Reference, BoundedCurvatureAndInsideBox) {
  const Reference ref = docking_reference();
  for (int k = 0; k <= 6000; ++k) {
    const double t = 0.01 * k;
    EXPECT_LE(ref.acceleration(t).cwiseAbs().maxCoeff(), 3 * kPi / 200 + 1e-12);
    EXPECT_LE(ref.value(t).cwiseAbs().maxCoeff(), kPi + 1e-12);
  }
}

TEST(Reference, OutOfHorizonRejected) {
  const Reference ref = docking_reference();
  EXPECT_THROW(ref.value(-0.5), InvalidArgument);
  EXPECT_THROW(ref.rate(60.5), InvalidArgument);
}

TEST(Rewards, FunnelExamples) {
  EXPECT_DOUBLE_EQ(reward_funnel(Vec9::Zero(), 0.0), 0.1);
  EXPECT_DOUBLE_EQ(reward_funnel(Vec9::Unit(3), 0.0), 0.0);
  // Constant integrand alpha |u_f - u_rl| = 0.1 * 2 over one interval.
  double integral = 0.0;
  for (int i = 0; i < 100; ++i) integral += 0.5 * 0.01 * (0.2 + 0.2);
  EXPECT_NEAR(reward_funnel(Vec9::Zero(), integral), -0.1, 1e-14);
}

TEST(Rewards, PureExamples) {
  const double r = kPi / 8;
  PureReward p = reward_pure(Vec9::Zero(), 0.0, r);
  EXPECT_DOUBLE_EQ(p.reward, 0.1);
  EXPECT_FALSE(p.violated);
  // Boundary inclusive.
  p = reward_pure(Vec9::Unit(4) * (kPi / 8), 10.0, r);
  EXPECT_FALSE(p.violated);
  EXPECT_DOUBLE_EQ(p.reward, (1 - kPi / 8) / 10);
  // |e| = 0.5 with a violating component.
  Vec9 e = Vec9::Zero();
  e[0] = 0.4;
  e[1] = 0.3;
  p = reward_pure(e, 0.0, r);
  EXPECT_TRUE(p.violated);
  EXPECT_NEAR(p.reward, -62.95, 1e-12);
  EXPECT_NEAR(reward_pure(e, 30.0, r).reward, 0.05 - 30 * 1.05, 1e-12);
}

TEST(DockingEnv, ResetIsOnReference) {
  DockingEnv env(MissionConfig{}, SatelliteParams{});
  const VectorXd a = env.reset();
  EXPECT_EQ(a, VectorXd::Zero(18));
  const VectorXd b = env.reset();
  EXPECT_EQ(a, b);
  EXPECT_EQ(env.reference().value(0.0), env.state().output());
  EXPECT_EQ(env.time(), 0.0);
  std::vector<SubstepRecord> log;
  env.set_observer([&](const SubstepRecord& r) { log.push_back(r); });
  env.advance(Vec9::Zero());
  ASSERT_FALSE(log.empty());
  EXPECT_EQ(log.front().t, 0.0);
  EXPECT_EQ(log.front().norm_e1, 0.0);
  // Reference starts with psi1 rate pi/40, the state at rest.
  EXPECT_NEAR(log.front().norm_e2, 0.2, 1e-15);
}

TEST(DockingEnv, HeldReferenceAcceleration) {
  DockingEnv env(MissionConfig{}, SatelliteParams{});
  GeneralizedState s;
  s.q2dot[1] = kPi / 40;  // on the reference in value and rate
  env.reset_to(s);
  Vec9 a = Vec9::Zero();
  a[7] = kPi / 400;  // p1''(0)
  const StepOutcome o = env.advance(a);
  const double t = 1.0;
  const double quadratic = kPi / 40 * t + kPi / 800 * t * t;
  EXPECT_NEAR(o.next_state.q2[1], quadratic, 1e-9);
  EXPECT_NEAR(o.next_state.q2dot[1], kPi / 40 + kPi / 400 * t, 1e-9);
  // Remaining gap is the reference's cubic term.
  EXPECT_NEAR(o.next_state.q2[1] - env.reference().value(t)[7], kPi / 16000, 1e-9);
  EXPECT_FALSE(o.intervened);
}

TEST(DockingEnv, PureModeViolationTerminates) {
  DockingEnv env(mode_config(Mode::kPureRl), SatelliteParams{});
  env.reset();
  const Vec9 a = -action_half_width();
  StepOutcome o;
  int steps = 0;
  do {
    o = env.advance(a);
    ++steps;
  } while (!o.done);
  EXPECT_LT(steps, 60);
  EXPECT_TRUE(o.violated);
  EXPECT_LT(o.reward, -1.0);
  EXPECT_THROW(env.advance(a), InvalidArgument);
}

TEST(DockingEnv, FunnelContainsAdversarialCorners) {
  const Vec9 h = action_half_width();
  std::vector<Vec9> corners = {h, -h};
  Vec9 alt = h;
  for (int i = 0; i < 9; i += 2) alt[i] = -alt[i];
  corners.push_back(alt);
  corners.push_back(-alt);
  for (const Vec9& a : corners) {
    DockingEnv env(MissionConfig{}, SatelliteParams{});
    env.reset();
    double max_e1 = 0.0, max_attitude = 0.0;
    env.set_observer([&](const SubstepRecord& r) {
      max_e1 = std::max(max_e1, r.norm_e1);
      max_attitude = std::max(max_attitude, r.y.segment<3>(3).cwiseAbs().maxCoeff());
    });
    int steps = 0;
    StepOutcome o;
    do {
      o = env.advance(a);
      ++steps;
      EXPECT_FALSE(o.violated);
      EXPECT_LE(o.reward - (-o.intervention_cost), 0.1);
      EXPECT_GT(o.reward + o.intervention_cost, 0.0);
    } while (!o.done);
    EXPECT_EQ(steps, 60);
    EXPECT_LT(max_e1, 1.0);
    EXPECT_LT(max_attitude, kPi / 8);
  }
}

TEST(DockingEnv, RejectsActionsOutsideBox) {
  DockingEnv env(MissionConfig{}, SatelliteParams{});
  env.reset();
  Vec9 a = Vec9::Zero();
  a[6] = 0.2;
  EXPECT_THROW(env.advance(a), InvalidArgument);
  a[6] = std::nan("");
  EXPECT_THROW(env.advance(a), InvalidArgument);
  EXPECT_THROW(env.step(VectorXd::Zero(4)), ShapeMismatch);
}

TEST(DockingEnv, InfeasibleStartRejected) {
  DockingEnv env(MissionConfig{}, SatelliteParams{});
  GeneralizedState s;
  s.q1[0] = 0.5;  // outside the tube
  EXPECT_THROW(env.reset_to(s), InfeasibleStart);
  DockingEnv pure(mode_config(Mode::kPureRl), SatelliteParams{});
  EXPECT_NO_THROW(pure.reset_to(s));
}

constexpr double kBodyKp = 40.0;
constexpr double kBodyKd = 80.0;

// PD tracking law on the current state; keeps |e2| small.
Vec9 tracking_action(const DockingEnv& env) {
  const double t = env.time();
  const Reference& ref = env.reference();
  const GeneralizedState& s = env.state();
  Vec9 a = Vec9::Zero();
  const Vec9 y = ref.value(t), yd = ref.rate(t), ydd = ref.acceleration(t);
  const Vec9 out = s.output(), out_rate = s.output_rate();
  for (int i = 0; i < 6; ++i) {
    a[i] = std::clamp(-kBodyKp * out[i] - kBodyKd * out_rate[i], -0.75, 0.75);
  }
  for (int i = 0; i < 3; ++i) {
    const double v = ydd[6 + i] + 1.0 * (y[6 + i] - s.q2[i]) + 2.0 * (yd[6 + i] - s.q2dot[i]);
    a[6 + i] = std::clamp(v, -0.15, 0.15);
  }
  return a;
}

TEST(DockingEnv, ModesAgreeWhenSafeguardIdle) {
  DockingEnv funnel(MissionConfig{}, SatelliteParams{});
  DockingEnv pure(mode_config(Mode::kPureRl), SatelliteParams{});
  funnel.reset();
  pure.reset();
  double max_alpha = 0.0;
  funnel.set_observer([&](const SubstepRecord& r) { max_alpha = std::max(max_alpha, r.alpha); });
  for (int k = 0; k < 60; ++k) {
    const Vec9 a = tracking_action(funnel);
    const StepOutcome f = funnel.advance(a);
    const StepOutcome p = pure.advance(a);
    ASSERT_EQ(max_alpha, 0.0) << "safeguard engaged at step " << k;
    EXPECT_EQ(f.next_state.packed(), p.next_state.packed());
    EXPECT_EQ(f.reward, p.reward);
    EXPECT_EQ(f.intervention_cost, 0.0);
    EXPECT_FALSE(p.violated);
  }
}

TEST(DockingEnv, ZeroOrderHoldAndLogShape) {
  DockingEnv env(MissionConfig{}, SatelliteParams{});
  env.reset();
  std::vector<SubstepRecord> log;
  env.set_observer([&](const SubstepRecord& r) { log.push_back(r); });
  Vec9 a0 = Vec9::Constant(0.1);
  Vec9 a1 = Vec9::Constant(-0.1);
  env.advance(a0);
  env.advance(a1);
  ASSERT_EQ(log.size(), 201u);
  for (std::size_t i = 0; i <= 100; ++i) EXPECT_EQ(log[i].u_rl, a0) << i;
  for (std::size_t i = 101; i <= 200; ++i) EXPECT_EQ(log[i].u_rl, a1) << i;
  for (std::size_t i = 0; i < log.size(); ++i) EXPECT_NEAR(log[i].t, 0.01 * i, 1e-12);
}

TEST(DockingEnv, PureModeLogsNanBeyondTube) {
  DockingEnv env(mode_config(Mode::kPureRl), SatelliteParams{});
  GeneralizedState s;
  s.q1[0] = 0.5;
  env.reset_to(s);
  std::vector<SubstepRecord> log;
  env.set_observer([&](const SubstepRecord& r) { log.push_back(r); });
  const StepOutcome o = env.advance(Vec9::Zero());
  EXPECT_TRUE(o.done);
  EXPECT_TRUE(std::isnan(log.front().norm_e2));
  EXPECT_EQ(log.front().alpha, 0.0);
}

TEST(EpisodeCsv, Columns) {
  std::ostringstream out;
  {
    EpisodeCsvWriter w(out, "# config_hash=abc seed=1");
    DockingEnv env(MissionConfig{}, SatelliteParams{});
    env.reset();
    env.set_observer([&](const SubstepRecord& r) { w(r); });
    env.advance(Vec9::Zero());
  }
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# config_hash=abc seed=1");
  std::getline(in, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 32);
  EXPECT_EQ(line.rfind("t,x,y,z,phi,theta,psi,theta1,psi1,theta2,ref_x", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 32);
    ++rows;
  }
  EXPECT_EQ(rows, 101);
}

}  // namespace
}  // namespace satdock
