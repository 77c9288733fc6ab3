#include <cmath>
#include <random>

#include "doctest.h"
#include "dynamics.hpp"
#include "error.hpp"
#include "integrator.hpp"
#include "oracles.hpp"

using namespace quadsim;

namespace {

const QuadParams kParams;

Derivative nonlinear() {
  return [](const StateVector& x, const TorqueInput& u) { return nonlinear_deriv(x, u, kParams); };
}

Derivative linear() {
  return [m = build_linear_model(kParams)](const StateVector& x, const TorqueInput& u) {
    return linear_deriv(x, u, m);
  };
}

}  // namespace

TEST_CASE("double integrator over one control period") {
  const IntegratorConfig cfg;
  const TorqueInput u(1.2568, 0, 0);
  for (const auto& f : {linear(), nonlinear()}) {
    const StateVector x = integrate_interval(f, StateVector::Zero(), u, 5, 1.0 / 250, cfg);
    CHECK(std::abs(x[kPhi] - 0.011800938967136151) < 1e-9);
    CHECK(std::abs(x[kPhiDot] - 1.180093896713615) < 1e-9);
    CHECK(x.tail<4>().isZero(0.0));
  }
}

TEST_CASE("rest is preserved for any horizon") {
  const StateVector x = integrate_interval(nonlinear(), StateVector::Zero(), TorqueInput::Zero(), 1250, 1.0 / 250, {});
  CHECK(x == StateVector::Zero());
}

TEST_CASE("single-axis nonlinear motion stays on the closed form for a full episode") {
  const IntegratorConfig cfg;
  for (int axis = 0; axis < 3; ++axis) {
    TorqueInput u = TorqueInput::Zero();
    u[axis] = (axis == 2 ? 0.2 : 1.2) * (axis == 1 ? -1.0 : 1.0);
    StateVector x = StateVector::Zero();
    double worst = 0.0;
    for (int step = 0; step < 250; ++step) {
      x = integrate_interval(nonlinear(), x, u, 5, 1.0 / 250, cfg, step * 0.02);
      const StateVector exact = oracle::double_integrator(StateVector::Zero(), u, kParams, (step + 1) * 0.02);
      worst = std::max(worst, (x - exact).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("zero-torque tumbling keeps energy") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const StateVector x0 = oracle::random_rates(rng, 30.0);
    const StateVector x = integrate_interval(nonlinear(), x0, TorqueInput::Zero(), 1250, 1.0 / 250, {});
    const double e0 = oracle::rotational_energy(x0, kParams);
    CHECK(std::abs(oracle::rotational_energy(x, kParams) - e0) / e0 < 1e-6);
  }
}

TEST_CASE("fixed-step convergence order") {
  std::mt19937_64 rng(3);
  StateVector x0 = StateVector::Zero();
  x0[kPhiDot] = 20.0;
  x0[kThetaDot] = -25.0;
  x0[kPsiDot] = 15.0;
  const double e0 = oracle::rotational_energy(x0, kParams);
  auto drift = [&](double h) {
    IntegratorConfig cfg;
    cfg.fixed_step = h;
    const StateVector x = integrate_interval(nonlinear(), x0, TorqueInput::Zero(), 250, 1.0 / 250, cfg);
    return std::abs(oracle::rotational_energy(x, kParams) - e0) / e0;
  };
  const double coarse = drift(1.0 / 250);
  const double fine = drift(1.0 / 500);
  MESSAGE("energy drift h=4ms: " << coarse << ", h=2ms: " << fine << ", ratio " << coarse / fine);
  CHECK(coarse / fine >= 16.0);
}

TEST_CASE("determinism") {
  std::mt19937_64 rng(8);
  const StateVector x0 = oracle::random_rates(rng, 20.0);
  const TorqueInput u(0.3, -0.1, 0.05);
  const StateVector a = integrate_interval(nonlinear(), x0, u, 50, 1.0 / 250, {});
  const StateVector b = integrate_interval(nonlinear(), x0, u, 50, 1.0 / 250, {});
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 6) == 0);
}

TEST_CASE("grid-aligned subdivision agrees with one long call") {
  std::mt19937_64 rng(2);
  const StateVector x0 = oracle::random_rates(rng, 20.0);
  const TorqueInput u(0.3, -0.1, 0.05);
  const StateVector whole = integrate_interval(nonlinear(), x0, u, 10, 1.0 / 250, {});
  StateVector pieces = x0;
  for (int i = 0; i < 10; ++i) pieces = integrate_interval(nonlinear(), pieces, u, 1, 1.0 / 250, {}, i / 250.0);
  CHECK((whole - pieces).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("integration failures") {
  SUBCASE("step budget exhaustion reports the last valid time") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-15;
    cfg.abs_tol = 1e-18;
    cfg.max_internal_steps = 1;
    std::mt19937_64 rng(1);
    const StateVector x0 = oracle::random_rates(rng, 35.0);
    try {
      integrate_interval(nonlinear(), x0, TorqueInput::Zero(), 5, 1.0 / 250, cfg, 1.5);
      FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
      CHECK(e.code() == ErrorCode::kIntegrationFailure);
      CHECK(e.last_valid_time() >= 1.5);
      CHECK(e.last_valid_time() < 1.5 + 5.0 / 250);
    }
  }

  SUBCASE("non-finite derivative") {
    const Derivative bad = [](const StateVector& x, const TorqueInput&) {
      StateVector d = x;
      d[0] = NAN;
      return d;
    };
    CHECK_THROWS_AS(integrate_interval(bad, StateVector::Zero(), TorqueInput::Zero(), 1, 0.004, {}), IntegrationError);
  }

  SUBCASE("invalid config") {
    IntegratorConfig cfg;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}
