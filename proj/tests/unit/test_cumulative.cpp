#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "../support/oracles.hpp"
#include "narz/cumulative.hpp"
#include "narz/error.hpp"

using namespace narz;

namespace {

Kernel make(const char* family, double r) { return Kernel::builtin(family, std::span<const double>(&r, 1)); }

std::vector<double> uniform_times(double t0, double t1, int n) {
  std::vector<double> out;
  for (int i = 1; i <= n; ++i) out.push_back(t0 + (t1 - t0) * i / n);
  return out;
}

}  // namespace

TEST_CASE("step functions from particle systems") {
  const auto h = build_M(ParticleSystem::make({0.0}, {0.0}, {1.0}));
  CHECK(h(-1e-300) == 0.0);
  CHECK(h(0.0) == 1.0);
  CHECK(h.left_limit(0.0) == 0.0);

  const auto q = build_M(ParticleSystem::make({-1.0, 0.0, 1.0, 2.0}, {0, 0, 0, 0}, {0.25, 0.25, 0.25, 0.25}));
  CHECK(q(-2.0) == 0.0);
  CHECK(q.values() == std::vector<double>{0.25, 0.5, 0.75, 1.0});

  const auto co = build_M(ParticleSystem::make({1.0, 1.0}, {0.0, 0.0}, {0.3, 0.7}));
  REQUIRE(co.size() == 1);
  CHECK(co.jumps()[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("step function is right-continuous with the stated jumps") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto at = oracle::random_atoms(rng, 12, -3.0, 3.0);
    const StepFunction M(at.x, at.m);
    double prev = 0.0;
    for (std::size_t k = 0; k < M.size(); ++k) {
      const double x = M.breakpoints()[k];
      CHECK(M(x) == M.values()[k]);
      CHECK(M(std::nextafter(x, 10.0)) == M(x));
      CHECK(M.left_limit(x) == doctest::Approx(M(x) - M.jumps()[k]).epsilon(1e-14));
      CHECK(M(x) >= prev);
      prev = M(x);
    }
    CHECK(M.total() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("convolution with phi is the finite omega sum") {
  const Kernel k = make("raised_cosine", 1.0);
  const StepFunction single({0.4}, {1.0});
  for (double x : {-1.0, 0.0, 0.3, 0.9, 1.3}) CHECK(conv_phi_M(single, k, x) == k.omega(x - 0.4));
  CHECK(conv_phi_M(single, k, 5.0) == 0.0);

  // Direct quadrature of int phi(x - y) M(y) dy, split where the integrand kinks.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ux(-2.5, 2.5);
  for (const char* fam : {"raised_cosine", "downstream_cosine"}) {
    const Kernel kk = make(fam, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      auto at = oracle::random_atoms(rng, 20, -1.5, 1.5);
      const StepFunction M(at.x, at.m);
      const double x = ux(rng);
      std::vector<double> cuts{x - kk.support().hi, x - kk.support().lo};
      for (double b : at.x) cuts.push_back(std::clamp(b, cuts[0], cuts[1]));
      std::sort(cuts.begin(), cuts.end());
      double direct = 0.0;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        const double level = M(mid);
        direct += level * oracle::simpson([&](double y) { return kk.phi(x - y); }, cuts[i], cuts[i + 1], 2000);
      }
      CHECK(std::abs(conv_phi_M(M, kk, x) - direct) <= 1e-8);
    }
  }
}

TEST_CASE("A of M telescopes to the psi sums") {
  const Kernel k = make("raised_cosine", 1.0);
  const auto s = ParticleSystem::make({-0.5, 0.1, 0.8}, {1.0, -0.5, 0.2}, {0.2, 0.3, 0.5});
  const auto A = flux_from_state(s, k);
  const auto M = build_M(s);
  const auto psi = compute_psi(s, k);
  CHECK(eval_A_of_M(M, A, -10.0) == 0.0);
  double running = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    running += s.m[i] * psi[i];
    CHECK(eval_A_of_M(M, A, s.x[i]) == doctest::Approx(running).epsilon(1e-14));
  }
  CHECK(eval_A_of_M(M, A, 10.0) == doctest::Approx(A(1.0)).epsilon(1e-15));

  const StepFunction off({0.0}, {1.0});
  const PiecewiseLinearFlux coarse({0.0, 0.3, 1.0}, {0.0, 1.0, 2.0});
  const StepFunction two({0.0, 1.0}, {0.5, 0.5});
  CHECK_NOTHROW(eval_A_of_M(off, coarse, 1.0));
  try {
    eval_A_of_M(two, coarse, 0.5);
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridMismatch);
  }
}

TEST_CASE("piecewise linear flux") {
  const double m[] = {0.25, 0.25, 0.5};
  const double slopes[] = {2.0, -1.0, 4.0};
  const auto A = PiecewiseLinearFlux::from_slopes(m, slopes);
  CHECK(A(0.0) == 0.0);
  CHECK(A(0.25) == doctest::Approx(0.5));
  CHECK(A(0.5) == doctest::Approx(0.25));
  CHECK(A(1.0) == doctest::Approx(2.25));
  CHECK(A(2.0) == A(1.0));
  CHECK(A.lipschitz() == doctest::Approx(4.0));
  CHECK(A.node_index(0.5).value() == 2);
  CHECK_FALSE(A.node_index(0.4).has_value());
  CHECK_THROWS_AS(PiecewiseLinearFlux({0.0, 0.6, 0.5, 1.0}, {0, 0, 0, 0}), Error);
}

TEST_CASE("certificates at the initial state") {
  const Kernel k = make("raised_cosine", 1.0);
  std::mt19937_64 rng(4);
  auto at = oracle::random_atoms(rng, 10, -1.0, 1.0);
  std::vector<double> v(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& vi : v) vi = u(rng);
  const auto s = ParticleSystem::make(at.x, v, at.m);
  const auto A = flux_from_state(s, k);
  for (double r : check_rankine_hugoniot(s, A, k)) CHECK(r <= 1e-13);
  for (double o : check_oleinik(s, A, k)) CHECK(o == std::numeric_limits<double>::infinity());
}

TEST_CASE("merged pair satisfies the chord conditions") {
  // A co-located pair with flux slopes psi0 = (2, 0): the cluster's
  // v + omega(0) = 1 equals the chord slope over [0, 1], and the chord to
  // theta = 0.5 has slope 2, so the Oleinik margin is 2 - 1 = 1.
  const Kernel k = make("raised_cosine", 1.0);
  const double m[] = {0.5, 0.5};
  const double good_slopes[] = {2.0, 0.0};
  const double bad_slopes[] = {0.0, 2.0};
  const auto merged = ParticleSystem::make({0.3, 0.3}, {1.0 - k.omega(0.0), 1.0 - k.omega(0.0)}, {0.5, 0.5});
  REQUIRE(merged.cluster_count() == 1);
  const auto A = PiecewiseLinearFlux::from_slopes(m, good_slopes);
  const auto rh = check_rankine_hugoniot(merged, A, k);
  REQUIRE(rh.size() == 1);
  CHECK(rh[0] <= 1e-15);
  CHECK(check_oleinik(merged, A, k)[0] == doctest::Approx(1.0).epsilon(1e-14));
  // Reversed slopes make the same merge non-entropic.
  const auto A_bad = PiecewiseLinearFlux::from_slopes(m, bad_slopes);
  CHECK(check_rankine_hugoniot(merged, A_bad, k)[0] <= 1e-15);
  CHECK(check_oleinik(merged, A_bad, k)[0] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("simulated merge of a pair with psi0 = (2, 0)") {
  const Kernel k = make("raised_cosine", 0.1);
  // Far apart, psi_i = v_i + m_i omega(0) = v_i + 5.
  const auto s0 = ParticleSystem::make({-1.0, 1.0}, {-3.0, -5.0}, {0.5, 0.5});
  const auto A = flux_from_state(s0, k);
  CHECK(A.slope(0) == doctest::Approx(2.0));
  CHECK(std::abs(A.slope(1)) <= 1e-15);
  const auto traj = simulate(s0, k, 2.0, {}, {});
  const auto& last = traj.states.back().system;
  REQUIRE(last.cluster_count() == 1);
  CHECK(last.v[0] == doctest::Approx(1.0 - 10.0).epsilon(1e-10));
  CHECK(check_rankine_hugoniot(last, A, k)[0] <= 1e-8);
  CHECK(check_oleinik(last, A, k)[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("certificates along simulated collisions") {
  const Kernel k = make("raised_cosine", 1.0);
  std::mt19937_64 rng(17);
  std::size_t collisions = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto at = oracle::random_atoms(rng, 12, -2.0, 2.0);
    std::vector<double> v(12);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double& vi : v) vi = u(rng);
    const auto s = ParticleSystem::make(at.x, v, at.m);
    const auto A = flux_from_state(s, k);
    const auto traj = simulate(s, k, 3.0, uniform_times(0.0, 3.0, 6), {});
    for (const auto& st : traj.states) {
      if (st.kind == EventKind::Collision) ++collisions;
      for (double r : check_rankine_hugoniot(st.system, A, k)) CHECK(r <= 1e-8);
      for (double o : check_oleinik(st.system, A, k)) CHECK(o >= -1e-8);
    }
  }
  CHECK(collisions > 0);
}

TEST_CASE("entropy residual matches the shock dissipation") {
  const Kernel k = make("raised_cosine", 1.0);
  const auto s = ParticleSystem::make({-1.0, 1.0}, {1.0, -1.0}, {0.5, 0.5});
  const auto A = flux_from_state(s, k);
  const auto traj = simulate(s, k, 2.0, uniform_times(0.0, 2.0, 4000), {});
  double t_star = -1.0, x_star = 0.0, v_star = 0.0;
  for (const auto& st : traj.states) {
    if (st.kind == EventKind::Collision) {
      t_star = st.time;
      x_star = st.system.x[0];
      v_star = st.system.v[0];
    }
  }
  REQUIRE(t_star > 0.0);

  const BumpTestFunction test{x_star, 1.0, 1.2, 0.7};
  for (double alpha : {0.1, 0.25, 0.5, 0.7, 0.9}) {
    const KruzkovPair pair{alpha};
    // Jumps of a single particle are contact discontinuities of the linear
    // piece of A, so only the merged cluster dissipates, at rate
    // (v + omega(0)) [eta] - [q] = 2 (A(alpha) - alpha A(1)).
    const double rate = 2.0 * (A(alpha) - alpha * A(1.0));
    const double lo = std::max(t_star, test.t_center - test.t_halfwidth);
    const double hi = test.t_center + test.t_halfwidth;
    const double expected =
        rate * oracle::simpson([&](double t) { return test.h(t) * test.g(x_star + v_star * (t - t_star)); },
                               lo, hi, 20000);
    const auto r = entropy_residual(traj, A, k, pair, test, 1e-6);
    CAPTURE(alpha);
    CHECK(expected > 0.0);
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-5));
    CHECK(r.error_estimate <= 1e-6);
  }
  for (double alpha : {-0.5, 0.0, 1.0, 1.5}) {
    CHECK(std::abs(entropy_residual(traj, A, k, KruzkovPair{alpha}, test).value) <= 1e-6);
  }
}

TEST_CASE("entropy residual needs enough states") {
  const Kernel k = make("raised_cosine", 1.0);
  const auto s = ParticleSystem::make({-1.0, 1.0}, {1.0, -1.0}, {0.5, 0.5});
  const auto A = flux_from_state(s, k);
  const auto sparse = simulate(s, k, 2.0, uniform_times(0.0, 2.0, 3), {});
  const BumpTestFunction test{0.0, 1.0, 1.0, 0.9};
  try {
    entropy_residual(sparse, A, k, KruzkovPair{0.5}, test, 1e-9);
    FAIL("expected InsufficientSnapshots");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientSnapshots);
  }
}

TEST_CASE("bump test function derivatives and antiderivative") {
  const BumpTestFunction b{0.3, 0.8, 1.0, 0.5};
  for (double x : {-0.4, 0.0, 0.3, 0.77}) {
    CHECK(b.g_prime(x) == doctest::Approx(oracle::derivative([&](double y) { return b.g(y); }, x)).epsilon(1e-8));
    CHECK(b.g_integral(x) ==
          doctest::Approx(oracle::simpson([&](double y) { return b.g(y); }, -0.5, x)).epsilon(1e-10));
  }
  CHECK(b.h_prime(1.2) == doctest::Approx(oracle::derivative([&](double t) { return b.h(t); }, 1.2)).epsilon(1e-8));
  CHECK(b.g(2.0) == 0.0);
}

TEST_CASE("measure pair and moments") {
  const auto one = build_measure_pair(ParticleSystem::make({0.0}, {1.5}, {1.0}));
  CHECK(one.x == std::vector<double>{0.0});
  CHECK(one.rho_mass() == 1.0);
  CHECK(one.p_mass() == 1.5);
  const auto at2 = build_measure_pair(ParticleSystem::make({2.0}, {0.0}, {1.0}));
  CHECK(moment(at2, [](double x) { return x; }, MeasureComponent::Rho) == 2.0);
  const auto s = ParticleSystem::make({0.0, 0.0, 1.0}, {1.0, 1.0, -2.0}, {0.25, 0.25, 0.5});
  const auto mp = build_measure_pair(s);
  CHECK(mp.x.size() == 2);
  CHECK(moment(mp, [](double) { return 1.0; }, MeasureComponent::Rho) == doctest::Approx(1.0));
  CHECK(moment(mp, [](double) { return 1.0; }, MeasureComponent::P) == doctest::Approx(-0.5));
}
