#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "cvf/datagen/linear_ode.hpp"
#include "cvf/model.hpp"
#include "cvf/solver/classical.hpp"
#include "cvf/solver/gcs.hpp"
#include "support.hpp"

using namespace cvf;
using Catch::Approx;

namespace {

// psi(dt) = dt^-p with 2^p = 1.5, so the symmetric split residual is exactly
// half the direct velocity at every dt: NRE == 0.5 independent of the step.
FunctionField constant_nre_field() {
  const double p = std::log2(1.5);
  return FunctionField(1, [p](std::span<const double>, double dt) { return std::vector<double>{std::pow(dt, -p)}; });
}

struct TangentFn {
  std::size_t dim;
  std::function<std::vector<double>(std::span<const double>)> fn;
  std::size_t dimension() const { return dim; }
  std::vector<double> operator()(std::span<const double> s) const { return fn(s); }
};

TangentFn linear_decay(double lambda) {
  return {1, [lambda](std::span<const double> s) { return std::vector<double>{lambda * s[0]}; }};
}

}  // namespace

TEST_CASE("step update values") {
  CHECK(std::abs(step_update(0.05, 0.8, 0.2) - std::sqrt(0.2)) < 1e-12);
  CHECK(std::abs(step_update(0.05, 0.8, 0.2) - 0.447214) < 1e-6);
  CHECK(step_update(0.05, 0.05, 10.0) == 0.05);
  CHECK(std::abs(step_update(0.1, 0.5, 0.2) - 0.5) < 1e-12);
  // nre floored at eta
  CHECK(step_update(0.1, 0.5, 0.0) == Approx(std::sqrt(0.1 * 0.5 / kDefaultEta)));
}

TEST_CASE("constant-NRE field converges to the fixed point") {
  const auto field = constant_nre_field();
  const auto st = NormStats::identity(1);
  const std::vector<double> s{0.0};
  CHECK(nre(field, st, s, 0.8) == Approx(0.5).epsilon(1e-7));
  GcsConfig cfg;
  cfg.delta_min = 0.05;
  CountingField counted(field);
  const auto out = gcs_step(counted, st, s, 0.8, cfg);
  REQUIRE(out.proposals.size() >= 3);
  // Independent oracle: tau_{k+1} = sqrt(0.05 tau_k / 0.5).
  double tau = 0.8;
  for (std::size_t k = 0; k < 3; ++k) {
    tau = std::sqrt(0.05 * tau / 0.5);
    CHECK(out.proposals[k] == Approx(tau).epsilon(1e-6));
  }
  CHECK(out.proposals[0] == Approx(0.28284).epsilon(1e-5));
  CHECK(out.proposals[1] == Approx(0.16818).epsilon(1e-4));
  CHECK(out.proposals[2] == Approx(0.12969).epsilon(1e-4));
  CHECK(std::abs(out.accepted_dt - 0.1) < 1e-3 * 0.1);
  CHECK(out.search_iters <= cfg.max_search_iters);
  CHECK(out.nfe == counted.count());
  CHECK(out.nfe == 3 * out.search_iters);
  for (std::size_t k = 1; k < out.proposals.size(); ++k) CHECK(out.proposals[k] <= out.proposals[k - 1]);
}

TEST_CASE("iteration cap bounds the search") {
  const auto field = constant_nre_field();
  GcsConfig cfg;
  cfg.delta_min = 0.05;
  cfg.max_search_iters = 4;
  cfg.converge_eps = 0.0;
  const std::vector<double> s{0.0};
  const auto out = gcs_step(field, NormStats::identity(1), s, 0.8, cfg);
  CHECK(out.search_iters == 4);
  CHECK(out.nfe == 12);
  CHECK(out.accepted_dt == Approx(out.proposals[2]));
}

TEST_CASE("oracle field is accepted in a single round") {
  const auto sys = damped_oscillator(0.2);
  LinearSecantField phys(sys);
  const auto st = NormStats::identity(2);
  NormalizedView view(phys, st);
  GcsConfig cfg;
  cfg.delta_min = 0.1;
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> s{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double req = rng.uniform(0.2, 1.0);
    CountingField counted(view);
    const auto out = gcs_step(counted, st, s, req, cfg);
    CHECK(out.accepted_dt == req);
    CHECK(out.nfe == 3);
    CHECK(counted.count() == 3);
    CHECK(out.search_iters == 1);
  }
}

TEST_CASE("requests at or below delta_min take one evaluation") {
  const auto field = constant_nre_field();
  GcsConfig cfg;
  cfg.delta_min = 0.05;
  const std::vector<double> s{0.0};
  CountingField counted(field);
  auto out = gcs_step(counted, NormStats::identity(1), s, 0.05, cfg);
  CHECK(out.nfe == 1);
  CHECK(counted.count() == 1);
  CHECK(out.accepted_dt == 0.05);
  out = gcs_step(field, NormStats::identity(1), s, 0.01, cfg);
  CHECK(out.nfe == 1);
  CHECK(out.accepted_dt == 0.01);
}

TEST_CASE("floor branch accepts delta_min with one extra evaluation") {
  // NRE == 10 everywhere: psi(dt) = dt^-p with 2^p = 11.
  const double p = std::log2(11.0);
  FunctionField field(1, [p](std::span<const double>, double dt) { return std::vector<double>{std::pow(dt, -p)}; });
  GcsConfig cfg;
  cfg.delta_min = 0.05;
  const std::vector<double> s{0.0};
  CountingField counted(field);
  const auto out = gcs_step(counted, NormStats::identity(1), s, 0.1, cfg);
  CHECK(out.accepted_dt == 0.05);
  CHECK(out.nfe == 4);
  CHECK(counted.count() == 4);
  CHECK(out.velocity[0] == Approx(std::pow(0.05, -p)));
}

TEST_CASE("accepted dt respects floor and request for random fields") {
  Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    const double p = rng.uniform(-2.0, 4.0);
    const double amp = rng.uniform(-2.0, 2.0);
    FunctionField field(1, [p, amp](std::span<const double> s, double dt) {
      return std::vector<double>{amp * std::pow(dt, -p) + s[0]};
    });
    GcsConfig cfg;
    cfg.delta_min = rng.uniform(0.01, 0.2);
    const std::vector<double> s{rng.uniform(-1, 1)};
    const double req = rng.uniform(0.01, 2.0);
    const auto out = gcs_step(field, NormStats::identity(1), s, req, cfg);
    CHECK(out.accepted_dt <= req);
    if (req > cfg.delta_min) CHECK(out.accepted_dt >= cfg.delta_min);
    CHECK(out.search_iters <= cfg.max_search_iters);
  }
}

TEST_CASE("non-finite NRE raises a solver error with the state") {
  FunctionField field(1, [](std::span<const double>, double) { return std::vector<double>{NAN}; });
  GcsConfig cfg;
  cfg.delta_min = 0.05;
  const std::vector<double> s{0.25};
  try {
    gcs_step(field, NormStats::identity(1), s, 0.5, cfg);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.state() == s);
    CHECK(e.dt() == 0.5);
  }
}

TEST_CASE("oracle rollout matches the matrix exponential") {
  const auto sys = damped_oscillator(0.2);
  LinearSecantField phys(sys);
  NormStats st = NormStats::identity(2);
  st.mu_s = {0.1, -0.2};
  st.sigma_s = {1.3, 0.7};
  st.mu_v = {0.05, 0.0};
  st.sigma_v = {0.9, 1.1};
  NormalizedView view(phys, st);
  GcsConfig cfg;
  cfg.delta_min = 0.05;
  const std::vector<double> s0{1.0, -0.5};
  const auto m = testing::expm_taylor(sys.a, 2, 1.0);
  const std::vector<double> truth{m[0] * s0[0] + m[1] * s0[1], m[2] * s0[0] + m[3] * s0[1]};
  for (double sched : {0.0, 0.3, 0.07}) {
    const auto r = rollout_gcs(view, st, s0, 1.0, sched, cfg);
    CHECK_FALSE(r.diverged);
    CHECK(r.final_time() == 1.0);
    CHECK(std::abs(r.final_state()[0] - truth[0]) < 1e-6);
    CHECK(std::abs(r.final_state()[1] - truth[1]) < 1e-6);
    CHECK(std::accumulate(r.dts.begin(), r.dts.end(), 0.0) == Approx(1.0).epsilon(1e-14));
    CHECK(r.total_nfe == std::accumulate(r.nfe.begin(), r.nfe.end(), std::size_t{0}));
  }
}

TEST_CASE("horizon equal to delta_min is a single evaluation") {
  const auto field = constant_nre_field();
  GcsConfig cfg;
  cfg.delta_min = 0.05;
  CountingField counted(field);
  const std::vector<double> s0{1.0};
  const auto r = rollout_gcs(counted, NormStats::identity(1), s0, 0.05, 0.0, cfg);
  CHECK(r.steps() == 1);
  CHECK(r.total_nfe == 1);
  CHECK(counted.count() == 1);
}

TEST_CASE("batch GCS matches per-sample rollouts and prunes settled samples") {
  // NRE grows with |s|: sample 0 is accepted at once, sample 1 needs cuts.
  FunctionField field(1, [](std::span<const double> s, double dt) {
    return std::vector<double>{1.0 + s[0] * s[0] * dt};
  });
  GcsConfig cfg;
  cfg.delta_min = 0.02;
  const auto st = NormStats::identity(1);
  const std::vector<State> s0{{0.01}, {3.0}};
  CountingField counted(field);
  const auto batch = rollout_gcs_batch(counted, st, s0, 0.4, 0.4, cfg);
  REQUIRE(batch.size() == 2);
  std::size_t total = 0;
  for (std::size_t b = 0; b < 2; ++b) {
    const auto single = rollout_gcs(field, st, s0[b], 0.4, 0.4, cfg);
    CHECK(batch[b].dts == single.dts);
    CHECK(batch[b].nfe == single.nfe);
    CHECK(batch[b].states == single.states);
    total += batch[b].total_nfe;
  }
  CHECK(batch[0].nfe.front() == 3);
  CHECK(batch[1].nfe.front() > 3);
  CHECK(counted.count() == total);
}

TEST_CASE("divergence truncates the rollout") {
  FunctionField field(1, [](std::span<const double> s, double) { return std::vector<double>{10.0 * s[0]}; });
  GcsConfig cfg;
  cfg.delta_min = 0.5;
  cfg.divergence_bound = 100.0;
  const std::vector<double> s0{1.0};
  const auto r = rollout_gcs(field, NormStats::identity(1), s0, 10.0, 0.5, cfg);
  CHECK(r.diverged);
  CHECK(r.final_time() < 10.0);
}

TEST_CASE("fixed-step integrators") {
  const std::vector<double> one{1.0};
  TangentFn zero{2, [](std::span<const double>) { return std::vector<double>{0.0, 0.0}; }};
  const std::vector<double> s0{0.3, -0.7};
  const auto still = rollout_fixed(zero, s0, 1.0, 0.1, FixedScheme::euler);
  for (const auto& s : still.states) CHECK(s == s0);

  const auto e = rollout_fixed(linear_decay(-1.0), one, 1.0, 0.1, FixedScheme::euler);
  CHECK(e.steps() == 10);
  CHECK(e.total_nfe == 10);
  CHECK(e.final_state()[0] == Approx(std::pow(0.9, 10)).epsilon(1e-12));
  CHECK(std::abs(e.final_state()[0] - 0.348678) < 1e-6);

  const auto rk = rollout_fixed(linear_decay(-1.0), one, 1.0, 0.5, FixedScheme::rk4);
  CHECK(rk.total_nfe == 8);
  // Two RK4 steps multiply by the degree-4 Taylor factor of e^-h.
  const double h = 0.5, g = 1 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24;
  CHECK(rk.final_state()[0] == Approx(g * g).epsilon(1e-14));
  CHECK(std::abs(rk.final_state()[0] - std::exp(-1.0)) <= 3e-4);
  const auto rk_fine = rollout_fixed(linear_decay(-1.0), one, 1.0, 0.1, FixedScheme::rk4);
  CHECK(std::abs(rk_fine.final_state()[0] - std::exp(-1.0)) <= 1e-6);

  const auto clipped = rollout_fixed(linear_decay(-1.0), one, 0.25, 0.1, FixedScheme::euler);
  CHECK(clipped.steps() == 3);
  CHECK(clipped.dts.back() == Approx(0.05));
  CHECK(clipped.final_time() == 0.25);
}

TEST_CASE("tangent adapter runs a secant model through fixed steps") {
  const auto sys = scalar_decay(-1.0);
  LinearSecantField phys(sys);
  const auto st = NormStats::identity(1);
  NormalizedView view(phys, st);
  TangentAdapter tangent(view, st, 1e-8);
  const std::vector<double> one{1.0};
  const auto r = rollout_fixed(tangent, one, 1.0, 0.1, FixedScheme::euler);
  CHECK(r.final_state()[0] == Approx(std::pow(0.9, 10)).epsilon(1e-6));
}

TEST_CASE("adaptive Dormand-Prince") {
  const std::vector<double> one{1.0};
  const auto r = rollout_adaptive_rk45(linear_decay(-1.0), one, 2.0);
  CHECK(std::abs(r.final_state()[0] - std::exp(-2.0)) <= 1e-4 + 1e-3 * std::exp(-2.0));
  CHECK(r.final_time() == 2.0);

  TangentFn zero{1, [](std::span<const double>) { return std::vector<double>{0.0}; }};
  const auto z = rollout_adaptive_rk45(zero, one, 5.0);
  CHECK(z.steps() == 1);
  CHECK(z.total_nfe == 7);

  const auto mild = rollout_adaptive_rk45(linear_decay(-1.0), one, 1.0);
  const auto stiff = rollout_adaptive_rk45(linear_decay(-50.0), one, 1.0);
  CHECK(stiff.steps() > 3 * mild.steps());

  // Instrumented count equals the reported NFE.
  std::size_t calls = 0;
  TangentFn counted{1, [&](std::span<const double> s) {
                      ++calls;
                      return std::vector<double>{-3.0 * s[0]};
                    }};
  const auto c = rollout_adaptive_rk45(counted, one, 3.0);
  CHECK(c.total_nfe == calls);
}

TEST_CASE("trace CSV has one row per recorded state") {
  const std::vector<double> one{1.0, 2.0};
  TangentFn f{2, [](std::span<const double> s) { return std::vector<double>{-s[0], -s[1]}; }};
  const auto r = rollout_fixed(f, one, 0.3, 0.1, FixedScheme::euler);
  std::ostringstream os;
  write_trace_csv(os, r, 2);
  const auto text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  CHECK(text.rfind("t,dt,nfe,rms_c0,rms_c1\n", 0) == 0);
  const auto d = rollout_to_dataset(r, 2, {1});
  CHECK(d.n_steps == 4);
  CHECK(d.state(0, 3)[1] == r.final_state()[1]);
}
