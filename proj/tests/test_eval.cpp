#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "cvf/datagen/linear_ode.hpp"
#include "cvf/eval/diagnose.hpp"
#include "cvf/eval/metrics.hpp"
#include "cvf/eval/protocols.hpp"

using namespace cvf;
using Catch::Approx;

namespace {

TrajectoryDataset oscillator(std::size_t n_traj, std::size_t n_steps, double dt) {
  return generate_linear_ode(damped_oscillator(0.2), random_initial_states(n_traj, 2, 1.0, 7), dt, n_steps);
}

EvalConfig gcs_config(double delta_min) {
  EvalConfig c;
  c.gcs.delta_min = delta_min;
  return c;
}

bool same_numbers(const MetricsRecord& a, const MetricsRecord& b) {
  return a.step_rmse == b.step_rmse && a.rollout_rmse == b.rollout_rmse && a.nfe_avg == b.nfe_avg &&
         a.segments == b.segments;
}

}  // namespace

TEST_CASE("step RMSE") {
  CHECK(step_rmse({{1.0, 2.0}}, {{1.0, 2.0}}) == 0.0);
  CHECK(step_rmse({{1.25, 2.25}, {0.25, -0.75}}, {{1.0, 2.0}, {0.0, -1.0}}) == Approx(0.25));
  CHECK(step_rmse({{0.3}, {0.4}}, {{0.0}, {0.0}}) == Approx(std::sqrt(0.125)));
  CHECK(std::abs(step_rmse({{0.3}, {0.4}}, {{0.0}, {0.0}}) - 0.353553) < 1e-6);
  // symmetric in its arguments
  CHECK(step_rmse({{0.0}, {0.0}}, {{0.3}, {-0.4}}) == step_rmse({{0.3}, {-0.4}}, {{0.0}, {0.0}}));
  CHECK_THROWS_AS(step_rmse({{1.0}}, {{1.0, 2.0}}), ShapeError);
}

TEST_CASE("rollout RMSE") {
  const std::vector<State> a{{1.0}, {2.0}}, b{{1.0}, {2.2}};
  CHECK(rollout_rmse(a, a) == 0.0);
  CHECK(rollout_rmse(a, b) == rollout_rmse(b, a));
  const std::vector<double> flat{0.1, 0.1}, ramp{0.0, 0.2};
  CHECK(rollout_rmse(flat) == Approx(0.1));
  CHECK(rollout_rmse(ramp) == Approx(std::sqrt(0.02)));
  CHECK(std::abs(rollout_rmse(ramp) - 0.141421) < 1e-6);
}

TEST_CASE("cost per RMSE drop") {
  const auto c = cped(3.0, 0.009, 21.5, 0.094);
  REQUIRE(c);
  CHECK(std::abs(*c - (3.0 / 21.5) / 0.085) < 1e-12);
  CHECK(std::abs(*c - 1.64) <= 0.01);
  CHECK(std::round(*c * 10) / 10 == Approx(1.6));
  CHECK_FALSE(cped(3.0, 0.094, 3.0, 0.094));
  CHECK_FALSE(cped(3.0, 0.2, 3.0, 0.1));
  CHECK(*cped(1.0, 0.5, 1.0, 1.0) == Approx(2.0));

  MetricsRecord m, base;
  m.nfe_avg = 3.0;
  m.rollout_rmse = 0.009;
  base.nfe_avg = 21.5;
  base.rollout_rmse = 0.094;
  attach_cped(m, base);
  CHECK(*m.cped == Approx(1.6416).epsilon(1e-4));
  attach_cped(base, base);
  CHECK(base.cped_undefined);
}

TEST_CASE("seed aggregation and CSV layout") {
  std::vector<MetricsRecord> rows;
  for (std::uint64_t s = 0; s < 4; ++s) {
    MetricsRecord r;
    r.protocol = "direct";
    r.seed = s;
    r.step_rmse = 1.0 + static_cast<double>(s);
    r.rollout_rmse = 2.0;
    r.nfe_avg = 3.0;
    rows.push_back(r);
  }
  const auto sum = summarize(rows);
  CHECK(sum.mean.step_rmse == Approx(2.5));
  CHECK(sum.stddev.step_rmse == Approx(std::sqrt(1.25)));  // population
  CHECK(sum.stddev.rollout_rmse == 0.0);
  std::ostringstream os;
  write_metrics_csv(os, rows, true);
  const auto text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 + 2);
  CHECK(text.rfind("protocol,seed,step_rmse,rollout_rmse,nfe_avg,cped\n", 0) == 0);
  CHECK(text.find("\ndirect,mean,") != std::string::npos);
  CHECK(text.find("\ndirect,std,") != std::string::npos);
  CHECK(median({3.0, 1.0, 2.0, 10.0}) == 2.5);
}

TEST_CASE("oracle model under the time-informed protocol") {
  const auto d = oscillator(3, 21, 0.1);
  LinearSecantField phys(damped_oscillator(0.2));
  const auto st = NormStats::identity(2);
  NormalizedView view(phys, st);
  const auto m = eval_time_informed(view, st, d, gcs_config(0.05));
  CHECK(m.rollout_rmse < 1e-6);
  CHECK(m.step_rmse < 1e-6);
  CHECK(m.nfe_avg <= 3.0);
  CHECK(m.segments == 3 * 20);
  CHECK(m.diverged == 0);
}

TEST_CASE("grid interval at delta_min uses the single-evaluation path") {
  const auto d = oscillator(2, 11, 0.1);
  LinearSecantField phys(damped_oscillator(0.2));
  const auto st = NormStats::identity(2);
  NormalizedView view(phys, st);
  const auto m = eval_time_informed(view, st, d, gcs_config(0.1));
  CHECK(m.nfe_avg == 1.0);
}

TEST_CASE("single-interval dataset: step and rollout RMSE coincide") {
  const auto d = oscillator(3, 2, 0.3);
  FunctionField rough(2, [](std::span<const double> s, double) { return std::vector<double>{s[1], -0.8 * s[0]}; });
  const auto st = NormStats::identity(2);
  const auto m = eval_time_informed(rough, st, d, gcs_config(0.05));
  CHECK(m.step_rmse > 0.0);
  CHECK(m.step_rmse == m.rollout_rmse);
}

TEST_CASE("direct protocol with unit segments equals time-informed") {
  const auto d = oscillator(3, 16, 0.1);
  FunctionField rough(2, [](std::span<const double> s, double dt) {
    return std::vector<double>{s[1] * (1.0 - 0.3 * dt), -s[0] - 0.2 * s[1] + 0.1 * dt};
  });
  const auto st = NormStats::identity(2);
  for (auto solver : {SolverKind::gcs, SolverKind::euler, SolverKind::rk4, SolverKind::rk45}) {
    auto cfg = gcs_config(0.03);
    cfg.solver = solver;
    const auto a = eval_time_informed(rough, st, d, cfg);
    const auto b = eval_direct_autoregressive(rough, st, d, 1, cfg);
    CHECK(same_numbers(a, b));
    CHECK(a.protocol == "informed");
    CHECK(b.protocol == "direct");
  }
}

TEST_CASE("oracle model over the full horizon in one request") {
  const auto d = oscillator(3, 41, 0.1);
  LinearSecantField phys(damped_oscillator(0.2));
  NormStats st = NormStats::identity(2);
  st.mu_s = {0.1, 0.0};
  st.sigma_s = {0.8, 1.2};
  NormalizedView view(phys, st);
  const auto m = eval_direct_autoregressive(view, st, d, 0, gcs_config(0.1));
  CHECK(m.segments == 3);
  CHECK(m.rollout_rmse < 1e-6);
  CHECK(m.nfe_avg == 3.0);
}

TEST_CASE("segments include a final partial one") {
  CHECK(segment_bounds(11, 4) == std::vector<std::size_t>{0, 4, 8, 10});
  CHECK(segment_bounds(11, 10) == std::vector<std::size_t>{0, 10});
  CHECK(segment_bounds(11, 20) == std::vector<std::size_t>{0, 10});
  CHECK_THROWS_AS(segment_bounds(1, 1), ValidationError);
}

TEST_CASE("reported NFE equals the instrumented count of the chained rollout") {
  const auto d = oscillator(2, 13, 0.1);
  FunctionField rough(2, [](std::span<const double> s, double dt) {
    return std::vector<double>{s[1] * (1.0 + dt * dt), -s[0] + 0.5 * dt * s[1]};
  });
  const auto st = NormStats::identity(2);
  const auto cfg = gcs_config(0.05);
  const auto m = eval_direct_autoregressive(rough, st, d, 5, cfg);

  CountingField counted(rough);
  for (std::size_t t = 0; t < d.n_traj; ++t) {
    State s = d.state_copy(t, 0);
    for (auto [a, b] : {std::pair<std::size_t, std::size_t>{0, 5}, {5, 10}, {10, 12}}) {
      const auto r = rollout_gcs(counted, st, s, d.times[b] - d.times[a], d.times[b] - d.times[a], cfg.gcs);
      s = r.final_state();
    }
  }
  CHECK(m.segments == 6);
  CHECK(m.nfe_avg * 6.0 == static_cast<double>(counted.count()));
}

TEST_CASE("thread count does not change the numbers") {
  const auto d = oscillator(7, 21, 0.1);
  FunctionField rough(2, [](std::span<const double> s, double dt) {
    return std::vector<double>{s[1] * (1.0 + dt), -s[0]};
  });
  const auto st = NormStats::identity(2);
  auto cfg = gcs_config(0.05);
  const auto one = eval_direct_autoregressive(rough, st, d, 4, cfg);
  cfg.threads = 4;
  const auto four = eval_direct_autoregressive(rough, st, d, 4, cfg);
  CHECK(same_numbers(one, four));
}

TEST_CASE("collapsed constant field hides its error from the consistency check") {
  const auto d = oscillator(4, 41, 0.1);
  const auto st = NormStats::identity(2);
  const auto collapsed = collapsed_field(d, st);
  LinearSecantField phys(damped_oscillator(0.2));
  NormalizedView oracle(phys, st);

  std::vector<State> probes;
  for (std::size_t t = 0; t < d.n_traj; ++t) probes.push_back(d.state_copy(t, 0));
  const auto rows = rupture_profile(collapsed, st, probes, log_spaced(0.05, 4.0, 9));
  for (const auto& r : rows) CHECK(r.nre < 1e-3);

  const auto cfg = gcs_config(0.1);
  const auto bad = eval_direct_autoregressive(collapsed, st, d, 0, cfg);
  const auto good = eval_direct_autoregressive(oracle, st, d, 0, cfg);
  CHECK(bad.nfe_avg == 3.0);  // accepted without a single cut
  CHECK(bad.rollout_rmse > 5.0 * good.rollout_rmse);
  CHECK(bad.rollout_rmse > 0.1);
}

TEST_CASE("rupture profile separates the two residual terms") {
  const auto sys = damped_oscillator(0.2);
  const auto st = NormStats::identity(2);
  const std::vector<State> probes{{1.0, 0.0}, {0.3, -0.8}, {-0.5, 0.5}};
  const auto grid = log_spaced(0.01, 1.0, 5);
  CHECK(grid.front() == 0.01);
  CHECK(grid.back() == 1.0);
  CHECK(grid[2] == Approx(0.1));

  const auto exact = oracle_variant_field(sys, OracleVariant::exact);
  for (const auto& r : rupture_profile(exact, st, probes, grid)) {
    CHECK(r.nre < 1e-8);
    CHECK(r.term1_rms + r.term2_rms < 1.0);  // both present but cancelling
  }
  const auto frozen = oracle_variant_field(sys, OracleVariant::frozen);
  for (const auto& r : rupture_profile(frozen, st, probes, grid)) {
    CHECK(r.term1_rms == 0.0);
    CHECK(r.term2_rms > 0.0);
  }
  const auto drift = oracle_variant_field(sys, OracleVariant::dt_proportional);
  // Mismatch grows like kappa dt, transport like dt (1 + kappa dt)^2.
  for (const auto& r : rupture_profile(drift, st, probes, grid))
    if (r.dt <= 0.1) CHECK(r.term1_rms > 2.0 * r.term2_rms);
  CHECK_THROWS_AS(rupture_profile(exact, st, {}, grid), InputError);

  std::ostringstream os;
  write_profile_csv(os, rupture_profile(exact, st, probes, grid));
  CHECK(os.str().rfind("dt,nre,term1_rms,term2_rms\n", 0) == 0);
}
