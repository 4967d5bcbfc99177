#include "etlqg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace etlqg {

namespace {

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

Stats mean_se(const std::vector<double>& xs) {
  const size_t n = xs.size();
  Stats s;
  if (n == 0) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(n);
  if (n >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(n - 1) /
                     static_cast<double>(n));
  }
  return s;
}

}  // namespace

ControlLaw ce_law(const RiccatiSolution& ric) {
  return [ric](int k, const Vector& xhat) { return ce_control(ric, k, xhat); };
}

NoisePanel sample_noise_panel(const TimeVaryingLinearSystem& sys,
                              RngStream& rng) {
  const int N = sys.horizon;
  NoisePanel panel;
  panel.x0 = sample_gaussian(sys.m0, sys.M0, rng);
  panel.w.reserve(static_cast<size_t>(N) + 1);
  Vector zero_n = Vector::Zero(sys.state_dim());
  for (int k = 0; k <= N; ++k) {
    panel.w.push_back(sample_gaussian(zero_n, sys.W_k(k), rng));
  }
  if (sys.pattern == InfoPattern::kImperfect) {
    panel.v.reserve(static_cast<size_t>(N) + 1);
    Vector zero_p = Vector::Zero(sys.output_dim());
    for (int k = 0; k <= N; ++k) {
      panel.v.push_back(sample_gaussian(zero_p, sys.V_k(k), rng));
    }
  }
  return panel;
}

TrajectoryRecord run_trajectory_on_panel(const TimeVaryingLinearSystem& sys,
                                         const CostSpec& cost,
                                         const RiccatiSolution& ric,
                                         const TriggerPolicy& trigger,
                                         const ControlLaw& control,
                                         const NoisePanel& panel,
                                         std::uint64_t seed,
                                         std::uint64_t stream_index) {
  const int N = sys.horizon;
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const bool imperfect = sys.pattern == InfoPattern::kImperfect;
  const size_t steps = static_cast<size_t>(N) + 1;

  if (cost.horizon != N) {
    throw InvalidInputError("run_trajectory: cost horizon mismatch");
  }
  if (panel.x0.size() != n || panel.w.size() != steps ||
      (imperfect && panel.v.size() != steps)) {
    throw InvalidInputError("run_trajectory: noise panel shape mismatch");
  }
  if (!control) {
    throw InvalidInputError("run_trajectory: missing control law");
  }

  TrajectoryRecord tr;
  tr.horizon = N;
  tr.pattern = sys.pattern;
  tr.seed = seed;
  tr.stream_index = stream_index;
  tr.x.reserve(steps + 1);
  tr.u.reserve(steps);
  tr.w.reserve(steps);
  tr.delta.reserve(steps);
  tr.voi.reserve(steps);
  tr.xhat.reserve(steps);
  tr.P.reserve(steps);
  tr.stage_cost.reserve(steps);
  if (imperfect) {
    tr.y.reserve(steps);
    tr.v.reserve(steps);
    tr.xcheck.reserve(steps);
    tr.Sigma.reserve(steps);
    tr.eps.reserve(steps);
    tr.nu.reserve(steps);
  }

  ControllerBelief cb{sys.m0, sys.M0, 0};
  TriggerBelief tb;
  Vector x = panel.x0;
  Vector u_prev;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int k = 0; k <= N; ++k) {
    tr.x.push_back(x);

    Vector y;
    if (imperfect) {
      y = measure(sys, k, x, panel.v[static_cast<size_t>(k)]);
      tb = (k == 0) ? trigger_kf_init(sys, y)
                    : trigger_kf_step(tb, sys, u_prev, y);
    } else {
      tb = TriggerBelief{x, Matrix::Zero(n, n), k};
    }

    if (cb.k != k) {
      throw InvalidInputError("run_trajectory: controller belief clock skew");
    }
    TriggerSignals sig = trigger_signals(tb, cb, sys, imperfect ? y : x);

    const double theta = cost.theta_k(k);
    double voi = nan;
    int d = 0;
    switch (trigger.kind) {
      case TriggerKind::kAlways:
        d = 1;
        break;
      case TriggerKind::kNever:
        d = 0;
        break;
      case TriggerKind::kPeriodic:
        d = periodic_trigger(trigger.periodic, k);
        break;
      case TriggerKind::kVoi: {
        VoiResult r = imperfect
                          ? voi_imperfect(ric, sys, k, sig, tb.Sigma, cb.P,
                                          theta)
                          : voi_perfect(ric, sys, k, sig.e, theta);
        voi = r.value;
        d = r.transmit ? 1 : 0;
        break;
      }
      case TriggerKind::kExactScalarDp: {
        if (!trigger.table) {
          throw InvalidInputError(
              "run_trajectory: exact-DP trigger needs its table");
        }
        VoiResult r =
            exact_voi_scalar(*trigger.table, ric, k, sig.e(0), theta);
        voi = r.value;
        d = r.transmit ? 1 : 0;
        break;
      }
    }

    Vector u = control(k, cb.xhat);
    if (u.size() != m) {
      throw DimensionError("run_trajectory: control law output dimension");
    }

    double perf = x.dot(cost.Q_k(k) * x) + u.dot(cost.R_k(k) * u);
    double priced = theta * d;
    tr.stage_cost.push_back(perf + priced);
    tr.performance_sum += perf;
    tr.theta_sum += priced;
    tr.weighted_rate_sum += cost.ell_k(k) * d;
    tr.transmissions += d;

    tr.u.push_back(u);
    tr.delta.push_back(d);
    tr.voi.push_back(voi);
    tr.xhat.push_back(cb.xhat);
    tr.P.push_back(cb.P);
    if (imperfect) {
      tr.y.push_back(y);
      tr.v.push_back(panel.v[static_cast<size_t>(k)]);
      tr.xcheck.push_back(tb.xcheck);
      tr.Sigma.push_back(tb.Sigma);
      tr.eps.push_back(sig.eps);
      tr.nu.push_back(sig.nu);
    }

    // One-step delay: the belief consumes (delta_k, payload_k) strictly after
    // u_k has been produced above.
    if (imperfect) {
      cb = controller_intermittent_step(
               cb, sys, u, d,
               d ? std::optional<Vector>(y) : std::nullopt)
               .belief;
    } else {
      cb = perfect_controller_step(
          cb, sys, u, d, d ? std::optional<Vector>(x) : std::nullopt);
    }
    if (cb.k != k + 1) {
      throw InvalidInputError("run_trajectory: belief failed to advance");
    }

    tr.w.push_back(panel.w[static_cast<size_t>(k)]);
    x = step_process(sys, k, x, u, panel.w[static_cast<size_t>(k)]);
    u_prev = u;
  }

  tr.x.push_back(x);
  tr.terminal_cost = x.dot(cost.Q_k(N + 1) * x);
  tr.performance_sum += tr.terminal_cost;
  return tr;
}

TrajectoryRecord run_trajectory(const TimeVaryingLinearSystem& sys,
                                const CostSpec& cost,
                                const RiccatiSolution& ric,
                                const TriggerPolicy& trigger,
                                const ControlLaw& control, RngStream& rng) {
  NoisePanel panel = sample_noise_panel(sys, rng);
  return run_trajectory_on_panel(sys, cost, ric, trigger, control, panel,
                                 rng.seed(), rng.stream_index());
}

RunSummary monte_carlo(const TimeVaryingLinearSystem& sys,
                       const CostSpec& cost, const RiccatiSolution& ric,
                       const TriggerPolicy& trigger, const ControlLaw& control,
                       int n_runs, std::uint64_t base_seed) {
  if (n_runs < 2) {
    throw InvalidInputError("monte_carlo: n_runs must be >= 2");
  }
  std::vector<double> js, rates, psis, txs;
  js.reserve(n_runs);
  rates.reserve(n_runs);
  psis.reserve(n_runs);
  txs.reserve(n_runs);
  int tx_min = 0, tx_max = 0;
  for (int r = 0; r < n_runs; ++r) {
    RngStream rng(base_seed, static_cast<std::uint64_t>(r));
    TrajectoryRecord tr =
        run_trajectory(sys, cost, ric, trigger, control, rng);
    js.push_back(tr.j());
    rates.push_back(tr.rate());
    psis.push_back(tr.psi());
    txs.push_back(static_cast<double>(tr.transmissions));
    if (r == 0) {
      tx_min = tx_max = tr.transmissions;
    } else {
      tx_min = std::min(tx_min, tr.transmissions);
      tx_max = std::max(tx_max, tr.transmissions);
    }
  }
  RunSummary s;
  s.n_runs = n_runs;
  Stats j = mean_se(js), rate = mean_se(rates), psi = mean_se(psis),
        tx = mean_se(txs);
  s.j_mean = j.mean;
  s.j_se = j.se;
  s.rate_mean = rate.mean;
  s.rate_se = rate.se;
  s.psi_mean = psi.mean;
  s.psi_se = psi.se;
  s.tx_mean = tx.mean;
  s.tx_se = tx.se;
  s.tx_min = tx_min;
  s.tx_max = tx_max;
  return s;
}

PairedDiff paired_comparison(const TimeVaryingLinearSystem& sys,
                             const CostSpec& cost, const RiccatiSolution& ric,
                             const TriggerPolicy& trigger_a,
                             const TriggerPolicy& trigger_b,
                             const ControlLaw& control, int n_runs,
                             std::uint64_t base_seed) {
  if (n_runs < 1) {
    throw InvalidInputError("paired_comparison: n_runs must be >= 1");
  }
  std::vector<double> diffs;
  diffs.reserve(n_runs);
  for (int r = 0; r < n_runs; ++r) {
    RngStream rng(base_seed, static_cast<std::uint64_t>(r));
    NoisePanel panel = sample_noise_panel(sys, rng);
    TrajectoryRecord ta = run_trajectory_on_panel(
        sys, cost, ric, trigger_a, control, panel, base_seed, r);
    TrajectoryRecord tb = run_trajectory_on_panel(
        sys, cost, ric, trigger_b, control, panel, base_seed, r);
    diffs.push_back(ta.psi() - tb.psi());
  }
  Stats d = mean_se(diffs);
  return {d.mean, d.se, n_runs};
}

std::vector<TradeoffPoint> lambda_sweep(const TimeVaryingLinearSystem& sys,
                                        const CostSpec& cost_template,
                                        const RiccatiSolution& ric,
                                        const std::vector<double>& lambdas,
                                        int n_runs, std::uint64_t base_seed) {
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw InvalidInputError("lambda_sweep: lambda values must be >= 0");
    }
  }
  std::vector<double> sorted = lambdas;
  std::stable_sort(sorted.begin(), sorted.end());

  ControlLaw control = ce_law(ric);
  TriggerPolicy voi_trigger{TriggerKind::kVoi, {}, nullptr};

  std::vector<TradeoffPoint> points;
  points.reserve(sorted.size());
  for (double l : sorted) {
    CostSpec cost = cost_template;
    cost.lambda = l;
    RunSummary s =
        monte_carlo(sys, cost, ric, voi_trigger, control, n_runs, base_seed);
    points.push_back({l, s.rate_mean, s.rate_se, s.j_mean, s.j_se, n_runs});
  }
  return points;
}

}  // namespace etlqg
