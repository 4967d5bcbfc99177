#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "etlqg/estimators.hpp"
#include "etlqg/model.hpp"
#include "etlqg/policies.hpp"
#include "etlqg/riccati.hpp"
#include "etlqg/trajectory.hpp"

namespace etlqg {

enum class TriggerKind { kVoi, kPeriodic, kAlways, kNever, kExactScalarDp };

// Triggering policy selector. kVoi evaluates voi_perfect or voi_imperfect
// depending on the pattern; kExactScalarDp evaluates exact_voi_scalar and
// needs `table`; kPeriodic follows `periodic`.
struct TriggerPolicy {
  TriggerKind kind = TriggerKind::kVoi;
  PeriodicSpec periodic{};
  std::shared_ptr<const ScalarDpTable> table;
};

using ControlLaw = std::function<Vector(int k, const Vector& xhat)>;

// Certainty-equivalence law u = -L_k xhat bound to a Riccati solution.
ControlLaw ce_law(const RiccatiSolution& ric);

// One run's noise realization, pre-sampled in the fixed order
// x0, w_0..w_N, v_0..v_N so policy choices can never shift the stream.
struct NoisePanel {
  Vector x0;
  std::vector<Vector> w;
  std::vector<Vector> v;  // imperfect pattern only
};

NoisePanel sample_noise_panel(const TimeVaryingLinearSystem& sys,
                              RngStream& rng);

// Executes the closed loop for k = 0..N on a fixed noise panel:
//   1. observe (y_k under the imperfect pattern)
//   2. advance the trigger-side estimate with y_k
//   3. form trigger signals against the current controller belief
//   4. decide delta_k
//   5. u_k from the controller belief (which reflects delta_{k-1} only)
//   6. accumulate x'Qx + u'Ru and theta_k delta_k
//   7. advance the controller belief with (delta_k, payload)
//   8. step the process with w_k
// then adds the terminal cost. The controller belief consuming (delta_k,
// payload_k) is advanced strictly after u_k is produced, which realizes the
// one-step transmission delay; the step asserts the belief's clock.
TrajectoryRecord run_trajectory_on_panel(const TimeVaryingLinearSystem& sys,
                                         const CostSpec& cost,
                                         const RiccatiSolution& ric,
                                         const TriggerPolicy& trigger,
                                         const ControlLaw& control,
                                         const NoisePanel& panel,
                                         std::uint64_t seed,
                                         std::uint64_t stream_index);

// Samples a noise panel from rng and runs on it.
TrajectoryRecord run_trajectory(const TimeVaryingLinearSystem& sys,
                                const CostSpec& cost,
                                const RiccatiSolution& ric,
                                const TriggerPolicy& trigger,
                                const ControlLaw& control, RngStream& rng);

struct RunSummary {
  int n_runs = 0;
  double j_mean = 0.0, j_se = 0.0;
  double rate_mean = 0.0, rate_se = 0.0;
  double psi_mean = 0.0, psi_se = 0.0;
  double tx_mean = 0.0, tx_se = 0.0;
  int tx_min = 0, tx_max = 0;
};

// n_runs independent trajectories with stream_index = run index; means and
// standard errors accumulated in run order. Requires n_runs >= 2.
RunSummary monte_carlo(const TimeVaryingLinearSystem& sys,
                       const CostSpec& cost, const RiccatiSolution& ric,
                       const TriggerPolicy& trigger, const ControlLaw& control,
                       int n_runs, std::uint64_t base_seed);

struct PairedDiff {
  double mean = 0.0;  // mean of psi_a - psi_b over paired runs
  double se = 0.0;    // standard error of the paired differences
  int n = 0;
};

// Runs both triggers on identical noise panels (common random numbers),
// pairing run r of A with run r of B.
PairedDiff paired_comparison(const TimeVaryingLinearSystem& sys,
                             const CostSpec& cost, const RiccatiSolution& ric,
                             const TriggerPolicy& trigger_a,
                             const TriggerPolicy& trigger_b,
                             const ControlLaw& control, int n_runs,
                             std::uint64_t base_seed);

struct TradeoffPoint {
  double lambda = 0.0;
  double rate_mean = 0.0, rate_se = 0.0;
  double j_mean = 0.0, j_se = 0.0;
  int n_runs = 0;
};

// For each lambda: reprice theta_k = ell_k * lambda and run monte_carlo with
// the VoI trigger and certainty-equivalence control. The Riccati solution is
// lambda-independent and shared; identical (base_seed, run index) pairs give
// common random numbers across the whole sweep. Output sorted by lambda.
std::vector<TradeoffPoint> lambda_sweep(const TimeVaryingLinearSystem& sys,
                                        const CostSpec& cost_template,
                                        const RiccatiSolution& ric,
                                        const std::vector<double>& lambdas,
                                        int n_runs, std::uint64_t base_seed);

}  // namespace etlqg
