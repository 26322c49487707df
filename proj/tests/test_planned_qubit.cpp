#include <doctest.h>

#include "core/channel.hpp"
#include "core/planner.hpp"

using namespace ritherm;

// Planner output for a loose target, pushed through the sampled channel.
TEST_CASE("planned single-qubit settings reach twice the target") {
  const double beta = 2.0, epsilon = 0.1;
  const Plan plan = plan_single_qubit(1.0, 0.0, beta, epsilon);
  const Hamiltonian h = make_qubit(1.0);
  ChannelParams p;
  p.alpha = plan.alpha;
  p.t = plan.t;
  p.beta = beta;
  p.gamma = FixedGamma{1.0};
  p.n_samples = 8;
  p.seed = 12;
  const auto ens = run_trajectories(h, DensityMatrix::maximally_mixed(2), p, plan.steps, gibbs_state(h, beta), 4);
  INFO("L = " << plan.steps << ", final mean distance " << ens.mean.back());
  CHECK(ens.mean.back() <= 2.0 * epsilon);
}
