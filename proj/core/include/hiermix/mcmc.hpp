#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hiermix/distributions.hpp"
#include "hiermix/model.hpp"

namespace hiermix {

/// Sampler configuration.
///
/// RNG stream layout, derived from `seed`: stream 0 drives the latent-layer
/// block, stream j+1 drives every update belonging to sample j, stream J+1
/// drives posterior-predictive draws, and stream J+2 drives initialization.
/// Because each sample owns its stream, results are bit-identical for any
/// worker count.
struct McmcConfig {
  int burn_in = 0;
  int production = 1;
  int thin = 1;
  bool rj_enabled = true;
  int nu_proposal_halfwidth = 2;
  /// Posterior activation probabilities below this are reported as "absent".
  double activation_threshold = 0.01;
  std::uint64_t seed = 1;
  /// Samples for which one posterior-predictive cell is drawn per recorded
  /// iteration; `predictive_pooled` additionally draws one cell from a
  /// uniformly chosen sample's mixture.
  std::vector<int> predictive_sample_ids;
  bool predictive_pooled = false;
  /// Worker threads for the per-sample block (1 = serial).
  int workers = 1;

  enum class Init {
    /// Pooled k-means++ centers matched to the prior anchors t_k.
    kmeans,
    /// Deterministic prior means (theta_k = t_k, etc.).
    prior_mean,
  };
  Init init = Init::kmeans;

  /// Validation utility: forces pi_j = (1, 0, ..., 0) after every weight
  /// update so the data never inform the chain and the latent layer samples
  /// its prior.
  bool prior_only = false;

  void validate() const;
};

/// Diagnostic counters accumulated over a run.
struct SamplerCounters {
  std::int64_t nu_proposals = 0;
  std::int64_t nu_accepts = 0;
  std::int64_t birth_proposals = 0;
  std::int64_t birth_accepts = 0;
  std::int64_t death_proposals = 0;
  std::int64_t death_accepts = 0;
  /// Component-parameter draws that failed numerically and retained the
  /// previous value.
  std::int64_t param_draw_failures = 0;

  void merge(const SamplerCounters& other);
};

/// Per-component sufficient statistics from one assignment pass over a
/// sample; index 0 is the outlier component.
struct ComponentSuffStats {
  std::vector<int> counts;       // K+1
  std::vector<Vector> sums;      // K+1, each d
  std::vector<Matrix> scatters;  // K+1, each d x d: sum of y y^T
};

/// Recorded draws and full-production accumulators from one chain run.
struct Trace {
  int K = 0;
  int J = 0;
  int d = 0;
  int production = 0;
  int thin = 1;
  /// Cells per sample (copied from the dataset; sizes assignment frequencies).
  std::vector<int> n_cells;

  // Thinned draws, outer index = draw.
  std::vector<std::vector<Vector>> theta;        // [draw][k]
  std::vector<std::vector<Matrix>> sigma_theta;  // [draw][k]
  std::vector<std::vector<Matrix>> psi;          // [draw][k]
  std::vector<std::vector<int>> nu;              // [draw][k]
  std::vector<std::vector<std::vector<Vector>>> mu;     // [draw][j][k]
  std::vector<std::vector<std::vector<Matrix>>> sigma;  // [draw][j][k]
  std::vector<std::vector<Vector>> pi;           // [draw][j], length K+1
  std::vector<std::vector<std::vector<std::uint8_t>>> z;  // [draw][j][k]
  std::vector<double> log_posterior;             // [draw]

  // Posterior-predictive cells: one per slot per draw.  Slot labels are
  // "sample:<id>" per requested sample plus optionally "pooled".
  std::vector<std::string> predictive_labels;
  std::vector<std::vector<Vector>> predictive;  // [draw][slot]

  // Accumulated over every production sweep (not thinned).
  std::vector<std::vector<std::int64_t>> activation_counts;  // [j][k]
  std::vector<Matrix> assignment_counts;  // [j]: n_j x (K+1)
  std::vector<Vector> pi_sums;            // [j]: length K+1

  SamplerCounters counters;
  std::int64_t jitter_events = 0;
  /// Pairs of components whose posterior-mean locations appear swapped
  /// relative to the prior anchors (label-switching diagnostic).
  int label_switch_pairs = 0;

  int n_draws() const { return static_cast<int>(theta.size()); }
  /// Posterior activation probability of component k in sample j.
  double activation_probability(int j, int k) const;
};

/// Log acceptance ratio of a reversible-jump activation move, broken into
/// the individual factors so their composition can be inspected.
struct RjLogRatio {
  double activation = 0.0;  // -c_s on birth, +c_s on death
  double dirichlet = 0.0;   // weight-prior ratio
  double likelihood = 0.0;  // complete-data likelihood ratio
  double jacobian = 0.0;    // weight-renormalization volume factor
  double proposal = 0.0;    // birth-weight proposal density correction

  double total() const {
    return activation + dirichlet + likelihood + jacobian + proposal;
  }
};

/// Factors for activating component k (currently inactive) in a sample with
/// n_cells cells, by inserting weight w and shrinking the others by 1-w.
/// a_k is the component's Dirichlet weight, a_rest the summed Dirichlet
/// weights of the outlier plus the currently active components, and
/// n_active the currently active component count.
RjLogRatio rj_birth_log_ratio(int n_cells, double w, double a_k, double a_rest,
                              double c_s, int n_active);

/// Factors for the reverse move: deactivating component k whose current
/// weight is w (count 0), renormalizing the rest by 1/(1-w).  n_active is
/// the active count before the death, including k.
RjLogRatio rj_death_log_ratio(int n_cells, double w, double a_k, double a_rest,
                              double c_s, int n_active);

/// Probability that a symmetric discrete-uniform step of halfwidth h from
/// `from`, reflected at nu_min, lands on `to`.  Needed for the acceptance
/// ratio because reflection bends several steps onto one target near the
/// boundary, which breaks proposal symmetry.
double nu_proposal_probability(int from, int to, int halfwidth, int nu_min);

/// Test hooks that deliberately corrupt one update, for sampler validation
/// by mutation testing.
enum class SamplerMutation {
  none,
  /// Sigma_jk update drops the prior scale matrix (uses the data scatter
  /// alone).
  drop_sigma_prior_scale,
};

// Individual Gibbs updates, exposed for validation; all mutate the state in
// place and draw only from the provided stream.

/// Reassigns every cell of sample j and returns per-component counts, sums,
/// and second moments.
ComponentSuffStats update_assignments(ChainState& state, const Dataset& data,
                                      int j, RngStream& rng);

/// Draws pi_j from the conjugate Dirichlet over the outlier plus active
/// components; inactive coordinates are set to exactly zero.
void update_pi(ChainState& state, const PriorSpec& prior, int j,
               const ComponentSuffStats& stats, RngStream& rng);

/// Draws (mu_jk, Sigma_jk) for every component of sample j: conjugate
/// posteriors for components holding cells, prior refreshes otherwise (the
/// auxiliary-variable convention for inactive components).  The linking
/// parameters (theta, Sigma_theta, Psi, nu) are read from the state itself.
/// Numerical failures retain the previous values and bump the counter.
void update_component_params(ChainState& state, int j,
                             const ComponentSuffStats& stats, RngStream& rng,
                             SamplerCounters* counters,
                             SamplerMutation mutation = SamplerMutation::none);

/// One birth/death activation proposal for sample j.
void update_activation(ChainState& state, const PriorSpec& prior, int j,
                       const ComponentSuffStats& stats, RngStream& rng,
                       SamplerCounters* counters);

/// Draws (theta_k, Sigma_theta_k, Psi_k) for every component from their
/// conjugate conditionals.  Contributing samples are those with Z_jk true
/// when rj_enabled, all samples otherwise.
void update_latent_layer(ChainState& state, const PriorSpec& prior,
                         bool rj_enabled, RngStream& rng);

/// Metropolis update of every nu_k (reflected discrete random walk).
void update_nu(ChainState& state, const PriorSpec& prior, bool rj_enabled,
               int halfwidth, RngStream& rng, SamplerCounters* counters);

/// The full posterior sampler.  Owns the chain state and the RNG streams;
/// `run` executes the configured burn-in and production phases.
class Sampler {
 public:
  Sampler(Dataset data, PriorSpec prior, McmcConfig config);
  ~Sampler();

  Sampler(const Sampler&) = delete;
  Sampler& operator=(const Sampler&) = delete;

  /// Deterministic initialization per config.init.
  void init_state();

  /// Replaces the chain state (validation harnesses start from exact prior
  /// draws).
  void set_state(ChainState state);
  const ChainState& state() const { return state_; }

  /// One full sweep: per-sample block (assignments, weights, component
  /// parameters, activation) then the latent block (theta, Sigma_theta, Psi,
  /// nu).
  void sweep();

  /// Runs burn-in plus production sweeps, recording into a Trace.
  Trace run();

  const SamplerCounters& counters() const { return counters_; }

  void set_mutation(SamplerMutation mutation) { mutation_ = mutation; }

  const Dataset& data() const { return data_; }
  const PriorSpec& prior() const { return prior_; }

 private:
  struct ThreadPool;

  void per_sample_block(int j);
  void record_draw(Trace* trace);
  void accumulate_production(Trace* trace);
  Vector draw_predictive_cell(int j, RngStream& rng) const;

  Dataset data_;
  PriorSpec prior_;
  McmcConfig config_;
  ChainState state_;
  std::vector<RngStream> sample_rngs_;
  RngStream latent_rng_;
  RngStream predictive_rng_;
  std::vector<ComponentSuffStats> stats_;          // per sample, last sweep
  std::vector<SamplerCounters> sample_counters_;   // per sample scratch
  SamplerCounters counters_;
  SamplerMutation mutation_ = SamplerMutation::none;
  std::unique_ptr<ThreadPool> pool_;
};

/// Convenience wrapper: initialize, run, return the trace.
Trace run_chain(const Dataset& data, const PriorSpec& prior,
                const McmcConfig& config);

}  // namespace hiermix
