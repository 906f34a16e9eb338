#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlab/tasks.hpp"

namespace dlab::unlearn {

// Two-pass Pearson correlation; returns 0 when either side has zero variance
// (constant model output counts as zero retention).
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct ScorePair {
    double score_a = 0.0;
    double score_b = 0.0;
};

// Projection of the learned interaction onto each task's planted directions.
// Bilinear models go through the extracted operator; other families are
// probed with a forward pass on [u_k; v_k].
ScorePair score_tasks(const models::ModelSpec& spec, const models::ModelParams& params,
                      const tasks::SuperpositionTasks& t);

// Exact Task-B target lambda * (1 + overlap), computed from the generated
// frames; reduces to 60 at alpha=0 and 120 at alpha=1 for lambda=60.
double score_target(const tasks::SuperpositionTasks& t);
double distortion(double score_b_end, const tasks::SuperpositionTasks& t);

enum class NeuronRole { dead, pure_f12, pure_f23, mixed };

const char* role_name(NeuronRole r);

struct RoleThresholds {
    double dead_frac = 0.05;  // tau_dead = dead_frac * median block norm
    double off_frac = 0.05;   // tau_off likewise
    double dominance = 5.0;   // S12 : S23 ratio for a pure label
};

struct NeuronReport {
    std::vector<NeuronRole> roles;
    std::vector<double> s12, s23;        // cross-norm interaction scores
    std::vector<double> importance_f12;  // pruning order key
    int count(NeuronRole r) const;
    double fraction(NeuronRole r) const;
};

// Role assignment from weight-block norms; d_block is the width of each of
// the three input slots.
NeuronReport classify_neurons(const models::ModelSpec& spec, const models::ModelParams& params,
                              int d_block, const RoleThresholds& thr = {});

struct ParetoCurve {
    // entry i = retention after pruning the i most f12-important neurons
    std::vector<double> ret_f12, ret_f23;
};

ParetoCurve prune_sweep(const models::ModelSpec& spec, const models::ModelParams& params,
                        int d_block, const train::Dataset& val_set,
                        const std::vector<double>& f12_val, const std::vector<double>& f23_val);

struct UnlearnSeries {
    // entry 0 = pretraining correlations, then one entry per fine-tune step
    std::vector<double> corr_f12, corr_f23;
    bool diverged = false;
};

// Fine-tune on f23-only targets, tracking held-out correlations per step.
UnlearnSeries gradient_unlearn(const models::ModelSpec& spec, models::ModelParams& params,
                               const tasks::EntangledDataset& data, int steps,
                               const train::OptimizerConfig& opt_cfg, int batch_size,
                               uint64_t seed);

struct SelectivityResult {
    double delta_f12 = 0.0;
    double delta_f23 = 0.0;
    double ratio = 0.0;
    bool flagged = false;   // denominator clamped to eps
    bool diverged = false;  // attack destabilized the model
};

// Adversarial attack L = L_f23 - forget_weight * L_f12; ratio of correlation
// damage delta_f12 / max(delta_f23, eps).
SelectivityResult selectivity_attack(const models::ModelSpec& spec,
                                     models::ModelParams& params,
                                     const tasks::EntangledDataset& data, int steps, double lr,
                                     double forget_weight, int batch_size, uint64_t seed,
                                     double eps = 1e-3);

}  // namespace dlab::unlearn
