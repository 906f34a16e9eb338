#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dlab/flow.hpp"
#include "dlab/opdyn.hpp"
#include "dlab/spectral.hpp"
#include "dlab/tasks.hpp"
#include "dlab/unlearn.hpp"

#include "json.hpp"

namespace dlab::xp {

// Runs independent cells on up to `jobs` worker threads; results are stored
// by index so the outcome does not depend on scheduling.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

struct RunContext {
    std::string out_dir;  // empty: compute only, write nothing
    int jobs = 1;
};

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);
double median(std::vector<double> v);

// ---------------------------------------------------------------------------
// modular arithmetic (mod-add / mod-mul / replicate-113)
// ---------------------------------------------------------------------------

struct ModArithConfig {
    int p = 97;
    tasks::ModOp op = tasks::ModOp::add;
    std::vector<std::string> families = {"bilinear", "relu"};
    std::vector<uint64_t> seeds = {0, 1, 2};
    int embed_dim = 32;
    int hidden = 64;
    double split = 0.9;
    int batch = 256;
    int epochs = 2000;
    double lr = 1e-3;
    double weight_decay = 0.1;
    double early_stop = 0.999;
    bool dump_data = false;
};

struct ModArithRun {
    std::string family;
    uint64_t seed = 0;
    int epochs_run = 0;
    double final_val_acc = 0.0;
    bool early_stopped = false;
    bool diverged = false;
    std::vector<double> entropies;      // per class (addition analysis)
    std::vector<int> rank90;            // per class (multiplication analysis)
    std::vector<double> sv_decay_mean;  // sigma_i/sigma_1 averaged over classes
    double mean_entropy = 0.0;
    double mean_rank90 = 0.0;
};

struct ModArithResult {
    ModArithConfig config;
    std::vector<ModArithRun> runs;
    double family_mean_entropy(const std::string& family) const;
    double family_mean_rank90(const std::string& family) const;
};

models::ModelSpec mod_arith_spec(const std::string& family, int p, int d, int m);
ModArithResult run_mod_arith(const ModArithConfig& cfg, const RunContext& ctx);

// ---------------------------------------------------------------------------
// cyclic extrapolation
// ---------------------------------------------------------------------------

struct CycleConfig {
    int p = 400;
    std::vector<std::string> families = {"bilinear", "relu"};
    std::vector<uint64_t> seeds = {0, 1, 2};
    int embed_dim = 64;
    int hidden = 128;
    int epochs = 60;
    int batch = 400;
    double lr = 1e-3;
    int i_max = 200;
    double horizon_threshold = 0.9;
    bool dump_data = false;
};

struct CycleRun {
    std::string family;
    uint64_t seed = 0;
    double train_acc = 0.0;
    double mean_col_entropy = 0.0;
    std::vector<double> accuracy;  // Accuracy(i), i = 1..i_max
    int horizon = 0;               // k at the configured threshold
    bool diverged = false;
};

struct CycleResult {
    CycleConfig config;
    std::vector<CycleRun> runs;
    double family_mean_horizon(const std::string& family) const;
    double family_mean_entropy(const std::string& family) const;
};

models::ModelSpec cycle_spec(const std::string& family, int p, int d, int m);
CycleResult run_cycle(const CycleConfig& cfg, const RunContext& ctx);

// ---------------------------------------------------------------------------
// Lie group dynamics (quat / sl2)
// ---------------------------------------------------------------------------

enum class LieTask { quaternion, sl2 };

struct LieConfig {
    LieTask task = LieTask::quaternion;
    std::vector<std::string> families = {"bilinear", "relu"};
    std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
    int hidden = 128;  // 64 for sl2 per the hyperparameter table
    int batch = 128;
    int iterations = 5000;
    double lr = 1e-3;
    double dt = 0.1;
    int rollout_steps = 200;
    double omega_norm = 0.5;   // rollout angular velocity magnitude
    double g_scale = 0.3;      // rollout generator Frobenius norm
};

struct LieRun {
    std::string family;
    uint64_t seed = 0;
    double final_train_loss = 0.0;
    std::vector<double> trace;   // ||q|| or area per step
    double drift_at_end = 0.0;   // |metric - 1| at the final step
    bool diverged = false;
};

struct LieResult {
    LieConfig config;
    std::vector<LieRun> runs;
    double family_median_drift(const std::string& family) const;
};

models::ModelSpec lie_spec(const std::string& family, LieTask task, int hidden);
LieResult run_lie(const LieConfig& cfg, const RunContext& ctx);

// ---------------------------------------------------------------------------
// orthogonal / alpha-mixed superposition unlearning
// ---------------------------------------------------------------------------

struct OrthoConfig {
    std::vector<std::string> families = {"bilinear", "relu"};
    std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 0.9, 1.0};
    std::vector<uint64_t> seeds = {0};
    int d = 32;
    int hidden = 128;
    int n_tokens = 500;
    int dataset_size = 8000;
    int batch = 256;
    double lambda = 60.0;
    double phase1_lr = 5e-3;
    double phase2_lr = 1e-2;
    int phase1_epochs_bilinear = 300;
    int phase1_epochs_other = 600;
    int phase2_epochs_bilinear = 200;
    int phase2_epochs_other = 300;
};

struct OrthoRun {
    std::string family;
    double alpha = 0.0;
    uint64_t seed = 0;
    std::vector<double> score_a, score_b;  // per-epoch series across both phases
    int phase_boundary = 0;
    double phase1_end_score_b = 0.0;
    double end_score_a = 0.0;
    double end_score_b = 0.0;
    double target = 0.0;      // lambda * (1 + frame overlap)
    double distortion = 0.0;  // |phase1_end_score_b - target|
    bool diverged = false;
};

struct OrthoResult {
    OrthoConfig config;
    std::vector<OrthoRun> runs;
    const OrthoRun* find(const std::string& family, double alpha, uint64_t seed) const;
};

models::ModelSpec ortho_spec(const std::string& family, int d, int m);
OrthoResult run_ortho(const OrthoConfig& cfg, const RunContext& ctx);

// ---------------------------------------------------------------------------
// rank-r entangled superposition unlearning
// ---------------------------------------------------------------------------

struct EntangledConfig {
    std::vector<std::string> families = {"bilinear", "relu"};
    std::vector<int> ranks = {1, 2, 4};
    std::vector<uint64_t> seeds = {0, 1, 2};
    int d = 16;
    int hidden = 64;
    int n_train = 8000;
    int n_val = 1000;
    int batch = 256;
    double lr = 2e-3;
    double l1 = 2e-4;
    int epochs = 30;
    int unlearn_steps = 500;
    double attack_lr = 2e-2;
    int attack_steps = 50;
    double forget_weight = 0.5;
};

struct EntangledRun {
    std::string family;
    int rank = 1;
    uint64_t seed = 0;
    double pre_corr_f12 = 0.0, pre_corr_f23 = 0.0;
    double dead_frac = 0.0, pure12_frac = 0.0, pure23_frac = 0.0, mixed_frac = 0.0;
    unlearn::ParetoCurve pareto;
    unlearn::UnlearnSeries unlearn_series;
    unlearn::SelectivityResult selectivity;
    bool diverged = false;
};

struct EntangledResult {
    EntangledConfig config;
    std::vector<EntangledRun> runs;
    double family_mean_selectivity(const std::string& family, int rank) const;
    double family_mean_mixed_frac(const std::string& family, int rank) const;
};

models::ModelSpec entangled_spec(const std::string& family, int d, int m);
EntangledResult run_entangled(const EntangledConfig& cfg, const RunContext& ctx);

// ---------------------------------------------------------------------------
// gradient-flow validator
// ---------------------------------------------------------------------------

struct FlowXpConfig {
    int n = 8;
    std::vector<double> spectrum = {4, 3, 2, 1};
    std::vector<double> eps_sweep = {1e-3};
    bool aligned = true;
    bool symmetric = false;
    double h = 1e-2;
    int unlearn_k = 1;  // negative: skip the unlearning stage
    uint64_t seed = 0;
};

struct FlowXpRun {
    double eps = 0.0;
    flow::FlowTrace converge_trace;
    flow::FlowTrace unlearn_trace;  // empty when skipped
    double peak_cross_ratio = 0.0;
    double final_loss = 0.0;
};

struct FlowXpResult {
    FlowXpConfig config;
    std::vector<FlowXpRun> runs;
};

FlowXpResult run_flow(const FlowXpConfig& cfg, const RunContext& ctx);

// ---------------------------------------------------------------------------
// report plumbing
// ---------------------------------------------------------------------------

// report.json written for every experiment: config echo, per-cell results,
// aggregates, wall clock, artifact manifest.
void write_report(const std::string& out_dir, const std::string& experiment,
                  const nlohmann::json& config, const nlohmann::json& cells,
                  const nlohmann::json& aggregate, double wall_clock_sec,
                  const std::vector<std::string>& artifacts);

nlohmann::json mod_arith_report(const ModArithResult& r);
nlohmann::json cycle_report(const CycleResult& r);
nlohmann::json lie_report(const LieResult& r);
nlohmann::json ortho_report(const OrthoResult& r);
nlohmann::json entangled_report(const EntangledResult& r);
nlohmann::json flow_report(const FlowXpResult& r);

}  // namespace dlab::xp
