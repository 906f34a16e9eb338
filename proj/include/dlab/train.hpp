#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlab/models.hpp"

namespace dlab::train {

enum class OptKind { sgd, adam, adamw };

OptKind opt_kind_from_name(const std::string& name);
const char* opt_kind_name(OptKind k);

struct OptimizerConfig {
    OptKind kind = OptKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled for adamw, L2-style otherwise
};

struct nan_gradient_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Optimizer {
    OptimizerConfig cfg;
    long step_count = 0;
    std::map<std::string, Matrix> m1, m2;

    explicit Optimizer(OptimizerConfig c) : cfg(c) {}
    void step(models::ModelParams& params, const std::map<std::string, Matrix>& grads);
};

enum class LossKind { cross_entropy, mse };

struct TrainConfig {
    int batch_size = 256;
    int epochs = 0;
    uint64_t seed = 0;
    double early_stop_val_acc = -1.0;  // fraction in [0,1]; disabled when negative
    LossKind loss = LossKind::cross_entropy;
    double l1_weight = 0.0;
};

// In-memory dataset; which fields are populated depends on the task.
struct Dataset {
    std::vector<int> tok_a, tok_b;
    Matrix x1, x2;
    std::vector<int> labels;
    Matrix targets;

    int size() const;
    models::Batch gather(const std::vector<int>& idx, int begin, int count) const;
    models::Batch full() const;
};

struct SplitData {
    Dataset train, val;
};

using Probe = std::function<double(const models::ModelParams&)>;

struct NamedProbe {
    std::string name;
    Probe fn;
};

struct RunReport {
    std::vector<double> train_loss;  // one entry per epoch (or per step when streaming)
    std::vector<double> val_metric;  // accuracy for classifiers, MSE otherwise
    std::map<std::string, std::vector<double>> probes;
    int phase_boundary = -1;  // epoch index where phase 2 began (two-phase runs)
    int epochs_run = 0;
    bool early_stopped = false;
    bool diverged = false;
    std::string note;
};

// argmax accuracy over a labelled dataset
double accuracy(const models::ModelSpec& spec, const models::ModelParams& params,
                const Dataset& data);
// mean squared error of the head output (regression heads add the base state)
double mse_eval(const models::ModelSpec& spec, const models::ModelParams& params,
                const Dataset& data);

// Shuffled mini-batch training with optional early stopping on validation
// accuracy; probes are evaluated at every epoch end. Params update in place.
RunReport train(const models::ModelSpec& spec, models::ModelParams& params,
                const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                const OptimizerConfig& opt_cfg, const std::vector<NamedProbe>& probes = {});

struct Phase {
    const Dataset* data = nullptr;
    TrainConfig cfg;
    OptimizerConfig opt;
};

// Train on phase1 then switch objective/dataset to phase2 with a fresh
// optimizer; probe series span both phases with the boundary recorded.
RunReport two_phase_train(const models::ModelSpec& spec, models::ModelParams& params,
                          const Phase& phase1, const Phase& phase2,
                          const std::vector<NamedProbe>& probes);

// One optimizer step per freshly sampled batch (on-the-fly data generation).
using BatchSampler = std::function<models::Batch(Rng&)>;
RunReport train_stream(const models::ModelSpec& spec, models::ModelParams& params,
                       const BatchSampler& sampler, int iterations, const TrainConfig& cfg,
                       const OptimizerConfig& opt_cfg);

}  // namespace dlab::train
