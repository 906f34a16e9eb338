#include "dlab/train.hpp"

#include <cmath>
#include <numeric>

namespace dlab::train {

OptKind opt_kind_from_name(const std::string& name) {
    if (name == "sgd") return OptKind::sgd;
    if (name == "adam") return OptKind::adam;
    if (name == "adamw") return OptKind::adamw;
    throw std::invalid_argument("unknown optimizer: " + name);
}

const char* opt_kind_name(OptKind k) {
    switch (k) {
        case OptKind::sgd: return "sgd";
        case OptKind::adam: return "adam";
        case OptKind::adamw: return "adamw";
    }
    return "?";
}

void Optimizer::step(models::ModelParams& params, const std::map<std::string, Matrix>& grads) {
    ++step_count;
    for (auto& [name, w] : params.mat) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const Matrix& g = git->second;
        if (!g.all_finite()) {
            throw nan_gradient_error("non-finite gradient for parameter '" + name + "' at step " +
                                     std::to_string(step_count));
        }
        check_same_shape(w, g, "Optimizer::step");

        if (cfg.kind == OptKind::sgd) {
            for (size_t i = 0; i < w.data.size(); ++i) {
                double gi = g.data[i];
                if (cfg.weight_decay != 0.0) gi += cfg.weight_decay * w.data[i];
                w.data[i] -= cfg.lr * gi;
            }
            continue;
        }

        Matrix& m = m1.try_emplace(name, Matrix(w.rows, w.cols)).first->second;
        Matrix& v = m2.try_emplace(name, Matrix(w.rows, w.cols)).first->second;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count));
        for (size_t i = 0; i < w.data.size(); ++i) {
            double gi = g.data[i];
            if (cfg.kind == OptKind::adam && cfg.weight_decay != 0.0) {
                gi += cfg.weight_decay * w.data[i];
            }
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            if (cfg.kind == OptKind::adamw && cfg.weight_decay != 0.0) {
                w.data[i] -= cfg.lr * cfg.weight_decay * w.data[i];
            }
            w.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

int Dataset::size() const {
    if (!tok_a.empty()) return static_cast<int>(tok_a.size());
    return x1.rows;
}

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<int>& idx, int begin, int count) {
    if (src.empty()) return Matrix();
    Matrix out(count, src.cols);
    for (int i = 0; i < count; ++i) {
        const double* s = src.row_ptr(idx[begin + i]);
        double* d = out.row_ptr(i);
        for (int j = 0; j < src.cols; ++j) d[j] = s[j];
    }
    return out;
}

}  // namespace

models::Batch Dataset::gather(const std::vector<int>& idx, int begin, int count) const {
    models::Batch b;
    if (!tok_a.empty()) {
        b.tok_a.resize(count);
        b.tok_b.resize(count);
        for (int i = 0; i < count; ++i) {
            b.tok_a[i] = tok_a[idx[begin + i]];
            b.tok_b[i] = tok_b[idx[begin + i]];
        }
    }
    b.x1 = gather_rows(x1, idx, begin, count);
    b.x2 = gather_rows(x2, idx, begin, count);
    if (!labels.empty()) {
        b.labels.resize(count);
        for (int i = 0; i < count; ++i) b.labels[i] = labels[idx[begin + i]];
    }
    b.targets = gather_rows(targets, idx, begin, count);
    return b;
}

models::Batch Dataset::full() const {
    std::vector<int> idx(size());
    std::iota(idx.begin(), idx.end(), 0);
    return gather(idx, 0, size());
}

double accuracy(const models::ModelSpec& spec, const models::ModelParams& params,
                const Dataset& data) {
    if (data.size() == 0) return 0.0;
    const models::Batch b = data.full();
    const Matrix logits = models::forward_eval(spec, params, b);
    int correct = 0;
    for (int i = 0; i < logits.rows; ++i) {
        const double* row = logits.row_ptr(i);
        int best = 0;
        for (int j = 1; j < logits.cols; ++j) {
            if (row[j] > row[best]) best = j;
        }
        if (best == b.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / logits.rows;
}

double mse_eval(const models::ModelSpec& spec, const models::ModelParams& params,
                const Dataset& data) {
    if (data.size() == 0) return 0.0;
    const models::Batch b = data.full();
    Matrix pred = models::forward_eval(spec, params, b);
    if (spec.head == models::Head::regression) pred += b.x1;
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - b.targets.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

namespace {

struct StepResult {
    double loss = 0.0;
    bool ok = true;
    std::string note;
};

// one forward/backward/update on a batch; returns the batch loss
StepResult train_step(const models::ModelSpec& spec, models::ModelParams& params,
                      Optimizer& opt, const models::Batch& batch, const TrainConfig& cfg) {
    ad::Tape tape;
    models::BoundModel bound = models::bind(tape, spec, params);
    ad::Var out = models::forward(tape, bound, batch);

    ad::Var loss;
    if (cfg.loss == LossKind::cross_entropy) {
        loss = ad::softmax_cross_entropy(tape, out, batch.labels);
    } else {
        ad::Var pred = out;
        if (spec.head == models::Head::regression) {
            pred = ad::add(tape, out, tape.constant(batch.x1));
        }
        loss = ad::mse(tape, pred, batch.targets);
    }
    if (cfg.l1_weight > 0.0) {
        loss = ad::add(tape, loss, ad::l1_penalty(tape, bound.all_vars(), cfg.l1_weight));
    }

    StepResult r;
    r.loss = tape.value(loss).at(0, 0);
    if (!std::isfinite(r.loss)) {
        r.ok = false;
        r.note = "loss diverged (non-finite)";
        return r;
    }

    tape.backward(loss);
    std::map<std::string, Matrix> grads;
    for (const auto& [name, var] : bound.vars) grads[name] = tape.grad(var);
    try {
        opt.step(params, grads);
    } catch (const nan_gradient_error& e) {
        r.ok = false;
        r.note = e.what();
    }
    return r;
}

}  // namespace

RunReport train(const models::ModelSpec& spec, models::ModelParams& params,
                const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                const OptimizerConfig& opt_cfg, const std::vector<NamedProbe>& probes) {
    if (cfg.batch_size <= 0 || cfg.batch_size > std::max(1, train_set.size())) {
        throw std::invalid_argument("train: batch size " + std::to_string(cfg.batch_size) +
                                    " invalid for dataset of " +
                                    std::to_string(train_set.size()));
    }
    spec.validate();
    RunReport report;
    Optimizer opt(opt_cfg);
    Rng rng(cfg.seed);
    std::vector<int> idx(train_set.size());
    std::iota(idx.begin(), idx.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(idx);
        double loss_sum = 0.0;
        int batches = 0;
        for (int begin = 0; begin < train_set.size(); begin += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, train_set.size() - begin);
            const models::Batch batch = train_set.gather(idx, begin, count);
            const StepResult r = train_step(spec, params, opt, batch, cfg);
            if (!r.ok) {
                report.diverged = true;
                report.note = r.note;
                report.epochs_run = epoch;
                return report;
            }
            loss_sum += r.loss;
            ++batches;
        }
        report.train_loss.push_back(loss_sum / std::max(1, batches));

        double metric = 0.0;
        if (cfg.loss == LossKind::cross_entropy) {
            metric = accuracy(spec, params, val_set);
        } else {
            metric = mse_eval(spec, params, val_set);
        }
        report.val_metric.push_back(metric);
        for (const auto& p : probes) report.probes[p.name].push_back(p.fn(params));
        report.epochs_run = epoch + 1;

        if (cfg.loss == LossKind::cross_entropy && cfg.early_stop_val_acc >= 0.0 &&
            metric >= cfg.early_stop_val_acc) {
            report.early_stopped = true;
            break;
        }
    }
    return report;
}

RunReport two_phase_train(const models::ModelSpec& spec, models::ModelParams& params,
                          const Phase& phase1, const Phase& phase2,
                          const std::vector<NamedProbe>& probes) {
    RunReport r1 = train(spec, params, *phase1.data, *phase1.data, phase1.cfg, phase1.opt, probes);
    RunReport merged = r1;
    merged.phase_boundary = r1.epochs_run;
    if (r1.diverged) return merged;

    RunReport r2 = train(spec, params, *phase2.data, *phase2.data, phase2.cfg, phase2.opt, probes);
    merged.train_loss.insert(merged.train_loss.end(), r2.train_loss.begin(), r2.train_loss.end());
    merged.val_metric.insert(merged.val_metric.end(), r2.val_metric.begin(),
                             r2.val_metric.end());
    for (const auto& [name, series] : r2.probes) {
        auto& dst = merged.probes[name];
        dst.insert(dst.end(), series.begin(), series.end());
    }
    merged.epochs_run += r2.epochs_run;
    merged.early_stopped = r2.early_stopped;
    merged.diverged = r2.diverged;
    if (!r2.note.empty()) merged.note = r2.note;
    return merged;
}

RunReport train_stream(const models::ModelSpec& spec, models::ModelParams& params,
                       const BatchSampler& sampler, int iterations, const TrainConfig& cfg,
                       const OptimizerConfig& opt_cfg) {
    spec.validate();
    RunReport report;
    Optimizer opt(opt_cfg);
    Rng rng(cfg.seed);
    for (int it = 0; it < iterations; ++it) {
        const models::Batch batch = sampler(rng);
        const StepResult r = train_step(spec, params, opt, batch, cfg);
        if (!r.ok) {
            report.diverged = true;
            report.note = r.note;
            report.epochs_run = it;
            return report;
        }
        report.train_loss.push_back(r.loss);
        report.epochs_run = it + 1;
    }
    return report;
}

}  // namespace dlab::train
