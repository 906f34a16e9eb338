#include "dlab/unlearn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dlab::unlearn {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("pearson: need two equal-length non-empty series");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

ScorePair score_tasks(const models::ModelSpec& spec, const models::ModelParams& params,
                      const tasks::SuperpositionTasks& t) {
    ScorePair s;
    if (spec.family == models::Family::bilinear) {
        const Matrix m = models::extract_bilinear_interaction(spec, params);
        auto quad = [&](const Matrix& u, const Matrix& v) {
            double acc = 0.0;
            for (int i = 0; i < m.rows; ++i) {
                double inner = 0.0;
                for (int j = 0; j < m.cols; ++j) inner += m.at(i, j) * v.data[j];
                acc += u.data[i] * inner;
            }
            return acc;
        };
        s.score_a = quad(t.u1, t.v1);
        s.score_b = quad(t.u2, t.v2);
    } else {
        s.score_a = models::probe_interaction_score(spec, params, t.u1, t.v1);
        s.score_b = models::probe_interaction_score(spec, params, t.u2, t.v2);
    }
    return s;
}

double score_target(const tasks::SuperpositionTasks& t) {
    return t.lambda * (1.0 + t.overlap());
}

double distortion(double score_b_end, const tasks::SuperpositionTasks& t) {
    return std::abs(score_b_end - score_target(t));
}

const char* role_name(NeuronRole r) {
    switch (r) {
        case NeuronRole::dead: return "dead";
        case NeuronRole::pure_f12: return "pure_f12";
        case NeuronRole::pure_f23: return "pure_f23";
        case NeuronRole::mixed: return "mixed";
    }
    return "?";
}

int NeuronReport::count(NeuronRole r) const {
    int n = 0;
    for (NeuronRole role : roles) {
        if (role == r) ++n;
    }
    return n;
}

double NeuronReport::fraction(NeuronRole r) const {
    return roles.empty() ? 0.0 : static_cast<double>(count(r)) / roles.size();
}

namespace {

// per-neuron l2 norm of one input block of a (3d x m) weight matrix column
double block_norm(const Matrix& w, int block, int d_block, int neuron) {
    double acc = 0.0;
    for (int i = block * d_block; i < (block + 1) * d_block; ++i) {
        acc += w.at(i, neuron) * w.at(i, neuron);
    }
    return std::sqrt(acc);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

NeuronReport classify_neurons(const models::ModelSpec& spec, const models::ModelParams& params,
                              int d_block, const RoleThresholds& thr) {
    const bool bilinear = spec.family == models::Family::bilinear;
    const Matrix& w1 = params.at("w1");
    if (w1.rows != 3 * d_block) {
        throw std::invalid_argument("classify_neurons: input width " + std::to_string(w1.rows) +
                                    " is not three blocks of " + std::to_string(d_block));
    }
    const int m = w1.cols;
    NeuronReport rep;
    rep.roles.resize(m);
    rep.s12.resize(m);
    rep.s23.resize(m);
    rep.importance_f12.resize(m);

    // n[j], and for bilinear the paired nu/nv per block
    std::vector<std::array<double, 3>> nu(m), nv(m);
    std::vector<double> peak(m, 0.0);
    const Matrix* w2 = bilinear ? &params.at("w2") : nullptr;
    for (int h = 0; h < m; ++h) {
        for (int j = 0; j < 3; ++j) {
            nu[h][j] = block_norm(w1, j, d_block, h);
            nv[h][j] = bilinear ? block_norm(*w2, j, d_block, h) : nu[h][j];
            peak[h] = std::max({peak[h], nu[h][j], nv[h][j]});
        }
        if (bilinear) {
            rep.s12[h] = nu[h][0] * nv[h][1] + nu[h][1] * nv[h][0];
            rep.s23[h] = nu[h][1] * nv[h][2] + nu[h][2] * nv[h][1];
            rep.importance_f12[h] = rep.s12[h];
        } else {
            // bridge scores from the single projection's block norms
            rep.s12[h] = nu[h][0] * nu[h][1];
            rep.s23[h] = nu[h][1] * nu[h][2];
            rep.importance_f12[h] = rep.s12[h];
        }
    }

    const double med = median(peak);
    const double tau_dead = thr.dead_frac * med;
    const double tau_off = thr.off_frac * med;
    for (int h = 0; h < m; ++h) {
        const double off3 = std::max(nu[h][2], nv[h][2]);
        const double off1 = std::max(nu[h][0], nv[h][0]);
        if (peak[h] < tau_dead) {
            rep.roles[h] = NeuronRole::dead;
        } else if (rep.s12[h] >= thr.dominance * rep.s23[h] && off3 < tau_off) {
            rep.roles[h] = NeuronRole::pure_f12;
        } else if (rep.s23[h] >= thr.dominance * rep.s12[h] && off1 < tau_off) {
            rep.roles[h] = NeuronRole::pure_f23;
        } else {
            rep.roles[h] = NeuronRole::mixed;
        }
    }
    return rep;
}

namespace {

std::vector<double> model_outputs(const models::ModelSpec& spec,
                                  const models::ModelParams& params,
                                  const train::Dataset& data) {
    const Matrix out = models::forward_eval(spec, params, data.full());
    return out.data;
}

}  // namespace

ParetoCurve prune_sweep(const models::ModelSpec& spec, const models::ModelParams& params,
                        int d_block, const train::Dataset& val_set,
                        const std::vector<double>& f12_val, const std::vector<double>& f23_val) {
    const NeuronReport rep = classify_neurons(spec, params, d_block);
    const int m = static_cast<int>(rep.roles.size());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rep.importance_f12[a] > rep.importance_f12[b];
    });

    models::ModelParams pruned = params;
    const double corr12_0 = pearson(model_outputs(spec, pruned, val_set), f12_val);
    const double corr23_0 = pearson(model_outputs(spec, pruned, val_set), f23_val);

    ParetoCurve curve;
    curve.ret_f12.push_back(1.0);
    curve.ret_f23.push_back(1.0);
    Matrix& w_out = pruned.at("w_out");
    for (int step = 0; step < m; ++step) {
        const int h = order[step];
        for (int j = 0; j < w_out.cols; ++j) w_out.at(h, j) = 0.0;
        const std::vector<double> out = model_outputs(spec, pruned, val_set);
        const double c12 = pearson(out, f12_val);
        const double c23 = pearson(out, f23_val);
        curve.ret_f12.push_back(std::abs(corr12_0) > 1e-9 ? c12 / corr12_0 : 0.0);
        curve.ret_f23.push_back(std::abs(corr23_0) > 1e-9 ? c23 / corr23_0 : 0.0);
    }
    return curve;
}

namespace {

struct CorrPair {
    double f12 = 0.0, f23 = 0.0;
};

CorrPair val_correlations(const models::ModelSpec& spec, const models::ModelParams& params,
                          const tasks::EntangledDataset& data) {
    const std::vector<double> out = model_outputs(spec, params, data.val_set);
    for (double v : out) {
        if (!std::isfinite(v)) return {0.0, 0.0};  // destroyed model retains nothing
    }
    return {pearson(out, data.f12_val), pearson(out, data.f23_val)};
}

models::Batch sample_batch(const train::Dataset& set, const std::vector<double>& targets,
                           int batch_size, Rng& rng) {
    std::vector<int> idx(batch_size);
    for (int& i : idx) i = rng.uniform_int(set.size());
    models::Batch b = set.gather(idx, 0, batch_size);
    b.targets = Matrix(batch_size, 1);
    for (int i = 0; i < batch_size; ++i) b.targets.at(i, 0) = targets[idx[i]];
    return b;
}

}  // namespace

UnlearnSeries gradient_unlearn(const models::ModelSpec& spec, models::ModelParams& params,
                               const tasks::EntangledDataset& data, int steps,
                               const train::OptimizerConfig& opt_cfg, int batch_size,
                               uint64_t seed) {
    UnlearnSeries series;
    Rng rng(seed);
    train::Optimizer opt(opt_cfg);
    const CorrPair pre = val_correlations(spec, params, data);
    series.corr_f12.push_back(pre.f12);
    series.corr_f23.push_back(pre.f23);

    for (int step = 0; step < steps; ++step) {
        const models::Batch batch = sample_batch(data.train_set, data.f23_train, batch_size, rng);
        ad::Tape tape;
        models::BoundModel bound = models::bind(tape, spec, params);
        ad::Var out = models::forward(tape, bound, batch);
        ad::Var loss = ad::mse(tape, out, batch.targets);
        if (!std::isfinite(tape.value(loss).at(0, 0))) {
            series.diverged = true;
            break;
        }
        tape.backward(loss);
        std::map<std::string, Matrix> grads;
        for (const auto& [name, var] : bound.vars) grads[name] = tape.grad(var);
        try {
            opt.step(params, grads);
        } catch (const train::nan_gradient_error&) {
            series.diverged = true;
            break;
        }

        const CorrPair c = val_correlations(spec, params, data);
        series.corr_f12.push_back(c.f12);
        series.corr_f23.push_back(c.f23);
    }
    return series;
}

SelectivityResult selectivity_attack(const models::ModelSpec& spec, models::ModelParams& params,
                                     const tasks::EntangledDataset& data, int steps, double lr,
                                     double forget_weight, int batch_size, uint64_t seed,
                                     double eps) {
    Rng rng(seed);
    train::OptimizerConfig sgd;
    sgd.kind = train::OptKind::sgd;
    sgd.lr = lr;
    train::Optimizer opt(sgd);
    const CorrPair pre = val_correlations(spec, params, data);

    SelectivityResult r;
    for (int step = 0; step < steps; ++step) {
        std::vector<int> idx(batch_size);
        for (int& i : idx) i = rng.uniform_int(data.train_set.size());
        const models::Batch batch = data.train_set.gather(idx, 0, batch_size);
        Matrix f12_t(batch_size, 1), f23_t(batch_size, 1);
        for (int i = 0; i < batch_size; ++i) {
            f12_t.at(i, 0) = data.f12_train[idx[i]];
            f23_t.at(i, 0) = data.f23_train[idx[i]];
        }

        ad::Tape tape;
        models::BoundModel bound = models::bind(tape, spec, params);
        ad::Var out = models::forward(tape, bound, batch);
        // descend on the retained task, ascend on the forgotten one
        ad::Var loss = ad::add(tape, ad::mse(tape, out, f23_t),
                               ad::scale(tape, ad::mse(tape, out, f12_t), -forget_weight));
        if (!tape.value(out).all_finite()) {
            r.diverged = true;
            break;
        }
        tape.backward(loss);
        std::map<std::string, Matrix> grads;
        for (const auto& [name, var] : bound.vars) grads[name] = tape.grad(var);
        try {
            opt.step(params, grads);
        } catch (const train::nan_gradient_error&) {
            r.diverged = true;
            break;
        }
    }

    const CorrPair post = val_correlations(spec, params, data);
    r.delta_f12 = pre.f12 - post.f12;
    r.delta_f23 = pre.f23 - post.f23;
    r.flagged = r.delta_f23 < eps;
    r.ratio = r.delta_f12 / std::max(r.delta_f23, eps);
    return r;
}

}  // namespace dlab::unlearn
