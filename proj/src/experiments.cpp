#include "dlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "dlab/io.hpp"

namespace dlab::xp {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / v.size();
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / (v.size() - 1));
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

namespace {

uint64_t derive_seed(uint64_t seed, uint64_t salt) {
    uint64_t x = seed * 0x9e3779b97f4a7c15ULL + salt + 0x632be59bd9b4e019ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// CSV with string-valued cells (family names, roles); numeric CSVs go
// through io::Csv so plot_csv can read them back.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_table: cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
}

std::string num(double v) { return io::fmt(v); }

void write_epoch_csv(const std::string& path, const train::RunReport& rep) {
    std::vector<std::string> header = {"epoch", "loss", "val_acc"};
    for (const auto& [name, series] : rep.probes) header.push_back("probe_" + name);
    std::vector<std::vector<std::string>> rows;
    for (size_t e = 0; e < rep.train_loss.size(); ++e) {
        std::vector<std::string> row = {std::to_string(e), num(rep.train_loss[e]),
                                        num(e < rep.val_metric.size() ? rep.val_metric[e] : 0.0)};
        for (const auto& [name, series] : rep.probes) {
            row.push_back(num(e < series.size() ? series[e] : 0.0));
        }
        rows.push_back(std::move(row));
    }
    write_table(path, header, rows);
}

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// modular arithmetic
// ---------------------------------------------------------------------------

models::ModelSpec mod_arith_spec(const std::string& family, int p, int d, int m) {
    models::ModelSpec spec;
    spec.family = models::family_from_name(family);
    spec.input_mode = spec.family == models::Family::bilinear ? models::InputMode::pair_embed
                                                              : models::InputMode::concat_embed;
    spec.vocab = p;
    spec.embed_dim = d;
    spec.hidden = m;
    spec.output = p;
    spec.head = models::Head::classifier;
    return spec;
}

double ModArithResult::family_mean_entropy(const std::string& family) const {
    std::vector<double> v;
    for (const auto& r : runs) {
        if (r.family == family) v.push_back(r.mean_entropy);
    }
    return mean(v);
}

double ModArithResult::family_mean_rank90(const std::string& family) const {
    std::vector<double> v;
    for (const auto& r : runs) {
        if (r.family == family) v.push_back(r.mean_rank90);
    }
    return mean(v);
}

ModArithResult run_mod_arith(const ModArithConfig& cfg, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    ModArithResult result;
    result.config = cfg;
    const int cells = static_cast<int>(cfg.families.size() * cfg.seeds.size());
    result.runs.resize(cells);

    parallel_for(cells, ctx.jobs, [&](int cell) {
        const std::string& family = cfg.families[cell / cfg.seeds.size()];
        const uint64_t seed = cfg.seeds[cell % cfg.seeds.size()];
        const size_t family_idx = cell / cfg.seeds.size();

        const tasks::ModArithDataset data = gen_mod_arith(cfg.p, cfg.op, cfg.split, seed);
        const models::ModelSpec spec = mod_arith_spec(family, cfg.p, cfg.embed_dim, cfg.hidden);
        models::ModelParams params = models::init(spec, derive_seed(seed, 11 + family_idx));

        train::TrainConfig tc;
        tc.batch_size = std::min(cfg.batch, data.train_set.size());
        tc.epochs = cfg.epochs;
        tc.seed = derive_seed(seed, 29 + family_idx);
        tc.early_stop_val_acc = cfg.early_stop;
        tc.loss = train::LossKind::cross_entropy;
        train::OptimizerConfig oc;
        oc.kind = train::OptKind::adamw;
        oc.lr = cfg.lr;
        oc.weight_decay = cfg.weight_decay;

        const train::RunReport rep =
            train::train(spec, params, data.train_set, data.val_set, tc, oc);

        ModArithRun run;
        run.family = family;
        run.seed = seed;
        run.epochs_run = rep.epochs_run;
        run.final_val_acc = rep.val_metric.empty() ? 0.0 : rep.val_metric.back();
        run.early_stopped = rep.early_stopped;
        run.diverged = rep.diverged;

        const std::vector<Matrix> mks =
            models::all_class_interaction_matrices(spec, params, cfg.p);
        if (cfg.op == tasks::ModOp::add) {
            run.entropies.reserve(cfg.p);
            for (const Matrix& mk : mks) run.entropies.push_back(spectral::fourier_entropy(mk));
            run.mean_entropy = mean(run.entropies);
        } else {
            std::vector<double> decay_acc;
            std::vector<std::vector<double>> per_class_decay;
            for (const Matrix& mk : mks) {
                const spectral::SVDResult s = spectral::svd(spectral::center(mk));
                run.rank90.push_back(spectral::rank_for_energy(s, 0.9));
                std::vector<double> d = spectral::sv_decay(s);
                if (decay_acc.empty()) decay_acc.assign(d.size(), 0.0);
                for (size_t i = 0; i < d.size(); ++i) decay_acc[i] += d[i];
                if (!ctx.out_dir.empty()) per_class_decay.push_back(std::move(d));
            }
            for (double& v : decay_acc) v /= mks.size();
            run.sv_decay_mean = std::move(decay_acc);
            double acc = 0.0;
            for (int r : run.rank90) acc += r;
            run.mean_rank90 = acc / run.rank90.size();
            if (!ctx.out_dir.empty()) {
                io::Csv decay{{"class", "i", "sigma_ratio"}, {}};
                for (size_t k = 0; k < per_class_decay.size(); ++k) {
                    for (size_t i = 0; i < per_class_decay[k].size(); ++i) {
                        decay.rows.push_back({static_cast<double>(k), static_cast<double>(i + 1),
                                              per_class_decay[k][i]});
                    }
                }
                io::write_csv(ctx.out_dir + "/sv_decay_" + family + "_s" +
                                  std::to_string(seed) + ".csv",
                              decay);
            }
        }

        if (!ctx.out_dir.empty()) {
            const std::string tag = family + "_s" + std::to_string(seed);
            write_epoch_csv(ctx.out_dir + "/epochs_" + tag + ".csv", rep);
            if (cfg.op == tasks::ModOp::add) {
                io::Csv ent{{"class", "entropy"}, {}};
                for (int k = 0; k < cfg.p; ++k) {
                    ent.rows.push_back({static_cast<double>(k), run.entropies[k]});
                }
                io::write_csv(ctx.out_dir + "/entropy_" + tag + ".csv", ent);
                if (seed == cfg.seeds.front()) {
                    const spectral::CMatrix f = spectral::dft2(mks[1 % cfg.p]);
                    Matrix mag(cfg.p, cfg.p);
                    for (size_t i = 0; i < mag.data.size(); ++i) {
                        mag.data[i] = std::hypot(f.re.data[i], f.im.data[i]);
                    }
                    io::write_heatmap_svg(ctx.out_dir + "/spectrum_" + family + ".svg",
                                          "dft magnitude, class 1, " + family, mag);
                }
            } else {
                io::Csv rk{{"class", "rank90"}, {}};
                for (int k = 0; k < cfg.p; ++k) {
                    rk.rows.push_back({static_cast<double>(k),
                                       static_cast<double>(run.rank90[k])});
                }
                io::write_csv(ctx.out_dir + "/rank90_" + tag + ".csv", rk);
            }
        }
        result.runs[cell] = std::move(run);
    });

    if (!ctx.out_dir.empty()) {
        std::vector<std::string> artifacts;
        if (cfg.dump_data) {
            const tasks::ModArithDataset grid =
                gen_mod_arith(cfg.p, cfg.op, cfg.split, cfg.seeds.front());
            tasks::export_csv(grid.full, ctx.out_dir + "/dataset.csv");
        }
        // family-level summaries
        if (cfg.op == tasks::ModOp::add) {
            for (const auto& family : cfg.families) {
                std::vector<double> values;
                for (const auto& r : result.runs) {
                    if (r.family == family) {
                        values.insert(values.end(), r.entropies.begin(), r.entropies.end());
                    }
                }
                const std::string path = ctx.out_dir + "/entropy_hist_" + family + ".svg";
                io::write_histogram_svg(path, "fourier entropy, " + family, "H (nats)", values,
                                        24, std::log(static_cast<double>(cfg.p)));
                artifacts.push_back(path);
            }
        } else {
            std::vector<io::Series> series;
            for (const auto& family : cfg.families) {
                io::Series s;
                s.label = family;
                std::vector<double> acc;
                int count = 0;
                for (const auto& r : result.runs) {
                    if (r.family != family || r.sv_decay_mean.empty()) continue;
                    if (acc.empty()) acc.assign(r.sv_decay_mean.size(), 0.0);
                    for (size_t i = 0; i < acc.size(); ++i) acc[i] += r.sv_decay_mean[i];
                    ++count;
                }
                for (size_t i = 0; i < acc.size(); ++i) {
                    s.x.push_back(static_cast<double>(i + 1));
                    s.y.push_back(acc[i] / std::max(1, count));
                }
                series.push_back(std::move(s));
            }
            const std::string path = ctx.out_dir + "/sv_decay.svg";
            io::write_line_svg(path, "normalized singular value decay", "i", "sigma_i/sigma_1",
                               series);
            artifacts.push_back(path);
        }

        std::vector<std::vector<std::string>> rows;
        for (const auto& r : result.runs) {
            rows.push_back({r.family, std::to_string(r.seed), std::to_string(r.epochs_run),
                            num(r.final_val_acc), r.early_stopped ? "1" : "0",
                            cfg.op == tasks::ModOp::add ? num(r.mean_entropy)
                                                        : num(r.mean_rank90)});
        }
        write_table(ctx.out_dir + "/runs.csv",
                    {"family", "seed", "epochs", "val_acc", "early_stopped", "metric"}, rows);

        const nlohmann::json report = mod_arith_report(result);
        write_report(ctx.out_dir,
                     cfg.op == tasks::ModOp::add ? "mod-add" : "mod-mul", report.at("config"),
                     report.at("cells"), report.at("aggregate"), wall_seconds(t0), artifacts);
    }
    return result;
}

// ---------------------------------------------------------------------------
// cyclic extrapolation
// ---------------------------------------------------------------------------

models::ModelSpec cycle_spec(const std::string& family, int p, int d, int m) {
    models::ModelSpec spec;
    spec.family = models::family_from_name(family);
    spec.input_mode = spec.family == models::Family::bilinear ? models::InputMode::pair_embed
                                                              : models::InputMode::concat_embed;
    spec.vocab = p + 1;  // reserved row for the function identifier
    spec.embed_dim = d;
    spec.hidden = m;
    spec.output = p;
    spec.head = models::Head::classifier;
    return spec;
}

double CycleResult::family_mean_horizon(const std::string& family) const {
    std::vector<double> v;
    for (const auto& r : runs) {
        if (r.family == family) v.push_back(static_cast<double>(r.horizon));
    }
    return mean(v);
}

double CycleResult::family_mean_entropy(const std::string& family) const {
    std::vector<double> v;
    for (const auto& r : runs) {
        if (r.family == family) v.push_back(r.mean_col_entropy);
    }
    return mean(v);
}

CycleResult run_cycle(const CycleConfig& cfg, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    CycleResult result;
    result.config = cfg;
    const int cells = static_cast<int>(cfg.families.size() * cfg.seeds.size());
    result.runs.resize(cells);
    const train::Dataset data = tasks::gen_cycle(cfg.p);

    parallel_for(cells, ctx.jobs, [&](int cell) {
        const std::string& family = cfg.families[cell / cfg.seeds.size()];
        const uint64_t seed = cfg.seeds[cell % cfg.seeds.size()];
        const size_t family_idx = cell / cfg.seeds.size();

        const models::ModelSpec spec = cycle_spec(family, cfg.p, cfg.embed_dim, cfg.hidden);
        models::ModelParams params = models::init(spec, derive_seed(seed, 101 + family_idx));

        train::TrainConfig tc;
        tc.batch_size = std::min(cfg.batch, cfg.p);
        tc.epochs = cfg.epochs;
        tc.seed = derive_seed(seed, 211 + family_idx);
        tc.loss = train::LossKind::cross_entropy;
        train::OptimizerConfig oc;
        oc.kind = train::OptKind::adam;
        oc.lr = cfg.lr;

        const train::RunReport rep = train::train(spec, params, data, data, tc, oc);

        CycleRun run;
        run.family = family;
        run.seed = seed;
        run.diverged = rep.diverged;
        run.train_acc = rep.val_metric.empty() ? 0.0 : rep.val_metric.back();
        if (!rep.diverged) {
            const opdyn::TransitionOperator op = opdyn::extract_transition(spec, params, cfg.p);
            run.mean_col_entropy = mean(opdyn::column_entropy(op.t));
            run.accuracy = opdyn::accuracy_curve(op.t, cfg.i_max);
            run.horizon = opdyn::horizon_at_threshold(run.accuracy, cfg.horizon_threshold);
        }

        if (!ctx.out_dir.empty() && !rep.diverged) {
            const std::string tag = family + "_s" + std::to_string(seed);
            write_epoch_csv(ctx.out_dir + "/epochs_" + tag + ".csv", rep);
            io::Csv acc{{"i", "accuracy"}, {}};
            for (size_t i = 0; i < run.accuracy.size(); ++i) {
                acc.rows.push_back({static_cast<double>(i + 1), run.accuracy[i]});
            }
            io::write_csv(ctx.out_dir + "/accuracy_" + tag + ".csv", acc);
            const opdyn::TransitionOperator op = opdyn::extract_transition(spec, params, cfg.p);
            const std::vector<double> ent = opdyn::column_entropy(op.t);
            io::Csv colent{{"a", "column_entropy"}, {}};
            for (size_t a = 0; a < ent.size(); ++a) {
                colent.rows.push_back({static_cast<double>(a), ent[a]});
            }
            io::write_csv(ctx.out_dir + "/column_entropy_" + tag + ".csv", colent);
        }
        result.runs[cell] = std::move(run);
    });

    if (!ctx.out_dir.empty()) {
        std::vector<std::string> artifacts;
        if (cfg.dump_data) tasks::export_csv(data, ctx.out_dir + "/dataset.csv");
        std::vector<io::Series> series;
        for (const auto& family : cfg.families) {
            io::Series s;
            s.label = family;
            std::vector<double> acc;
            int count = 0;
            for (const auto& r : result.runs) {
                if (r.family != family || r.accuracy.empty()) continue;
                if (acc.empty()) acc.assign(r.accuracy.size(), 0.0);
                for (size_t i = 0; i < acc.size(); ++i) acc[i] += r.accuracy[i];
                ++count;
            }
            for (size_t i = 0; i < acc.size(); ++i) {
                s.x.push_back(static_cast<double>(i + 1));
                s.y.push_back(acc[i] / std::max(1, count));
            }
            if (!s.x.empty()) series.push_back(std::move(s));
        }
        if (!series.empty()) {
            const std::string path = ctx.out_dir + "/accuracy_decay.svg";
            io::write_line_svg(path, "multi-step accuracy", "composition depth i", "accuracy",
                               series);
            artifacts.push_back(path);
        }
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : result.runs) {
            rows.push_back({r.family, std::to_string(r.seed), num(r.train_acc),
                            num(r.mean_col_entropy), std::to_string(r.horizon)});
        }
        write_table(ctx.out_dir + "/runs.csv",
                    {"family", "seed", "train_acc", "mean_col_entropy", "horizon"}, rows);
        const nlohmann::json report = cycle_report(result);
        write_report(ctx.out_dir, "cycle", report.at("config"), report.at("cells"),
                     report.at("aggregate"), wall_seconds(t0), artifacts);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Lie group dynamics
// ---------------------------------------------------------------------------

models::ModelSpec lie_spec(const std::string& family, LieTask task, int hidden) {
    models::ModelSpec spec;
    spec.family = models::family_from_name(family);
    spec.in1 = task == LieTask::quaternion ? 4 : 2;
    spec.in2 = task == LieTask::quaternion ? 3 : 4;
    spec.input_mode = spec.family == models::Family::bilinear ? models::InputMode::raw_split
                                                              : models::InputMode::raw_vector;
    spec.hidden = hidden;
    spec.output = task == LieTask::quaternion ? 4 : 2;
    spec.head = models::Head::regression;
    spec.out_bias = models::is_pointwise(spec.family);
    return spec;
}

double LieResult::family_median_drift(const std::string& family) const {
    std::vector<double> v;
    for (const auto& r : runs) {
        if (r.family == family) v.push_back(r.drift_at_end);
    }
    return median(v);
}

LieResult run_lie(const LieConfig& cfg, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    LieResult result;
    result.config = cfg;
    const int cells = static_cast<int>(cfg.families.size() * cfg.seeds.size());
    result.runs.resize(cells);

    parallel_for(cells, ctx.jobs, [&](int cell) {
        const std::string& family = cfg.families[cell / cfg.seeds.size()];
        const uint64_t seed = cfg.seeds[cell % cfg.seeds.size()];
        const size_t family_idx = cell / cfg.seeds.size();

        const models::ModelSpec spec = lie_spec(family, cfg.task, cfg.hidden);
        models::ModelParams params = models::init(spec, derive_seed(seed, 301 + family_idx));

        train::TrainConfig tc;
        tc.batch_size = cfg.batch;
        tc.seed = derive_seed(seed, 401 + family_idx);
        tc.loss = train::LossKind::mse;
        train::OptimizerConfig oc;
        oc.kind = train::OptKind::adam;
        oc.lr = cfg.lr;

        const train::BatchSampler sampler = [&](Rng& rng) {
            const train::Dataset d = cfg.task == LieTask::quaternion
                                         ? tasks::gen_quaternion_batch(cfg.batch, cfg.dt, rng)
                                         : tasks::gen_sl2_batch(cfg.batch, cfg.dt, rng);
            return d.full();
        };
        const train::RunReport rep =
            train::train_stream(spec, params, sampler, cfg.iterations, tc, oc);

        LieRun run;
        run.family = family;
        run.seed = seed;
        run.diverged = rep.diverged;
        run.final_train_loss = rep.train_loss.empty() ? 0.0 : rep.train_loss.back();

        // shared evaluation inputs: one rollout per seed, identical across families
        Rng eval_rng(derive_seed(seed, 7777));
        if (cfg.task == LieTask::quaternion) {
            Matrix q0 = eval_rng.normal_matrix(1, 4);
            q0 *= 1.0 / frobenius_norm(q0);
            Matrix omega = eval_rng.normal_matrix(1, 3);
            omega *= cfg.omega_norm / frobenius_norm(omega);
            const opdyn::RolloutTrace trace =
                opdyn::rollout_quaternion(spec, params, q0, omega, cfg.rollout_steps);
            run.trace = trace.metric;
            run.diverged = run.diverged || trace.diverged;
        } else {
            Matrix g(1, 4);
            for (double& v : g.data) v = eval_rng.normal();
            const double half_tr = 0.5 * (g.data[0] + g.data[3]);
            g.data[0] -= half_tr;
            g.data[3] -= half_tr;
            g *= cfg.g_scale / frobenius_norm(g);
            const opdyn::RolloutTrace trace =
                opdyn::rollout_sl2(spec, params, g, cfg.rollout_steps);
            run.trace = trace.metric;
            run.diverged = run.diverged || trace.diverged;
        }
        run.drift_at_end =
            run.diverged ? 1e9 : std::abs(run.trace.back() - 1.0);

        if (!ctx.out_dir.empty()) {
            const std::string metric = cfg.task == LieTask::quaternion ? "norm" : "area";
            const std::string tag = family + "_s" + std::to_string(seed);
            io::Csv csv{{"step", metric}, {}};
            for (size_t i = 0; i < run.trace.size(); ++i) {
                csv.rows.push_back({static_cast<double>(i), run.trace[i]});
            }
            io::write_csv(ctx.out_dir + "/" + metric + "_" + tag + ".csv", csv);
        }
        result.runs[cell] = std::move(run);
    });

    if (!ctx.out_dir.empty()) {
        std::vector<std::string> artifacts;
        std::vector<io::Series> series;
        for (const auto& r : result.runs) {
            if (r.trace.empty()) continue;
            io::Series s;
            s.label = r.family + " s" + std::to_string(r.seed);
            for (size_t i = 0; i < r.trace.size(); ++i) {
                s.x.push_back(static_cast<double>(i));
                s.y.push_back(r.trace[i]);
            }
            series.push_back(std::move(s));
        }
        const std::string metric = cfg.task == LieTask::quaternion ? "norm" : "area";
        if (!series.empty()) {
            const std::string path = ctx.out_dir + "/" + metric + "_traces.svg";
            io::write_line_svg(path, metric + " under rollout", "step", metric, series);
            artifacts.push_back(path);
        }
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : result.runs) {
            rows.push_back({r.family, std::to_string(r.seed), num(r.final_train_loss),
                            num(r.drift_at_end), r.diverged ? "1" : "0"});
        }
        write_table(ctx.out_dir + "/runs.csv",
                    {"family", "seed", "final_loss", "drift_at_end", "diverged"}, rows);
        const nlohmann::json report = lie_report(result);
        write_report(ctx.out_dir, cfg.task == LieTask::quaternion ? "quat" : "sl2",
                     report.at("config"), report.at("cells"), report.at("aggregate"),
                     wall_seconds(t0), artifacts);
    }
    return result;
}

// ---------------------------------------------------------------------------
// alpha-mixed superposition unlearning
// ---------------------------------------------------------------------------

models::ModelSpec ortho_spec(const std::string& family, int d, int m) {
    models::ModelSpec spec;
    spec.family = models::family_from_name(family);
    spec.in1 = d;
    spec.in2 = d;
    spec.input_mode = spec.family == models::Family::bilinear ? models::InputMode::raw_split
                                                              : models::InputMode::raw_vector;
    spec.hidden = m;
    spec.output = 1;
    spec.head = models::Head::scalar;
    return spec;
}

const OrthoRun* OrthoResult::find(const std::string& family, double alpha, uint64_t seed) const {
    for (const auto& r : runs) {
        if (r.family == family && std::abs(r.alpha - alpha) < 1e-12 && r.seed == seed) return &r;
    }
    return nullptr;
}

OrthoResult run_ortho(const OrthoConfig& cfg, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    OrthoResult result;
    result.config = cfg;
    const int n_alpha = static_cast<int>(cfg.alphas.size());
    const int n_seed = static_cast<int>(cfg.seeds.size());
    const int cells = static_cast<int>(cfg.families.size()) * n_alpha * n_seed;
    result.runs.resize(cells);

    parallel_for(cells, ctx.jobs, [&](int cell) {
        const size_t family_idx = cell / (n_alpha * n_seed);
        const std::string& family = cfg.families[family_idx];
        const double alpha = cfg.alphas[(cell / n_seed) % n_alpha];
        const uint64_t seed = cfg.seeds[cell % n_seed];
        const bool bilinear = family == "bilinear";

        // the task is shared across families for a given (alpha, seed)
        const uint64_t task_seed =
            derive_seed(seed, 501 + static_cast<uint64_t>(std::lround(alpha * 1000.0)));
        const tasks::SuperpositionTasks task = tasks::gen_superposition(
            cfg.d, cfg.n_tokens, alpha, cfg.lambda, task_seed, cfg.dataset_size);

        const models::ModelSpec spec = ortho_spec(family, cfg.d, cfg.hidden);
        models::ModelParams params = models::init(spec, derive_seed(seed, 601 + family_idx),
                                                  models::InitScheme::kaiming_normalized);

        train::Phase p1, p2;
        p1.data = &task.phase1;
        p1.cfg.batch_size = cfg.batch;
        p1.cfg.epochs = bilinear ? cfg.phase1_epochs_bilinear : cfg.phase1_epochs_other;
        p1.cfg.seed = derive_seed(seed, 701 + family_idx);
        p1.cfg.loss = train::LossKind::mse;
        p1.opt.kind = train::OptKind::adam;
        p1.opt.lr = cfg.phase1_lr;

        p2.data = &task.phase2;
        p2.cfg = p1.cfg;
        p2.cfg.epochs = bilinear ? cfg.phase2_epochs_bilinear : cfg.phase2_epochs_other;
        p2.cfg.seed = derive_seed(seed, 801 + family_idx);
        p2.opt.kind = train::OptKind::sgd;
        p2.opt.lr = cfg.phase2_lr;

        std::vector<train::NamedProbe> probes = {
            {"score_a",
             [&spec, &task](const models::ModelParams& p) {
                 return unlearn::score_tasks(spec, p, task).score_a;
             }},
            {"score_b", [&spec, &task](const models::ModelParams& p) {
                 return unlearn::score_tasks(spec, p, task).score_b;
             }}};

        const train::RunReport rep = train::two_phase_train(spec, params, p1, p2, probes);

        OrthoRun run;
        run.family = family;
        run.alpha = alpha;
        run.seed = seed;
        run.diverged = rep.diverged;
        run.phase_boundary = rep.phase_boundary;
        run.score_a = rep.probes.count("score_a") ? rep.probes.at("score_a")
                                                  : std::vector<double>{};
        run.score_b = rep.probes.count("score_b") ? rep.probes.at("score_b")
                                                  : std::vector<double>{};
        run.target = unlearn::score_target(task);
        if (!run.score_b.empty()) {
            run.end_score_a = run.score_a.back();
            run.end_score_b = run.score_b.back();
            const int p1_end = std::max(0, run.phase_boundary - 1);
            run.phase1_end_score_b =
                run.score_b[std::min<size_t>(p1_end, run.score_b.size() - 1)];
            run.distortion = std::abs(run.phase1_end_score_b - run.target);
        }

        if (!ctx.out_dir.empty() && !run.score_a.empty()) {
            char alpha_buf[16];
            std::snprintf(alpha_buf, sizeof(alpha_buf), "%.2f", alpha);
            const std::string tag =
                family + "_a" + alpha_buf + "_s" + std::to_string(seed);
            std::vector<std::vector<std::string>> rows;
            for (size_t e = 0; e < run.score_a.size(); ++e) {
                rows.push_back({static_cast<int>(e) < run.phase_boundary ? "1" : "2",
                                std::to_string(e), num(run.score_a[e]), num(run.score_b[e])});
            }
            write_table(ctx.out_dir + "/scores_" + tag + ".csv",
                        {"phase", "epoch", "score_A", "score_B"}, rows);
        }
        result.runs[cell] = std::move(run);
    });

    if (!ctx.out_dir.empty()) {
        std::vector<std::string> artifacts;
        // distortion summary across the alpha grid (mean over seeds)
        std::vector<std::vector<std::string>> dist_rows;
        std::vector<io::Series> dist_series;
        for (const auto& family : cfg.families) {
            io::Series s;
            s.label = family;
            for (double alpha : cfg.alphas) {
                std::vector<double> ds;
                for (const auto& r : result.runs) {
                    if (r.family == family && std::abs(r.alpha - alpha) < 1e-12) {
                        ds.push_back(r.distortion);
                    }
                }
                dist_rows.push_back({num(alpha), family, num(mean(ds))});
                s.x.push_back(alpha);
                s.y.push_back(mean(ds));
            }
            dist_series.push_back(std::move(s));
        }
        write_table(ctx.out_dir + "/distortion.csv", {"alpha", "family", "distortion"},
                    dist_rows);
        const std::string dist_svg = ctx.out_dir + "/distortion.svg";
        io::write_line_svg(dist_svg, "task preservation distortion", "alpha", "distortion",
                           dist_series);
        artifacts.push_back(dist_svg);

        // per-cell score trajectories for the first seed
        for (const auto& r : result.runs) {
            if (r.seed != cfg.seeds.front() || r.score_a.empty()) continue;
            char alpha_buf[16];
            std::snprintf(alpha_buf, sizeof(alpha_buf), "%.2f", r.alpha);
            io::Series sa{"score_A", {}, {}}, sb{"score_B", {}, {}};
            for (size_t e = 0; e < r.score_a.size(); ++e) {
                sa.x.push_back(static_cast<double>(e));
                sa.y.push_back(r.score_a[e]);
                sb.x.push_back(static_cast<double>(e));
                sb.y.push_back(r.score_b[e]);
            }
            const std::string path = ctx.out_dir + "/scores_" + r.family + "_a" + alpha_buf +
                                     "_s" + std::to_string(r.seed) + ".svg";
            io::write_line_svg(path, r.family + ", alpha=" + alpha_buf, "epoch", "score",
                               {sa, sb});
        }
        const nlohmann::json report = ortho_report(result);
        write_report(ctx.out_dir, "ortho-unlearn", report.at("config"), report.at("cells"),
                     report.at("aggregate"), wall_seconds(t0), artifacts);
    }
    return result;
}

// ---------------------------------------------------------------------------
// entangled superposition unlearning
// ---------------------------------------------------------------------------

models::ModelSpec entangled_spec(const std::string& family, int d, int m) {
    models::ModelSpec spec;
    spec.family = models::family_from_name(family);
    spec.in1 = 3 * d;
    spec.input_mode = models::InputMode::raw_vector;
    spec.hidden = m;
    spec.output = 1;
    spec.head = models::Head::scalar;
    return spec;
}

double EntangledResult::family_mean_selectivity(const std::string& family, int rank) const {
    std::vector<double> v;
    for (const auto& r : runs) {
        if (r.family == family && r.rank == rank) v.push_back(r.selectivity.ratio);
    }
    return mean(v);
}

double EntangledResult::family_mean_mixed_frac(const std::string& family, int rank) const {
    std::vector<double> v;
    for (const auto& r : runs) {
        if (r.family == family && r.rank == rank) v.push_back(r.mixed_frac);
    }
    return mean(v);
}

EntangledResult run_entangled(const EntangledConfig& cfg, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    EntangledResult result;
    result.config = cfg;
    const int n_rank = static_cast<int>(cfg.ranks.size());
    const int n_seed = static_cast<int>(cfg.seeds.size());
    const int cells = static_cast<int>(cfg.families.size()) * n_rank * n_seed;
    result.runs.resize(cells);

    parallel_for(cells, ctx.jobs, [&](int cell) {
        const size_t family_idx = cell / (n_rank * n_seed);
        const std::string& family = cfg.families[family_idx];
        const int rank = cfg.ranks[(cell / n_seed) % n_rank];
        const uint64_t seed = cfg.seeds[cell % n_seed];

        const uint64_t task_seed = derive_seed(seed, 901 + static_cast<uint64_t>(rank));
        const tasks::EntangledDataset data =
            tasks::gen_entangled(cfg.d, rank, cfg.n_train, cfg.n_val, task_seed);

        const models::ModelSpec spec = entangled_spec(family, cfg.d, cfg.hidden);
        models::ModelParams params = models::init(spec, derive_seed(seed, 1001 + family_idx));

        train::TrainConfig tc;
        tc.batch_size = cfg.batch;
        tc.epochs = cfg.epochs;
        tc.seed = derive_seed(seed, 1101 + family_idx);
        tc.loss = train::LossKind::mse;
        tc.l1_weight = cfg.l1;
        train::OptimizerConfig oc;
        oc.kind = train::OptKind::adam;
        oc.lr = cfg.lr;

        const train::RunReport rep =
            train::train(spec, params, data.train_set, data.val_set, tc, oc);

        EntangledRun run;
        run.family = family;
        run.rank = rank;
        run.seed = seed;
        run.diverged = rep.diverged;
        if (!rep.diverged) {
            const std::vector<double> out =
                models::forward_eval(spec, params, data.val_set.full()).data;
            run.pre_corr_f12 = unlearn::pearson(out, data.f12_val);
            run.pre_corr_f23 = unlearn::pearson(out, data.f23_val);

            const unlearn::NeuronReport roles = unlearn::classify_neurons(spec, params, cfg.d);
            run.dead_frac = roles.fraction(unlearn::NeuronRole::dead);
            run.pure12_frac = roles.fraction(unlearn::NeuronRole::pure_f12);
            run.pure23_frac = roles.fraction(unlearn::NeuronRole::pure_f23);
            run.mixed_frac = roles.fraction(unlearn::NeuronRole::mixed);

            run.pareto = unlearn::prune_sweep(spec, params, cfg.d, data.val_set, data.f12_val,
                                              data.f23_val);

            models::ModelParams unlearn_params = params;
            train::OptimizerConfig uo;
            uo.kind = train::OptKind::adam;
            uo.lr = cfg.lr;
            run.unlearn_series =
                unlearn::gradient_unlearn(spec, unlearn_params, data, cfg.unlearn_steps, uo,
                                          cfg.batch, derive_seed(seed, 1201 + family_idx));

            models::ModelParams attack_params = params;
            run.selectivity = unlearn::selectivity_attack(
                spec, attack_params, data, cfg.attack_steps, cfg.attack_lr, cfg.forget_weight,
                cfg.batch, derive_seed(seed, 1301 + family_idx));

            if (!ctx.out_dir.empty()) {
                const std::string tag = family + "_r" + std::to_string(rank) + "_s" +
                                        std::to_string(seed);
                std::vector<std::vector<std::string>> role_rows;
                for (size_t h = 0; h < roles.roles.size(); ++h) {
                    role_rows.push_back({std::to_string(h),
                                         unlearn::role_name(roles.roles[h]),
                                         num(roles.s12[h]), num(roles.s23[h])});
                }
                write_table(ctx.out_dir + "/roles_" + tag + ".csv",
                            {"neuron", "role", "S12", "S23"}, role_rows);

                io::Csv unl{{"step", "corr_f12", "corr_f23"}, {}};
                for (size_t s = 0; s < run.unlearn_series.corr_f12.size(); ++s) {
                    unl.rows.push_back({static_cast<double>(s), run.unlearn_series.corr_f12[s],
                                        run.unlearn_series.corr_f23[s]});
                }
                io::write_csv(ctx.out_dir + "/unlearn_" + tag + ".csv", unl);
            }
        }
        result.runs[cell] = std::move(run);
    });

    if (!ctx.out_dir.empty()) {
        std::vector<std::string> artifacts;
        for (const auto& family : cfg.families) {
            for (int rank : cfg.ranks) {
                std::vector<std::vector<std::string>> rows;
                std::vector<io::Series> series;
                for (const auto& r : result.runs) {
                    if (r.family != family || r.rank != rank || r.pareto.ret_f12.empty()) {
                        continue;
                    }
                    io::Series s;
                    s.label = "seed " + std::to_string(r.seed);
                    for (size_t i = 0; i < r.pareto.ret_f12.size(); ++i) {
                        rows.push_back({std::to_string(i), num(r.pareto.ret_f12[i]),
                                        num(r.pareto.ret_f23[i]), std::to_string(r.seed)});
                        s.x.push_back(r.pareto.ret_f12[i]);
                        s.y.push_back(r.pareto.ret_f23[i]);
                    }
                    series.push_back(std::move(s));
                }
                if (rows.empty()) continue;
                const std::string tag = family + "_r" + std::to_string(rank);
                write_table(ctx.out_dir + "/pareto_" + tag + ".csv",
                            {"pruned", "ret_f12", "ret_f23", "seed"}, rows);
                const std::string path = ctx.out_dir + "/pareto_" + tag + ".svg";
                io::write_line_svg(path, "pruning frontier, " + tag, "retention f12",
                                   "retention f23", series);
                artifacts.push_back(path);
            }
        }
        std::vector<std::vector<std::string>> sel_rows;
        for (const auto& r : result.runs) {
            sel_rows.push_back({std::to_string(r.rank), r.family, std::to_string(r.seed),
                                num(r.selectivity.ratio)});
        }
        write_table(ctx.out_dir + "/selectivity.csv", {"rank", "family", "seed", "selectivity"},
                    sel_rows);
        const nlohmann::json report = entangled_report(result);
        write_report(ctx.out_dir, "entangled", report.at("config"), report.at("cells"),
                     report.at("aggregate"), wall_seconds(t0), artifacts);
    }
    return result;
}

// ---------------------------------------------------------------------------
// gradient-flow validator
// ---------------------------------------------------------------------------

FlowXpResult run_flow(const FlowXpConfig& cfg, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    FlowXpResult result;
    result.config = cfg;
    result.runs.resize(cfg.eps_sweep.size());

    parallel_for(static_cast<int>(cfg.eps_sweep.size()), ctx.jobs, [&](int i) {
        FlowXpRun run;
        run.eps = cfg.eps_sweep[i];
        flow::FlowConfig fc;
        fc.n = cfg.n;
        fc.spectrum = cfg.spectrum;
        fc.eps = run.eps;
        fc.aligned_init = cfg.aligned;
        fc.symmetric = cfg.symmetric;
        fc.h = cfg.h;
        fc.seed = cfg.seed;
        flow::FlowState state = flow::make_state(fc);
        const double t_end = flow::default_t_end(cfg.spectrum);
        run.converge_trace = flow::integrate(state, t_end);
        run.peak_cross_ratio = run.converge_trace.peak_cross_ratio();
        if (cfg.unlearn_k >= 0) {
            run.unlearn_trace = flow::unlearn_mode(state, cfg.unlearn_k, t_end);
        }
        run.final_loss = state.loss();
        result.runs[i] = std::move(run);
    });

    if (!ctx.out_dir.empty()) {
        std::vector<std::string> artifacts;
        for (const auto& run : result.runs) {
            char eps_buf[24];
            std::snprintf(eps_buf, sizeof(eps_buf), "%g", run.eps);
            const int r = static_cast<int>(cfg.spectrum.size());
            auto dump = [&](const flow::FlowTrace& trace, const std::string& stem) {
                if (trace.t.empty()) return;
                io::Csv csv;
                csv.header = {"t"};
                for (int m = 1; m <= r; ++m) csv.header.push_back("c_" + std::to_string(m));
                csv.header.push_back("max_cross");
                csv.header.push_back("loss");
                for (int step = 0; step < trace.steps(); ++step) {
                    std::vector<double> row = {trace.t[step]};
                    row.insert(row.end(), trace.c[step].begin(), trace.c[step].end());
                    row.push_back(trace.max_cross[step]);
                    row.push_back(trace.loss[step]);
                    csv.rows.push_back(std::move(row));
                }
                io::write_csv(ctx.out_dir + "/" + stem + ".csv", csv);

                std::vector<io::Series> series(r);
                for (int m = 0; m < r; ++m) {
                    series[m].label = "c_" + std::to_string(m + 1);
                    for (int step = 0; step < trace.steps(); ++step) {
                        series[m].x.push_back(trace.t[step]);
                        series[m].y.push_back(trace.c[step][m]);
                    }
                }
                const std::string path = ctx.out_dir + "/" + stem + ".svg";
                io::write_line_svg(path, "modal coefficients, eps=" + std::string(eps_buf), "t",
                                   "c_i", series);
                artifacts.push_back(path);
            };
            dump(run.converge_trace, std::string("flow_eps") + eps_buf);
            dump(run.unlearn_trace, std::string("flow_unlearn_eps") + eps_buf);
        }
        const nlohmann::json report = flow_report(result);
        write_report(ctx.out_dir, "flow", report.at("config"), report.at("cells"),
                     report.at("aggregate"), wall_seconds(t0), artifacts);
    }
    return result;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

void write_report(const std::string& out_dir, const std::string& experiment,
                  const nlohmann::json& config, const nlohmann::json& cells,
                  const nlohmann::json& aggregate, double wall_clock_sec,
                  const std::vector<std::string>& artifacts) {
    nlohmann::json report;
    report["experiment"] = experiment;
    report["config"] = config;
    report["cells"] = cells;
    report["aggregate"] = aggregate;
    report["wall_clock_sec"] = wall_clock_sec;
    nlohmann::json names = nlohmann::json::array();
    for (const auto& a : artifacts) names.push_back(a.substr(a.find_last_of('/') + 1));
    report["artifacts"] = names;
    std::ofstream out(out_dir + "/report.json");
    if (!out) throw std::runtime_error("write_report: cannot open " + out_dir + "/report.json");
    out << report.dump(2) << "\n";
}

nlohmann::json mod_arith_report(const ModArithResult& r) {
    nlohmann::json j;
    j["config"] = {{"p", r.config.p},
                   {"op", r.config.op == tasks::ModOp::add ? "add" : "mul"},
                   {"families", r.config.families},
                   {"seeds", r.config.seeds},
                   {"embed_dim", r.config.embed_dim},
                   {"hidden", r.config.hidden},
                   {"split", r.config.split},
                   {"batch", r.config.batch},
                   {"epochs", r.config.epochs},
                   {"lr", r.config.lr},
                   {"weight_decay", r.config.weight_decay},
                   {"early_stop", r.config.early_stop}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& run : r.runs) {
        cells.push_back({{"family", run.family},
                         {"seed", run.seed},
                         {"epochs_run", run.epochs_run},
                         {"val_acc", run.final_val_acc},
                         {"early_stopped", run.early_stopped},
                         {"diverged", run.diverged},
                         {"mean_entropy", run.mean_entropy},
                         {"mean_rank90", run.mean_rank90}});
    }
    j["cells"] = cells;
    nlohmann::json agg;
    for (const auto& family : r.config.families) {
        agg[family] = {{"mean_entropy", r.family_mean_entropy(family)},
                       {"mean_rank90", r.family_mean_rank90(family)}};
    }
    j["aggregate"] = agg;
    return j;
}

nlohmann::json cycle_report(const CycleResult& r) {
    nlohmann::json j;
    j["config"] = {{"p", r.config.p},         {"families", r.config.families},
                   {"seeds", r.config.seeds}, {"embed_dim", r.config.embed_dim},
                   {"hidden", r.config.hidden}, {"epochs", r.config.epochs},
                   {"batch", r.config.batch}, {"lr", r.config.lr},
                   {"i_max", r.config.i_max}, {"horizon_threshold", r.config.horizon_threshold}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& run : r.runs) {
        cells.push_back({{"family", run.family},
                         {"seed", run.seed},
                         {"train_acc", run.train_acc},
                         {"mean_col_entropy", run.mean_col_entropy},
                         {"horizon", run.horizon},
                         {"diverged", run.diverged}});
    }
    j["cells"] = cells;
    nlohmann::json agg;
    for (const auto& family : r.config.families) {
        agg[family] = {{"mean_horizon", r.family_mean_horizon(family)},
                       {"mean_col_entropy", r.family_mean_entropy(family)}};
    }
    j["aggregate"] = agg;
    return j;
}

nlohmann::json lie_report(const LieResult& r) {
    nlohmann::json j;
    j["config"] = {{"task", r.config.task == LieTask::quaternion ? "quat" : "sl2"},
                   {"families", r.config.families},
                   {"seeds", r.config.seeds},
                   {"hidden", r.config.hidden},
                   {"batch", r.config.batch},
                   {"iterations", r.config.iterations},
                   {"lr", r.config.lr},
                   {"dt", r.config.dt},
                   {"rollout_steps", r.config.rollout_steps},
                   {"omega_norm", r.config.omega_norm},
                   {"g_scale", r.config.g_scale}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& run : r.runs) {
        cells.push_back({{"family", run.family},
                         {"seed", run.seed},
                         {"final_loss", run.final_train_loss},
                         {"drift_at_end", run.drift_at_end},
                         {"diverged", run.diverged}});
    }
    j["cells"] = cells;
    nlohmann::json agg;
    for (const auto& family : r.config.families) {
        agg[family] = {{"median_drift", r.family_median_drift(family)}};
    }
    j["aggregate"] = agg;
    return j;
}

nlohmann::json ortho_report(const OrthoResult& r) {
    nlohmann::json j;
    j["config"] = {{"families", r.config.families},
                   {"alphas", r.config.alphas},
                   {"seeds", r.config.seeds},
                   {"d", r.config.d},
                   {"hidden", r.config.hidden},
                   {"n_tokens", r.config.n_tokens},
                   {"dataset_size", r.config.dataset_size},
                   {"batch", r.config.batch},
                   {"lambda", r.config.lambda},
                   {"phase1_lr", r.config.phase1_lr},
                   {"phase2_lr", r.config.phase2_lr}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& run : r.runs) {
        cells.push_back({{"family", run.family},
                         {"alpha", run.alpha},
                         {"seed", run.seed},
                         {"phase1_end_score_b", run.phase1_end_score_b},
                         {"end_score_a", run.end_score_a},
                         {"end_score_b", run.end_score_b},
                         {"target", run.target},
                         {"distortion", run.distortion},
                         {"diverged", run.diverged}});
    }
    j["cells"] = cells;
    nlohmann::json agg;
    for (const auto& family : r.config.families) {
        std::vector<double> d;
        for (const auto& run : r.runs) {
            if (run.family == family) d.push_back(run.distortion);
        }
        agg[family] = {{"mean_distortion", mean(d)}};
    }
    j["aggregate"] = agg;
    return j;
}

nlohmann::json entangled_report(const EntangledResult& r) {
    nlohmann::json j;
    j["config"] = {{"families", r.config.families}, {"ranks", r.config.ranks},
                   {"seeds", r.config.seeds},       {"d", r.config.d},
                   {"hidden", r.config.hidden},     {"n_train", r.config.n_train},
                   {"n_val", r.config.n_val},       {"batch", r.config.batch},
                   {"lr", r.config.lr},             {"l1", r.config.l1},
                   {"epochs", r.config.epochs},     {"unlearn_steps", r.config.unlearn_steps},
                   {"attack_lr", r.config.attack_lr}, {"attack_steps", r.config.attack_steps},
                   {"forget_weight", r.config.forget_weight}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& run : r.runs) {
        cells.push_back({{"family", run.family},
                         {"rank", run.rank},
                         {"seed", run.seed},
                         {"pre_corr_f12", run.pre_corr_f12},
                         {"pre_corr_f23", run.pre_corr_f23},
                         {"dead_frac", run.dead_frac},
                         {"pure12_frac", run.pure12_frac},
                         {"pure23_frac", run.pure23_frac},
                         {"mixed_frac", run.mixed_frac},
                         {"selectivity", run.selectivity.ratio},
                         {"selectivity_flagged", run.selectivity.flagged},
                         {"diverged", run.diverged}});
    }
    j["cells"] = cells;
    nlohmann::json agg;
    for (const auto& family : r.config.families) {
        nlohmann::json per_rank;
        for (int rank : r.config.ranks) {
            per_rank[std::to_string(rank)] = {
                {"mean_selectivity", r.family_mean_selectivity(family, rank)},
                {"mean_mixed_frac", r.family_mean_mixed_frac(family, rank)}};
        }
        agg[family] = per_rank;
    }
    j["aggregate"] = agg;
    return j;
}

nlohmann::json flow_report(const FlowXpResult& r) {
    nlohmann::json j;
    j["config"] = {{"n", r.config.n},           {"spectrum", r.config.spectrum},
                   {"eps_sweep", r.config.eps_sweep}, {"aligned", r.config.aligned},
                   {"symmetric", r.config.symmetric}, {"h", r.config.h},
                   {"unlearn_k", r.config.unlearn_k}, {"seed", r.config.seed}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& run : r.runs) {
        nlohmann::json cell = {{"eps", run.eps},
                               {"peak_cross_ratio", run.peak_cross_ratio},
                               {"final_loss", run.final_loss}};
        if (!run.unlearn_trace.c.empty()) cell["final_c"] = run.unlearn_trace.c.back();
        cells.push_back(cell);
    }
    j["cells"] = cells;
    std::vector<double> ratios;
    for (const auto& run : r.runs) ratios.push_back(run.peak_cross_ratio);
    j["aggregate"] = {{"max_peak_cross_ratio",
                       ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end())}};
    return j;
}

}  // namespace dlab::xp
