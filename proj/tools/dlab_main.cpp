// Command-line entry point: one subcommand per experiment, with reference
// defaults, JSON config files, and flag overrides (flag > file > default).

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "dlab/experiments.hpp"
#include "dlab/io.hpp"

namespace {

using dlab::xp::RunContext;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string config_path;
    std::string out_root;
    std::string name;
    int jobs = 2;
    bool dry_run = false;
};

void add_common(CLI::App* sub, CommonOpts& common) {
    sub->add_option("--config", common.config_path, "JSON config file");
    sub->add_option("--out", common.out_root, "output root (default $DISENTANGLE_OUT or ./runs)");
    sub->add_option("--name", common.name, "run directory name (default: timestamp)");
    sub->add_option("--jobs", common.jobs, "worker threads for independent cells");
    sub->add_flag("--dry-run", common.dry_run, "print the resolved config and exit");
}

std::string out_dir_for(const std::string& experiment, const CommonOpts& common) {
    std::string root = common.out_root;
    if (root.empty()) {
        const char* env = std::getenv("DISENTANGLE_OUT");
        root = env ? env : "runs";
    }
    std::string name = common.name;
    if (name.empty()) {
        char buf[32];
        const std::time_t now = std::time(nullptr);
        std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&now));
        name = buf;
    }
    const std::string dir = root + "/" + experiment + "/" + name;
    dlab::io::ensure_dir(dir);
    return dir;
}

nlohmann::json load_config_json(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    return j;
}

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed) {
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError("unknown config key '" + item.key() + "'");
        }
    }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

// subcommand scaffolding: flags are recorded as deferred overrides so the
// precedence is flag > config file > default
struct Overrides {
    std::vector<std::function<void()>> fns;
    void apply() {
        for (auto& f : fns) f();
    }
};

template <typename T>
void add_override(CLI::App* sub, Overrides& ov, const std::string& flag, T* target,
                  const std::string& help) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = sub->add_option(flag, *holder, help);
    ov.fns.push_back([opt, holder, target] {
        if (opt->count() > 0) *target = *holder;
    });
}

int finish_run(bool any_diverged) {
    if (any_diverged) {
        std::cerr << "warning: at least one cell diverged; partial report flagged\n";
        return 1;
    }
    return 0;
}

// ---- per-experiment wiring -------------------------------------------------

struct ModArithCmd {
    dlab::xp::ModArithConfig cfg;
    CommonOpts common;
    Overrides ov;
    std::string experiment;

    void configure(CLI::App* sub) {
        add_common(sub, common);
        add_override(sub, ov, "--p", &cfg.p, "prime modulus");
        add_override(sub, ov, "--families", &cfg.families, "model families");
        sub->get_option("--families")->delimiter(',');
        add_override(sub, ov, "--seeds", &cfg.seeds, "seed list");
        sub->get_option("--seeds")->delimiter(',');
        add_override(sub, ov, "--embed-dim", &cfg.embed_dim, "embedding dimension");
        add_override(sub, ov, "--hidden", &cfg.hidden, "hidden dimension");
        add_override(sub, ov, "--split", &cfg.split, "train fraction");
        add_override(sub, ov, "--batch", &cfg.batch, "batch size");
        add_override(sub, ov, "--epochs", &cfg.epochs, "max epochs");
        add_override(sub, ov, "--lr", &cfg.lr, "learning rate");
        add_override(sub, ov, "--weight-decay", &cfg.weight_decay, "AdamW weight decay");
        add_override(sub, ov, "--early-stop", &cfg.early_stop, "validation accuracy threshold");
        sub->add_flag("--dump-data", cfg.dump_data, "export the dataset grid as CSV");
    }

    void apply_config() {
        const nlohmann::json j = load_config_json(common.config_path);
        reject_unknown_keys(j, {"p", "families", "seeds", "embed_dim", "hidden", "split",
                                "batch", "epochs", "lr", "weight_decay", "early_stop"});
        take(j, "p", cfg.p);
        take(j, "families", cfg.families);
        take(j, "seeds", cfg.seeds);
        take(j, "embed_dim", cfg.embed_dim);
        take(j, "hidden", cfg.hidden);
        take(j, "split", cfg.split);
        take(j, "batch", cfg.batch);
        take(j, "epochs", cfg.epochs);
        take(j, "lr", cfg.lr);
        take(j, "weight_decay", cfg.weight_decay);
        take(j, "early_stop", cfg.early_stop);
        ov.apply();
    }

    int run() {
        apply_config();
        if (common.dry_run) {
            dlab::xp::ModArithResult preview;
            preview.config = cfg;
            std::cout << dlab::xp::mod_arith_report(preview).at("config").dump(2) << "\n";
            return 0;
        }
        const std::string base = out_dir_for(experiment, common);
        bool diverged = false;
        if (experiment == "replicate-113") {
            // both operations, same settings, modulus 113
            for (const auto op : {dlab::tasks::ModOp::add, dlab::tasks::ModOp::mul}) {
                dlab::xp::ModArithConfig sub_cfg = cfg;
                sub_cfg.op = op;
                const std::string dir =
                    base + (op == dlab::tasks::ModOp::add ? "/add" : "/mul");
                dlab::io::ensure_dir(dir);
                RunContext ctx{dir, common.jobs};
                const auto result = dlab::xp::run_mod_arith(sub_cfg, ctx);
                for (const auto& r : result.runs) diverged = diverged || r.diverged;
            }
        } else {
            RunContext ctx{base, common.jobs};
            const auto result = dlab::xp::run_mod_arith(cfg, ctx);
            for (const auto& r : result.runs) diverged = diverged || r.diverged;
        }
        std::cout << "wrote " << base << "\n";
        return finish_run(diverged);
    }
};

struct CycleCmd {
    dlab::xp::CycleConfig cfg;
    CommonOpts common;
    Overrides ov;

    void configure(CLI::App* sub) {
        add_common(sub, common);
        add_override(sub, ov, "--p", &cfg.p, "cycle length");
        add_override(sub, ov, "--families", &cfg.families, "model families");
        sub->get_option("--families")->delimiter(',');
        add_override(sub, ov, "--seeds", &cfg.seeds, "seed list");
        sub->get_option("--seeds")->delimiter(',');
        add_override(sub, ov, "--embed-dim", &cfg.embed_dim, "embedding dimension");
        add_override(sub, ov, "--hidden", &cfg.hidden, "hidden dimension");
        add_override(sub, ov, "--epochs", &cfg.epochs, "training epochs");
        add_override(sub, ov, "--batch", &cfg.batch, "batch size");
        add_override(sub, ov, "--lr", &cfg.lr, "learning rate");
        add_override(sub, ov, "--i-max", &cfg.i_max, "largest composition depth");
        add_override(sub, ov, "--threshold", &cfg.horizon_threshold, "horizon accuracy bar");
        sub->add_flag("--dump-data", cfg.dump_data, "export the dataset as CSV");
    }

    void apply_config() {
        const nlohmann::json j = load_config_json(common.config_path);
        reject_unknown_keys(j, {"p", "families", "seeds", "embed_dim", "hidden", "epochs",
                                "batch", "lr", "i_max", "horizon_threshold"});
        take(j, "p", cfg.p);
        take(j, "families", cfg.families);
        take(j, "seeds", cfg.seeds);
        take(j, "embed_dim", cfg.embed_dim);
        take(j, "hidden", cfg.hidden);
        take(j, "epochs", cfg.epochs);
        take(j, "batch", cfg.batch);
        take(j, "lr", cfg.lr);
        take(j, "i_max", cfg.i_max);
        take(j, "horizon_threshold", cfg.horizon_threshold);
        ov.apply();
    }

    int run() {
        apply_config();
        if (common.dry_run) {
            dlab::xp::CycleResult preview;
            preview.config = cfg;
            std::cout << dlab::xp::cycle_report(preview).at("config").dump(2) << "\n";
            return 0;
        }
        RunContext ctx{out_dir_for("cycle", common), common.jobs};
        const auto result = dlab::xp::run_cycle(cfg, ctx);
        std::cout << "wrote " << ctx.out_dir << "\n";
        bool diverged = false;
        for (const auto& r : result.runs) diverged = diverged || r.diverged;
        return finish_run(diverged);
    }
};

struct LieCmd {
    dlab::xp::LieConfig cfg;
    CommonOpts common;
    Overrides ov;

    void configure(CLI::App* sub, dlab::xp::LieTask task) {
        cfg.task = task;
        cfg.hidden = task == dlab::xp::LieTask::quaternion ? 128 : 64;
        add_common(sub, common);
        add_override(sub, ov, "--families", &cfg.families, "model families");
        sub->get_option("--families")->delimiter(',');
        add_override(sub, ov, "--seeds", &cfg.seeds, "seed list");
        sub->get_option("--seeds")->delimiter(',');
        add_override(sub, ov, "--hidden", &cfg.hidden, "hidden dimension");
        add_override(sub, ov, "--batch", &cfg.batch, "batch size");
        add_override(sub, ov, "--iterations", &cfg.iterations, "training iterations");
        add_override(sub, ov, "--lr", &cfg.lr, "learning rate");
        add_override(sub, ov, "--dt", &cfg.dt, "integration time step");
        add_override(sub, ov, "--rollout-steps", &cfg.rollout_steps, "rollout horizon");
        add_override(sub, ov, "--omega-norm", &cfg.omega_norm, "rollout angular velocity norm");
        add_override(sub, ov, "--g-scale", &cfg.g_scale, "rollout generator scale");
    }

    void apply_config() {
        const nlohmann::json j = load_config_json(common.config_path);
        reject_unknown_keys(j, {"families", "seeds", "hidden", "batch", "iterations", "lr",
                                "dt", "rollout_steps", "omega_norm", "g_scale"});
        take(j, "families", cfg.families);
        take(j, "seeds", cfg.seeds);
        take(j, "hidden", cfg.hidden);
        take(j, "batch", cfg.batch);
        take(j, "iterations", cfg.iterations);
        take(j, "lr", cfg.lr);
        take(j, "dt", cfg.dt);
        take(j, "rollout_steps", cfg.rollout_steps);
        take(j, "omega_norm", cfg.omega_norm);
        take(j, "g_scale", cfg.g_scale);
        ov.apply();
    }

    int run() {
        apply_config();
        const std::string name = cfg.task == dlab::xp::LieTask::quaternion ? "quat" : "sl2";
        if (common.dry_run) {
            dlab::xp::LieResult preview;
            preview.config = cfg;
            std::cout << dlab::xp::lie_report(preview).at("config").dump(2) << "\n";
            return 0;
        }
        RunContext ctx{out_dir_for(name, common), common.jobs};
        const auto result = dlab::xp::run_lie(cfg, ctx);
        std::cout << "wrote " << ctx.out_dir << "\n";
        bool diverged = false;
        for (const auto& r : result.runs) diverged = diverged || r.diverged;
        return finish_run(diverged);
    }
};

struct OrthoCmd {
    dlab::xp::OrthoConfig cfg;
    CommonOpts common;
    Overrides ov;

    void configure(CLI::App* sub) {
        add_common(sub, common);
        add_override(sub, ov, "--families", &cfg.families, "model families");
        sub->get_option("--families")->delimiter(',');
        add_override(sub, ov, "--seeds", &cfg.seeds, "seed list");
        sub->get_option("--seeds")->delimiter(',');
        add_override(sub, ov, "--alphas", &cfg.alphas, "mixing grid");
        sub->get_option("--alphas")->delimiter(',');
        add_override(sub, ov, "--d", &cfg.d, "embedding dimension");
        add_override(sub, ov, "--hidden", &cfg.hidden, "hidden dimension");
        add_override(sub, ov, "--tokens", &cfg.n_tokens, "token count");
        add_override(sub, ov, "--dataset-size", &cfg.dataset_size, "sampled pairs");
        add_override(sub, ov, "--batch", &cfg.batch, "batch size");
        add_override(sub, ov, "--lambda", &cfg.lambda, "target scale factor");
        add_override(sub, ov, "--phase1-lr", &cfg.phase1_lr, "phase 1 Adam lr");
        add_override(sub, ov, "--phase2-lr", &cfg.phase2_lr, "phase 2 SGD lr");
    }

    void apply_config() {
        const nlohmann::json j = load_config_json(common.config_path);
        reject_unknown_keys(
            j, {"families", "seeds", "alphas", "d", "hidden", "n_tokens", "dataset_size",
                "batch", "lambda", "phase1_lr", "phase2_lr", "phase1_epochs_bilinear",
                "phase1_epochs_other", "phase2_epochs_bilinear", "phase2_epochs_other"});
        take(j, "families", cfg.families);
        take(j, "seeds", cfg.seeds);
        take(j, "alphas", cfg.alphas);
        take(j, "d", cfg.d);
        take(j, "hidden", cfg.hidden);
        take(j, "n_tokens", cfg.n_tokens);
        take(j, "dataset_size", cfg.dataset_size);
        take(j, "batch", cfg.batch);
        take(j, "lambda", cfg.lambda);
        take(j, "phase1_lr", cfg.phase1_lr);
        take(j, "phase2_lr", cfg.phase2_lr);
        take(j, "phase1_epochs_bilinear", cfg.phase1_epochs_bilinear);
        take(j, "phase1_epochs_other", cfg.phase1_epochs_other);
        take(j, "phase2_epochs_bilinear", cfg.phase2_epochs_bilinear);
        take(j, "phase2_epochs_other", cfg.phase2_epochs_other);
        ov.apply();
    }

    int run() {
        apply_config();
        if (common.dry_run) {
            dlab::xp::OrthoResult preview;
            preview.config = cfg;
            std::cout << dlab::xp::ortho_report(preview).at("config").dump(2) << "\n";
            return 0;
        }
        RunContext ctx{out_dir_for("ortho-unlearn", common), common.jobs};
        const auto result = dlab::xp::run_ortho(cfg, ctx);
        std::cout << "wrote " << ctx.out_dir << "\n";
        bool diverged = false;
        for (const auto& r : result.runs) diverged = diverged || r.diverged;
        return finish_run(diverged);
    }
};

struct EntangledCmd {
    dlab::xp::EntangledConfig cfg;
    CommonOpts common;
    Overrides ov;

    void configure(CLI::App* sub) {
        add_common(sub, common);
        add_override(sub, ov, "--families", &cfg.families, "model families");
        sub->get_option("--families")->delimiter(',');
        add_override(sub, ov, "--seeds", &cfg.seeds, "seed list");
        sub->get_option("--seeds")->delimiter(',');
        add_override(sub, ov, "--ranks", &cfg.ranks, "interaction ranks");
        sub->get_option("--ranks")->delimiter(',');
        add_override(sub, ov, "--d", &cfg.d, "subspace dimension");
        add_override(sub, ov, "--hidden", &cfg.hidden, "hidden dimension");
        add_override(sub, ov, "--train-size", &cfg.n_train, "training samples");
        add_override(sub, ov, "--val-size", &cfg.n_val, "validation samples");
        add_override(sub, ov, "--batch", &cfg.batch, "batch size");
        add_override(sub, ov, "--lr", &cfg.lr, "pretraining learning rate");
        add_override(sub, ov, "--l1", &cfg.l1, "sparsity penalty");
        add_override(sub, ov, "--epochs", &cfg.epochs, "pretraining epochs");
        add_override(sub, ov, "--unlearn-steps", &cfg.unlearn_steps, "fine-tune steps");
        add_override(sub, ov, "--attack-lr", &cfg.attack_lr, "attack SGD lr");
        add_override(sub, ov, "--attack-steps", &cfg.attack_steps, "attack steps");
        add_override(sub, ov, "--forget-weight", &cfg.forget_weight, "forget loss weight");
    }

    void apply_config() {
        const nlohmann::json j = load_config_json(common.config_path);
        reject_unknown_keys(j, {"families", "seeds", "ranks", "d", "hidden", "n_train",
                                "n_val", "batch", "lr", "l1", "epochs", "unlearn_steps",
                                "attack_lr", "attack_steps", "forget_weight"});
        take(j, "families", cfg.families);
        take(j, "seeds", cfg.seeds);
        take(j, "ranks", cfg.ranks);
        take(j, "d", cfg.d);
        take(j, "hidden", cfg.hidden);
        take(j, "n_train", cfg.n_train);
        take(j, "n_val", cfg.n_val);
        take(j, "batch", cfg.batch);
        take(j, "lr", cfg.lr);
        take(j, "l1", cfg.l1);
        take(j, "epochs", cfg.epochs);
        take(j, "unlearn_steps", cfg.unlearn_steps);
        take(j, "attack_lr", cfg.attack_lr);
        take(j, "attack_steps", cfg.attack_steps);
        take(j, "forget_weight", cfg.forget_weight);
        ov.apply();
    }

    int run() {
        apply_config();
        if (common.dry_run) {
            dlab::xp::EntangledResult preview;
            preview.config = cfg;
            std::cout << dlab::xp::entangled_report(preview).at("config").dump(2) << "\n";
            return 0;
        }
        RunContext ctx{out_dir_for("entangled", common), common.jobs};
        const auto result = dlab::xp::run_entangled(cfg, ctx);
        std::cout << "wrote " << ctx.out_dir << "\n";
        bool diverged = false;
        for (const auto& r : result.runs) diverged = diverged || r.diverged;
        return finish_run(diverged);
    }
};

struct FlowCmd {
    dlab::xp::FlowXpConfig cfg;
    CommonOpts common;
    Overrides ov;
    bool random_init = false;

    void configure(CLI::App* sub) {
        add_common(sub, common);
        add_override(sub, ov, "--n", &cfg.n, "ambient dimension");
        add_override(sub, ov, "--spectrum", &cfg.spectrum, "target singular values");
        sub->get_option("--spectrum")->delimiter(',');
        add_override(sub, ov, "--eps", &cfg.eps_sweep, "initialization scales");
        sub->get_option("--eps")->delimiter(',');
        add_override(sub, ov, "--step", &cfg.h, "RK4 step");
        add_override(sub, ov, "--unlearn-k", &cfg.unlearn_k, "mode to unlearn (-1 skips)");
        add_override(sub, ov, "--seed", &cfg.seed, "frame seed");
        sub->add_flag("--random-init", random_init, "random instead of aligned init");
        sub->add_flag("--symmetric", cfg.symmetric, "symmetric operator variant");
    }

    void apply_config() {
        const nlohmann::json j = load_config_json(common.config_path);
        reject_unknown_keys(j, {"n", "spectrum", "eps_sweep", "aligned", "symmetric", "h",
                                "unlearn_k", "seed"});
        take(j, "n", cfg.n);
        take(j, "spectrum", cfg.spectrum);
        take(j, "eps_sweep", cfg.eps_sweep);
        take(j, "aligned", cfg.aligned);
        take(j, "symmetric", cfg.symmetric);
        take(j, "h", cfg.h);
        take(j, "unlearn_k", cfg.unlearn_k);
        take(j, "seed", cfg.seed);
        ov.apply();
        if (random_init) cfg.aligned = false;
    }

    int run() {
        apply_config();
        if (common.dry_run) {
            dlab::xp::FlowXpResult preview;
            preview.config = cfg;
            std::cout << dlab::xp::flow_report(preview).at("config").dump(2) << "\n";
            return 0;
        }
        RunContext ctx{out_dir_for("flow", common), common.jobs};
        dlab::xp::run_flow(cfg, ctx);
        std::cout << "wrote " << ctx.out_dir << "\n";
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for multiplicative-architecture experiments"};
    app.require_subcommand(1);

    ModArithCmd mod_add, mod_mul, replicate;
    mod_add.experiment = "mod-add";
    mod_mul.experiment = "mod-mul";
    mod_mul.cfg.op = dlab::tasks::ModOp::mul;
    replicate.experiment = "replicate-113";
    replicate.cfg.p = 113;

    CycleCmd cycle;
    LieCmd quat, sl2;
    OrthoCmd ortho;
    EntangledCmd entangled;
    FlowCmd flow;

    mod_add.configure(app.add_subcommand("mod-add", "modular addition: train + Fourier entropy"));
    mod_mul.configure(
        app.add_subcommand("mod-mul", "modular multiplication: train + SVD spectra"));
    replicate.configure(app.add_subcommand(
        "replicate-113", "repeat the modular arithmetic runs on Z_113 (add and mul)"));
    cycle.configure(app.add_subcommand("cycle", "successor extrapolation via operator powers"));
    quat.configure(app.add_subcommand("quat", "rigid-body rollouts on unit quaternions"),
                   dlab::xp::LieTask::quaternion);
    sl2.configure(app.add_subcommand("sl2", "volume-preserving rollouts under sl(2) flows"),
                  dlab::xp::LieTask::sl2);
    ortho.configure(
        app.add_subcommand("ortho-unlearn", "alpha-mixed superposition unlearning sweep"));
    entangled.configure(
        app.add_subcommand("entangled", "rank-r entangled superposition surgery"));
    flow.configure(app.add_subcommand("flow", "factorized gradient-flow validator"));

    std::string plot_csv_path, plot_kind = "line", plot_out;
    CLI::App* plot = app.add_subcommand("plot", "render a recognized CSV to SVG");
    plot->add_option("csv", plot_csv_path, "input CSV")->required();
    plot->add_option("--kind", plot_kind, "line | hist");
    plot->add_option("--svg", plot_out, "output path (default: CSV path with .svg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("mod-add")) return mod_add.run();
        if (app.got_subcommand("mod-mul")) return mod_mul.run();
        if (app.got_subcommand("replicate-113")) return replicate.run();
        if (app.got_subcommand("cycle")) return cycle.run();
        if (app.got_subcommand("quat")) return quat.run();
        if (app.got_subcommand("sl2")) return sl2.run();
        if (app.got_subcommand("ortho-unlearn")) return ortho.run();
        if (app.got_subcommand("entangled")) return entangled.run();
        if (app.got_subcommand("flow")) return flow.run();
        if (app.got_subcommand("plot")) {
            if (plot_out.empty()) {
                const size_t dot = plot_csv_path.find_last_of('.');
                plot_out = plot_csv_path.substr(0, dot) + ".svg";
            }
            dlab::io::plot_csv(plot_csv_path, plot_kind, plot_out);
            std::cout << "wrote " << plot_out << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
