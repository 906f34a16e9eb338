#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dlab/tasks.hpp"
#include "dlab/train.hpp"
#include "test_util.hpp"

using namespace dlab;

namespace {

models::ModelParams single_weight(double w) {
    models::ModelParams p;
    p.mat["w"] = Matrix{{w}};
    return p;
}

std::map<std::string, Matrix> single_grad(double g) {
    return {{"w", Matrix{{g}}}};
}

}  // namespace

TEST_CASE("sgd step") {
    train::OptimizerConfig cfg;
    cfg.kind = train::OptKind::sgd;
    cfg.lr = 0.1;
    train::Optimizer opt(cfg);
    models::ModelParams p = single_weight(1.0);
    opt.step(p, single_grad(1.0));
    CHECK(p.at("w").at(0, 0) == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("adam first step moves by about lr regardless of gradient size") {
    for (double g : {1e-4, 1.0, 1e4}) {
        train::OptimizerConfig cfg;
        cfg.kind = train::OptKind::adam;
        cfg.lr = 1e-3;
        train::Optimizer opt(cfg);
        models::ModelParams p = single_weight(0.0);
        opt.step(p, single_grad(g));
        // bias-corrected first step: update = lr * g / (|g| + eps)
        CHECK(std::abs(p.at("w").at(0, 0) + cfg.lr) / cfg.lr < 1e-3);
    }
}

TEST_CASE("adamw decoupled decay with zero gradient") {
    train::OptimizerConfig cfg;
    cfg.kind = train::OptKind::adamw;
    cfg.lr = 1e-3;
    cfg.weight_decay = 0.1;
    train::Optimizer opt(cfg);
    models::ModelParams p = single_weight(1.0);
    opt.step(p, single_grad(0.0));
    CHECK(p.at("w").at(0, 0) == doctest::Approx(0.9999).epsilon(1e-12));
}

TEST_CASE("optimizer rejects non-finite gradients naming the parameter") {
    train::OptimizerConfig cfg;
    cfg.kind = train::OptKind::sgd;
    train::Optimizer opt(cfg);
    models::ModelParams p = single_weight(1.0);
    CHECK_THROWS_WITH_AS(opt.step(p, single_grad(NAN)), doctest::Contains("'w'"),
                         train::nan_gradient_error);
}

TEST_CASE("optimizer preserves shapes") {
    train::OptimizerConfig cfg;
    cfg.kind = train::OptKind::adamw;
    train::Optimizer opt(cfg);
    models::ModelParams p;
    p.mat["a"] = Matrix(3, 4);
    p.mat["b"] = Matrix(1, 7);
    std::map<std::string, Matrix> g = {{"a", Matrix(3, 4)}, {"b", Matrix(1, 7)}};
    opt.step(p, g);
    CHECK(p.at("a").rows == 3);
    CHECK(p.at("a").cols == 4);
    CHECK(p.at("b").cols == 7);
}

models::ModelSpec tiny_mod_spec() {
    models::ModelSpec s;
    s.family = models::Family::bilinear;
    s.input_mode = models::InputMode::pair_embed;
    s.vocab = 7;
    s.embed_dim = 4;
    s.hidden = 6;
    s.output = 7;
    s.head = models::Head::classifier;
    return s;
}

TEST_CASE("zero epochs leave parameters untouched") {
    const tasks::ModArithDataset data = tasks::gen_mod_arith(7, tasks::ModOp::add, 0.9, 0);
    const models::ModelSpec spec = tiny_mod_spec();
    models::ModelParams p = models::init(spec, 4);
    const models::ModelParams before = p;
    train::TrainConfig tc;
    tc.batch_size = 16;
    tc.epochs = 0;
    train::OptimizerConfig oc;
    const train::RunReport rep = train::train(spec, p, data.train_set, data.val_set, tc, oc);
    CHECK(rep.epochs_run == 0);
    for (const auto& [name, m] : before.mat) CHECK(p.at(name).data == m.data);
}

TEST_CASE("same seed reproduces the loss curve exactly") {
    const tasks::ModArithDataset data = tasks::gen_mod_arith(7, tasks::ModOp::add, 0.9, 1);
    const models::ModelSpec spec = tiny_mod_spec();
    train::TrainConfig tc;
    tc.batch_size = 16;
    tc.epochs = 5;
    tc.seed = 99;
    train::OptimizerConfig oc;
    oc.kind = train::OptKind::adamw;
    oc.lr = 1e-3;
    oc.weight_decay = 0.1;

    models::ModelParams p1 = models::init(spec, 8);
    models::ModelParams p2 = models::init(spec, 8);
    const train::RunReport r1 = train::train(spec, p1, data.train_set, data.val_set, tc, oc);
    const train::RunReport r2 = train::train(spec, p2, data.train_set, data.val_set, tc, oc);
    CHECK(r1.train_loss == r2.train_loss);
    CHECK(r1.val_metric == r2.val_metric);
    for (const auto& [name, m] : p1.mat) CHECK(p2.at(name).data == m.data);
}

TEST_CASE("lr zero keeps every probe series constant") {
    const tasks::ModArithDataset data = tasks::gen_mod_arith(7, tasks::ModOp::add, 0.9, 2);
    const models::ModelSpec spec = tiny_mod_spec();
    models::ModelParams p = models::init(spec, 15);
    train::TrainConfig tc;
    tc.batch_size = 16;
    tc.epochs = 4;
    train::OptimizerConfig oc;
    oc.kind = train::OptKind::sgd;
    oc.lr = 0.0;
    std::vector<train::NamedProbe> probes = {
        {"w1_norm",
         [](const models::ModelParams& q) { return frobenius_norm(q.at("w1")); }}};
    const train::RunReport rep =
        train::train(spec, p, data.train_set, data.val_set, tc, oc, probes);
    const auto& series = rep.probes.at("w1_norm");
    CHECK(series.size() == 4);
    for (double v : series) CHECK(v == series.front());
}

TEST_CASE("loss decreases over the first 10 steps for every family") {
    const tasks::ModArithDataset data = tasks::gen_mod_arith(7, tasks::ModOp::add, 1.0, 3);
    for (const char* family :
         {"bilinear", "swiglu", "geglu", "relu", "tanh", "sigmoid"}) {
        for (uint64_t seed : {0ULL, 1ULL, 2ULL}) {
            models::ModelSpec spec = tiny_mod_spec();
            spec.family = models::family_from_name(family);
            if (spec.family != models::Family::bilinear) {
                spec.input_mode = models::InputMode::concat_embed;
            }
            models::ModelParams p = models::init(spec, seed);
            train::TrainConfig tc;
            tc.batch_size = data.train_set.size();  // one batch per epoch
            tc.epochs = 10;
            tc.seed = seed;
            train::OptimizerConfig oc;
            oc.kind = train::OptKind::adamw;
            oc.lr = 1e-3;
            oc.weight_decay = 0.1;
            const train::RunReport rep =
                train::train(spec, p, data.train_set, data.train_set, tc, oc);
            REQUIRE(rep.train_loss.size() == 10);
            CHECK(rep.train_loss.back() < rep.train_loss.front());
        }
    }
}

TEST_CASE("divergent loss marks the run failed without throwing") {
    const tasks::ModArithDataset data = tasks::gen_mod_arith(7, tasks::ModOp::add, 0.9, 5);
    const models::ModelSpec spec = tiny_mod_spec();
    models::ModelParams p = models::init(spec, 4);
    for (double& v : p.at("w1").data) v = 1e308;  // forces inf activations
    train::TrainConfig tc;
    tc.batch_size = 16;
    tc.epochs = 3;
    train::OptimizerConfig oc;
    const train::RunReport rep = train::train(spec, p, data.train_set, data.val_set, tc, oc);
    CHECK(rep.diverged);
    CHECK_FALSE(rep.note.empty());
}

TEST_CASE("two-phase training") {
    const tasks::SuperpositionTasks task = tasks::gen_superposition(8, 20, 0.0, 4.0, 6, 64);
    models::ModelSpec spec;
    spec.family = models::Family::bilinear;
    spec.input_mode = models::InputMode::raw_split;
    spec.in1 = 8;
    spec.in2 = 8;
    spec.hidden = 6;
    spec.output = 1;
    spec.head = models::Head::scalar;

    train::Phase p1, p2;
    p1.data = &task.phase1;
    p1.cfg.batch_size = 16;
    p1.cfg.epochs = 3;
    p1.cfg.loss = train::LossKind::mse;
    p1.opt.kind = train::OptKind::adam;
    p2 = p1;
    p2.data = &task.phase2;
    p2.cfg.epochs = 2;

    std::vector<train::NamedProbe> probes = {
        {"w1", [](const models::ModelParams& q) { return frobenius_norm(q.at("w1")); }}};

    SUBCASE("probe series spans both phases with the boundary recorded") {
        models::ModelParams params = models::init(spec, 7);
        const train::RunReport rep = train::two_phase_train(spec, params, p1, p2, probes);
        CHECK(rep.phase_boundary == 3);
        CHECK(rep.epochs_run == 5);
        CHECK(rep.probes.at("w1").size() == 5);
    }

    SUBCASE("an empty phase 2 reduces to plain training") {
        models::ModelParams a = models::init(spec, 7);
        models::ModelParams b = models::init(spec, 7);
        train::Phase empty = p2;
        empty.cfg.epochs = 0;
        const train::RunReport two = train::two_phase_train(spec, a, p1, empty, probes);
        const train::RunReport one =
            train::train(spec, b, *p1.data, *p1.data, p1.cfg, p1.opt, probes);
        CHECK(two.train_loss == one.train_loss);
        for (const auto& [name, m] : b.mat) CHECK(a.at(name).data == m.data);
    }
}

TEST_CASE("streamed training runs one step per sampled batch") {
    models::ModelSpec spec;
    spec.family = models::Family::bilinear;
    spec.input_mode = models::InputMode::raw_split;
    spec.in1 = 4;
    spec.in2 = 3;
    spec.hidden = 8;
    spec.output = 4;
    spec.head = models::Head::regression;
    models::ModelParams p = models::init(spec, 3);
    train::TrainConfig tc;
    tc.batch_size = 32;
    tc.loss = train::LossKind::mse;
    tc.seed = 11;
    train::OptimizerConfig oc;
    oc.kind = train::OptKind::adam;
    const train::BatchSampler sampler = [](Rng& rng) {
        return tasks::gen_quaternion_batch(32, 0.1, rng).full();
    };
    const train::RunReport rep = train::train_stream(spec, p, sampler, 25, tc, oc);
    CHECK(rep.epochs_run == 25);
    CHECK(rep.train_loss.size() == 25);
    CHECK(rep.train_loss.back() < rep.train_loss.front());
}
