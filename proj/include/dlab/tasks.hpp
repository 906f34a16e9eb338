#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dlab/train.hpp"

namespace dlab::tasks {

bool is_prime(int p);

enum class ModOp { add, mul };

ModOp mod_op_from_name(const std::string& name);

// Full (a, b) grid over Z_p with labels (a op b) mod p and a seeded 90/10
// style split. Row order of `full` is a*p + b.
struct ModArithDataset {
    int p = 0;
    ModOp op = ModOp::add;
    train::Dataset full;
    std::vector<int> train_idx, val_idx;
    train::Dataset train_set, val_set;
};

ModArithDataset gen_mod_arith(int p, ModOp op, double split, uint64_t seed);

// Successor task on a cycle of length p; tok_b carries the function
// identifier phi = 0, stored as the reserved embedding row p.
train::Dataset gen_cycle(int p);

std::array<double, 4> hamilton_product(const std::array<double, 4>& q1,
                                       const std::array<double, 4>& q2);

// x1 = q_t (unit), x2 = omega, targets = q_t + (q_t ⊗ (0, omega)) * dt / 2
train::Dataset gen_quaternion_batch(int batch, double dt, uint64_t seed,
                                    double omega_scale = 1.0);
train::Dataset gen_quaternion_batch(int batch, double dt, Rng& rng, double omega_scale = 1.0);

// x1 = x_t, x2 = flattened traceless G, targets = x_t + G x_t dt
train::Dataset gen_sl2_batch(int batch, double dt, uint64_t seed);
train::Dataset gen_sl2_batch(int batch, double dt, Rng& rng);

// Two rank-1 interactions over a shared token embedding; phase 1 targets the
// superposition M_A + M_B, phase 2 targets M_B alone.
struct SuperpositionTasks {
    int d = 0;
    int n_tokens = 0;
    double alpha = 0.0;
    double lambda = 0.0;
    Matrix u1, u_perp, v1, v_perp;  // 1 x d orthonormal frames
    Matrix u2, v2;                  // alpha-interpolated, renormalized
    Matrix m_a, m_b;                // d x d rank-1 targets
    Matrix embed;                   // n_tokens x d, unit rows
    train::Dataset phase1, phase2;

    // (u2 . u1)(v2 . v1); the exact Task-B score target is lambda * (1 + overlap)
    double overlap() const;
};

SuperpositionTasks gen_superposition(int d, int n_tokens, double alpha, double lambda,
                                     uint64_t seed, int dataset_size);

// y = x1^T A12 x2 + x2^T A23 x3 with rank-r planted factors; per-sample
// component values are kept for correlation analyses.
struct EntangledDataset {
    int d = 0;
    int rank = 0;
    Matrix a12, a23;  // d x d, rank r
    train::Dataset train_set, val_set;
    std::vector<double> f12_train, f23_train;
    std::vector<double> f12_val, f23_val;
};

EntangledDataset gen_entangled(int d, int r, int n_train, int n_val, uint64_t seed);

// Same inputs, scalar targets replaced (phase-2 style relabelling).
train::Dataset with_targets(const train::Dataset& base, const std::vector<double>& y);

// Cross-checking export: token datasets as a,b,label; raw datasets as
// numeric x/target columns.
void export_csv(const train::Dataset& data, const std::string& path);

}  // namespace dlab::tasks
