#pragma once

#include <cstdint>
#include <vector>

#include "dlab/matrix.hpp"

namespace dlab::flow {

struct FlowConfig {
    int n = 8;                            // ambient dimension
    std::vector<double> spectrum = {4, 3, 2, 1};  // target singular values
    double eps = 1e-3;                    // init scale
    bool aligned_init = true;             // factor columns start on the target frames
    bool symmetric = false;               // shared frames (u_i = v_i), symmetric target
    double h = 1e-2;
    uint64_t seed = 0;
};

// Factorized operator Q = U V^T flowing toward Q* = sum_i s_i u_i v_i^T under
// the squared Frobenius loss.
struct FlowState {
    Matrix u, v;                  // n x r factors
    Matrix target_u, target_v;    // n x r orthonormal frames
    std::vector<double> s;        // target spectrum (mutated by unlearn_mode)
    double t = 0.0;
    double h = 1e-2;

    int modes() const { return static_cast<int>(s.size()); }
    Matrix q() const { return matmul_nt(u, v); }
    Matrix q_star() const;
    double loss() const;  // 0.5 * ||Q - Q*||_F^2
};

FlowState make_state(const FlowConfig& cfg);

// Gradient-flow right-hand side: dU = -(Q - Q*) V, dV = -(Q - Q*)^T U.
void flow_rhs(const FlowState& state, Matrix& du, Matrix& dv);

struct FlowTrace {
    std::vector<double> t;
    std::vector<std::vector<double>> c;     // modal coefficients u_i^T Q v_i
    std::vector<std::vector<double>> a, b;  // ||U^T u_i||, ||V^T v_i||
    std::vector<double> max_cross;          // max_{i != j} |u_i^T Q v_j|
    std::vector<double> loss;
    std::vector<double> balance_drift;      // ||U^T U - V^T V - initial||_max

    int steps() const { return static_cast<int>(t.size()); }
    double final_c(int i) const { return c.back()[i]; }
    double peak_cross_ratio() const;  // max over time of max_cross / max |c|
};

// Default horizon 50 / (smallest spectral gap).
double default_t_end(const std::vector<double>& spectrum);

// Classical RK4; a step that increases the loss by more than 1e-10 is
// retried with h halved (bounded retries). Advances the state in place.
// record_stride thins the trace (the initial and final states are always
// recorded).
FlowTrace integrate(FlowState& state, double t_end, int record_stride = 1);

// Requires a converged flow (residual below convergence_tol); zeroes mode
// k's target and resumes integration. Sequential unlearning calls see the
// still-decaying previous mode as residual, so they need a looser tolerance.
FlowTrace unlearn_mode(FlowState& state, int k, double t_end, double convergence_tol = 1e-6,
                       int record_stride = 1);

}  // namespace dlab::flow
