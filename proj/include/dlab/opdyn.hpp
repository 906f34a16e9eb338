#pragma once

#include <functional>
#include <vector>

#include "dlab/models.hpp"

namespace dlab::opdyn {

// Column-stochastic map extracted from a classifier: t[k, a] = P(k | a, phi).
struct TransitionOperator {
    Matrix t;
    void validate(double tol = 1e-10) const;
};

TransitionOperator extract_transition(const models::ModelSpec& spec,
                                      const models::ModelParams& params, int p);

// Shannon entropy of each column, in nats.
std::vector<double> column_entropy(const Matrix& t);

Matrix renormalize_columns(Matrix t);

// Power by repeated squaring. Columns are renormalized to sum 1 after every
// multiply when `renormalize` is set; argmax predictions are invariant to
// positive column scaling, so this only guards against float drift.
Matrix matrix_power(const Matrix& t, long i, bool renormalize = true);

// argmax per column; ties broken by the smallest index
std::vector<int> argmax_columns(const Matrix& t);

// fraction of states a with argmax_k T^i[k,a] == (a+i) mod p
double iterate_accuracy(const Matrix& t, long i, int p);

// Accuracy(i) for i = 1..i_max, advancing one multiply (plus column
// renormalization) per step.
std::vector<double> accuracy_curve(const Matrix& t, int i_max);

// Largest i with curve[i-1] >= threshold; 0 when none qualify.
int horizon_at_threshold(const std::vector<double>& curve, double threshold);

struct RolloutTrace {
    std::vector<double> metric;     // per-step tracked scalar, index 0 = initial state
    std::vector<Matrix> snapshots;  // recorded every `snapshot_stride` steps when > 0
    int snapshot_stride = 0;
    bool diverged = false;

    int length() const { return static_cast<int>(metric.size()); }
};

// state -> predicted increment
using StepFn = std::function<Matrix(const Matrix& state)>;

// Recursive q <- q + step(q); tracks ||q|| with no renormalization. Norms
// beyond 1e3 abort the trace as diverged.
RolloutTrace rollout_quaternion(const StepFn& step, const Matrix& q0, int steps,
                                int snapshot_stride = 0);
RolloutTrace rollout_quaternion(const models::ModelSpec& spec, const models::ModelParams& params,
                                const Matrix& q0, const Matrix& omega, int steps,
                                int snapshot_stride = 0);

// Advances the unit-square edges v1, v2 and tracks the spanned area.
RolloutTrace rollout_sl2(const StepFn& step, int steps, int snapshot_stride = 0);
RolloutTrace rollout_sl2(const models::ModelSpec& spec, const models::ModelParams& params,
                         const Matrix& g, int steps, int snapshot_stride = 0);

}  // namespace dlab::opdyn
