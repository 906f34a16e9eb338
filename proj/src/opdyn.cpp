#include "dlab/opdyn.hpp"

#include <cmath>
#include <stdexcept>

#include "dlab/autodiff.hpp"

namespace dlab::opdyn {

void TransitionOperator::validate(double tol) const {
    if (t.rows != t.cols) {
        throw std::invalid_argument("TransitionOperator: square matrix required, got " +
                                    t.shape_str());
    }
    for (int a = 0; a < t.cols; ++a) {
        double col_sum = 0.0;
        for (int k = 0; k < t.rows; ++k) {
            if (t.at(k, a) < 0.0) {
                throw std::invalid_argument("TransitionOperator: negative entry at (" +
                                            std::to_string(k) + "," + std::to_string(a) + ")");
            }
            col_sum += t.at(k, a);
        }
        if (std::abs(col_sum - 1.0) > tol) {
            throw std::invalid_argument("TransitionOperator: column " + std::to_string(a) +
                                        " sums to " + std::to_string(col_sum));
        }
    }
}

TransitionOperator extract_transition(const models::ModelSpec& spec,
                                      const models::ModelParams& params, int p) {
    if (spec.head != models::Head::classifier) {
        throw std::invalid_argument("extract_transition: classifier model required");
    }
    models::Batch batch;
    batch.tok_a.resize(p);
    batch.tok_b.assign(p, spec.vocab - 1);  // phi row
    for (int a = 0; a < p; ++a) batch.tok_a[a] = a;
    const Matrix probs = ad::softmax_rows(models::forward_eval(spec, params, batch));
    TransitionOperator op;
    op.t = transpose(probs);  // row a of probs becomes column a
    return op;
}

std::vector<double> column_entropy(const Matrix& t) {
    std::vector<double> h(t.cols, 0.0);
    for (int a = 0; a < t.cols; ++a) {
        double acc = 0.0;
        for (int k = 0; k < t.rows; ++k) {
            const double v = t.at(k, a);
            if (v > 0.0) acc -= v * std::log(v);
        }
        h[a] = acc;
    }
    return h;
}

Matrix renormalize_columns(Matrix t) {
    for (int a = 0; a < t.cols; ++a) {
        double col_sum = 0.0;
        for (int k = 0; k < t.rows; ++k) col_sum += t.at(k, a);
        if (col_sum > 0.0) {
            for (int k = 0; k < t.rows; ++k) t.at(k, a) /= col_sum;
        }
    }
    return t;
}

Matrix matrix_power(const Matrix& t, long i, bool renormalize) {
    if (t.rows != t.cols) {
        throw std::invalid_argument("matrix_power: square matrix required, got " + t.shape_str());
    }
    if (i < 0) throw std::invalid_argument("matrix_power: negative exponent");
    if (i == 1) return t;
    Matrix result = Matrix::identity(t.rows);
    Matrix base = t;
    while (i > 0) {
        if (i & 1) {
            result = matmul(base, result);
            if (renormalize) result = renormalize_columns(std::move(result));
        }
        i >>= 1;
        if (i > 0) {
            base = matmul(base, base);
            if (renormalize) base = renormalize_columns(std::move(base));
        }
    }
    return result;
}

std::vector<int> argmax_columns(const Matrix& t) {
    std::vector<int> out(t.cols, 0);
    for (int a = 0; a < t.cols; ++a) {
        int best = 0;
        double best_v = t.at(0, a);
        for (int k = 1; k < t.rows; ++k) {
            if (t.at(k, a) > best_v) {
                best_v = t.at(k, a);
                best = k;
            }
        }
        out[a] = best;
    }
    return out;
}

namespace {

double accuracy_of(const Matrix& power, long i, int p) {
    const std::vector<int> pred = argmax_columns(power);
    int correct = 0;
    for (int a = 0; a < p; ++a) {
        const int truth = static_cast<int>((a + i) % p);
        if (pred[a] == truth) ++correct;
    }
    return static_cast<double>(correct) / p;
}

}  // namespace

double iterate_accuracy(const Matrix& t, long i, int p) {
    if (i < 1) throw std::invalid_argument("iterate_accuracy: i must be at least 1");
    return accuracy_of(matrix_power(t, i), i, p);
}

std::vector<double> accuracy_curve(const Matrix& t, int i_max) {
    const int p = t.cols;
    std::vector<double> curve;
    curve.reserve(i_max);
    Matrix power = t;
    for (int i = 1; i <= i_max; ++i) {
        curve.push_back(accuracy_of(power, i, p));
        if (i < i_max) power = renormalize_columns(matmul(t, power));
    }
    return curve;
}

int horizon_at_threshold(const std::vector<double>& curve, double threshold) {
    int best = 0;
    for (size_t i = 0; i < curve.size(); ++i) {
        if (curve[i] >= threshold) best = static_cast<int>(i) + 1;
    }
    return best;
}

namespace {

constexpr double kDivergenceBound = 1e3;

}  // namespace

RolloutTrace rollout_quaternion(const StepFn& step, const Matrix& q0, int steps,
                                int snapshot_stride) {
    if (q0.rows != 1 || q0.cols != 4) {
        throw std::invalid_argument("rollout_quaternion: q0 must be 1x4, got " + q0.shape_str());
    }
    RolloutTrace trace;
    trace.snapshot_stride = snapshot_stride;
    Matrix q = q0;
    for (int i = 0; i <= steps; ++i) {
        const double nrm = frobenius_norm(q);
        trace.metric.push_back(nrm);
        if (snapshot_stride > 0 && i % snapshot_stride == 0) trace.snapshots.push_back(q);
        if (nrm > kDivergenceBound) {
            trace.diverged = true;
            break;
        }
        if (i < steps) q += step(q);
    }
    return trace;
}

RolloutTrace rollout_quaternion(const models::ModelSpec& spec, const models::ModelParams& params,
                                const Matrix& q0, const Matrix& omega, int steps,
                                int snapshot_stride) {
    StepFn step = [&](const Matrix& q) {
        models::Batch b;
        b.x1 = q;
        b.x2 = omega;
        return models::forward_eval(spec, params, b);
    };
    return rollout_quaternion(step, q0, steps, snapshot_stride);
}

RolloutTrace rollout_sl2(const StepFn& step, int steps, int snapshot_stride) {
    RolloutTrace trace;
    trace.snapshot_stride = snapshot_stride;
    Matrix v1{{1.0, 0.0}};
    Matrix v2{{0.0, 1.0}};
    for (int i = 0; i <= steps; ++i) {
        const double area = v1.at(0, 0) * v2.at(0, 1) - v2.at(0, 0) * v1.at(0, 1);
        trace.metric.push_back(area);
        if (snapshot_stride > 0 && i % snapshot_stride == 0) {
            trace.snapshots.push_back(hcat(v1, v2));
        }
        if (std::max(max_abs(v1), max_abs(v2)) > kDivergenceBound) {
            trace.diverged = true;
            break;
        }
        if (i < steps) {
            const Matrix d1 = step(v1);
            const Matrix d2 = step(v2);
            v1 += d1;
            v2 += d2;
        }
    }
    return trace;
}

RolloutTrace rollout_sl2(const models::ModelSpec& spec, const models::ModelParams& params,
                         const Matrix& g, int steps, int snapshot_stride) {
    StepFn step = [&](const Matrix& x) {
        models::Batch b;
        b.x1 = x;
        b.x2 = g;
        return models::forward_eval(spec, params, b);
    };
    return rollout_sl2(step, steps, snapshot_stride);
}

}  // namespace dlab::opdyn
