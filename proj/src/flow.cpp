#include "dlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dlab/rng.hpp"

namespace dlab::flow {

namespace {

// Gram-Schmidt orthonormalization of the columns of a random Gaussian draw.
Matrix random_frame(Rng& rng, int n, int r) {
    Matrix f = rng.normal_matrix(n, r);
    for (int j = 0; j < r; ++j) {
        for (int prev = 0; prev < j; ++prev) {
            double proj = 0.0;
            for (int i = 0; i < n; ++i) proj += f.at(i, j) * f.at(i, prev);
            for (int i = 0; i < n; ++i) f.at(i, j) -= proj * f.at(i, prev);
        }
        double nrm = 0.0;
        for (int i = 0; i < n; ++i) nrm += f.at(i, j) * f.at(i, j);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-10) throw std::runtime_error("random_frame: degenerate draw");
        for (int i = 0; i < n; ++i) f.at(i, j) /= nrm;
    }
    return f;
}

}  // namespace

Matrix FlowState::q_star() const {
    Matrix out(u.rows, u.rows);
    for (int m = 0; m < modes(); ++m) {
        for (int i = 0; i < u.rows; ++i) {
            for (int j = 0; j < u.rows; ++j) {
                out.at(i, j) += s[m] * target_u.at(i, m) * target_v.at(j, m);
            }
        }
    }
    return out;
}

double FlowState::loss() const {
    const Matrix r = q() - q_star();
    const double f = frobenius_norm(r);
    return 0.5 * f * f;
}

FlowState make_state(const FlowConfig& cfg) {
    const int r = static_cast<int>(cfg.spectrum.size());
    if (cfg.n < r) throw std::invalid_argument("make_state: n must be at least the mode count");
    Rng rng(cfg.seed);
    FlowState st;
    st.s = cfg.spectrum;
    st.h = cfg.h;
    st.target_u = random_frame(rng, cfg.n, r);
    st.target_v = cfg.symmetric ? st.target_u : random_frame(rng, cfg.n, r);
    if (cfg.aligned_init) {
        st.u = st.target_u;
        st.u *= cfg.eps;
        st.v = st.target_v;
        st.v *= cfg.eps;
    } else {
        st.u = rng.normal_matrix(cfg.n, r, cfg.eps / std::sqrt(cfg.n));
        st.v = rng.normal_matrix(cfg.n, r, cfg.eps / std::sqrt(cfg.n));
    }
    return st;
}

void flow_rhs(const FlowState& state, Matrix& du, Matrix& dv) {
    const Matrix residual = state.q() - state.q_star();
    du = -1.0 * matmul(residual, state.v);
    dv = -1.0 * matmul_tn(residual, state.u);
}

double default_t_end(const std::vector<double>& spectrum) {
    std::vector<double> vals;
    for (double s : spectrum) {
        if (s > 0.0) vals.push_back(s);
    }
    std::sort(vals.begin(), vals.end());
    double min_gap = vals.empty() ? 1.0 : vals.front();
    for (size_t i = 1; i < vals.size(); ++i) {
        const double gap = vals[i] - vals[i - 1];
        if (gap > 1e-9) min_gap = std::min(min_gap, gap);
    }
    if (min_gap <= 1e-9) min_gap = 1.0;
    return 50.0 / min_gap;
}

double FlowTrace::peak_cross_ratio() const {
    double peak = 0.0;
    for (int step = 0; step < steps(); ++step) {
        double cmax = 0.0;
        for (double ci : c[step]) cmax = std::max(cmax, std::abs(ci));
        if (cmax > 0.0) peak = std::max(peak, max_cross[step] / cmax);
    }
    return peak;
}

namespace {

void record(const FlowState& st, const Matrix& balance0, FlowTrace& trace) {
    const Matrix q = st.q();
    const int r = st.modes();
    std::vector<double> c(r, 0.0), a(r, 0.0), b(r, 0.0);
    double cross = 0.0;
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            double acc = 0.0;
            for (int row = 0; row < q.rows; ++row) {
                double inner = 0.0;
                for (int col = 0; col < q.cols; ++col) {
                    inner += q.at(row, col) * st.target_v.at(col, j);
                }
                acc += st.target_u.at(row, i) * inner;
            }
            if (i == j) {
                c[i] = acc;
            } else {
                cross = std::max(cross, std::abs(acc));
            }
        }
        Matrix ui(q.rows, 1), vi(q.rows, 1);
        for (int row = 0; row < q.rows; ++row) {
            ui.at(row, 0) = st.target_u.at(row, i);
            vi.at(row, 0) = st.target_v.at(row, i);
        }
        a[i] = frobenius_norm(matmul_tn(st.u, ui));
        b[i] = frobenius_norm(matmul_tn(st.v, vi));
    }
    const Matrix balance = matmul_tn(st.u, st.u) - matmul_tn(st.v, st.v);
    trace.t.push_back(st.t);
    trace.c.push_back(std::move(c));
    trace.a.push_back(std::move(a));
    trace.b.push_back(std::move(b));
    trace.max_cross.push_back(cross);
    trace.loss.push_back(st.loss());
    trace.balance_drift.push_back(max_abs(balance - balance0));
}

void rk4_step(FlowState& st, double h) {
    Matrix k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
    const Matrix u0 = st.u, v0 = st.v;
    flow_rhs(st, k1u, k1v);
    st.u = u0 + 0.5 * h * k1u;
    st.v = v0 + 0.5 * h * k1v;
    flow_rhs(st, k2u, k2v);
    st.u = u0 + 0.5 * h * k2u;
    st.v = v0 + 0.5 * h * k2v;
    flow_rhs(st, k3u, k3v);
    st.u = u0 + h * k3u;
    st.v = v0 + h * k3v;
    flow_rhs(st, k4u, k4v);
    st.u = u0 + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    st.v = v0 + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    st.t += h;
}

constexpr int kMaxHalvings = 40;
constexpr double kLossIncreaseTol = 1e-10;

}  // namespace

FlowTrace integrate(FlowState& state, double t_end, int record_stride) {
    if (record_stride < 1) record_stride = 1;
    FlowTrace trace;
    const Matrix balance0 = matmul_tn(state.u, state.u) - matmul_tn(state.v, state.v);
    record(state, balance0, trace);
    const double t_stop = state.t + t_end;
    long step_count = 0;
    bool recorded_last = true;
    while (state.t < t_stop - 1e-12) {
        const double h = std::min(state.h, t_stop - state.t);
        const double loss_before = state.loss();
        FlowState candidate = state;
        rk4_step(candidate, h);
        if (candidate.loss() > loss_before + kLossIncreaseTol) {
            int halvings = 0;
            double h2 = h;
            while (halvings < kMaxHalvings) {
                h2 *= 0.5;
                candidate = state;
                rk4_step(candidate, h2);
                if (candidate.loss() <= loss_before + kLossIncreaseTol) break;
                ++halvings;
            }
            if (halvings >= kMaxHalvings) {
                throw std::runtime_error("integrate: step size collapsed at t = " +
                                         std::to_string(state.t));
            }
            state = candidate;
            state.h = h2;
        } else {
            state = candidate;
        }
        ++step_count;
        recorded_last = step_count % record_stride == 0;
        if (recorded_last) record(state, balance0, trace);
    }
    if (!recorded_last) record(state, balance0, trace);
    return trace;
}

FlowTrace unlearn_mode(FlowState& state, int k, double t_end, double convergence_tol,
                       int record_stride) {
    if (k < 0 || k >= state.modes()) {
        throw std::out_of_range("unlearn_mode: mode " + std::to_string(k) + " outside [0," +
                                std::to_string(state.modes()) + ")");
    }
    const double residual = std::sqrt(2.0 * state.loss());
    if (residual >= convergence_tol) {
        throw std::invalid_argument("unlearn_mode: flow not converged, ||Q - Q*||_F = " +
                                    std::to_string(residual));
    }
    state.s[k] = 0.0;
    return integrate(state, t_end, record_stride);
}

}  // namespace dlab::flow
