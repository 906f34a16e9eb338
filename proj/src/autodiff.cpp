#include "dlab/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace dlab::ad {

namespace {

constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double activation_value(Activation kind, double x) {
    switch (kind) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::sigmoid: return sigmoid_scalar(x);
        case Activation::silu: return x * sigmoid_scalar(x);
        case Activation::gelu: {
            // tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))
            const double inner = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
            return 0.5 * x * (1.0 + std::tanh(inner));
        }
    }
    return 0.0;
}

double activation_deriv(Activation kind, double x) {
    switch (kind) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double th = std::tanh(x);
            return 1.0 - th * th;
        }
        case Activation::sigmoid: {
            const double s = sigmoid_scalar(x);
            return s * (1.0 - s);
        }
        case Activation::silu: {
            const double s = sigmoid_scalar(x);
            return s * (1.0 + x * (1.0 - s));
        }
        case Activation::gelu: {
            const double inner = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
            const double th = std::tanh(inner);
            const double d_inner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
            return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * d_inner;
        }
    }
    return 0.0;
}

Var make_node(Tape& t, Matrix value, std::array<int, 2> parents,
              std::function<void(Tape&, const Node&)> backward_fn) {
    bool needs_grad = false;
    for (int p : parents) {
        if (p >= 0 && t.nodes[p].requires_grad) needs_grad = true;
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = needs_grad;
    n.parents = parents;
    if (needs_grad) n.backward_fn = std::move(backward_fn);
    t.nodes.push_back(std::move(n));
    return Var{static_cast<int>(t.nodes.size()) - 1};
}

void check_scalar(const Matrix& m, const char* what) {
    if (m.rows != 1 || m.cols != 1) {
        throw std::invalid_argument(std::string(what) + ": expected 1x1 scalar, got " +
                                    m.shape_str());
    }
}

}  // namespace

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "silu") return Activation::silu;
    if (name == "gelu") return Activation::gelu;
    throw std::invalid_argument("unknown activation: " + name);
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::silu: return "silu";
        case Activation::gelu: return "gelu";
    }
    return "?";
}

Var Tape::leaf(Matrix value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes.push_back(std::move(n));
    return Var{static_cast<int>(nodes.size()) - 1};
}

Matrix& Tape::grad_ref(int id) {
    Node& n = nodes[id];
    if (n.grad.empty()) n.grad = Matrix(n.value.rows, n.value.cols);
    return n.grad;
}

Matrix& Tape::grad(Var v) { return grad_ref(v.id); }

void Tape::backward(Var loss) {
    const Node& root = nodes[loss.id];
    check_scalar(root.value, "backward");

    // mark nodes reachable from the loss
    std::vector<char> reachable(nodes.size(), 0);
    std::vector<int> stack{loss.id};
    reachable[loss.id] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int p : nodes[u].parents) {
            if (p >= 0 && !reachable[p]) {
                reachable[p] = 1;
                stack.push_back(p);
            }
        }
    }

    // interior grads are per-sweep scratch; only leaf grads accumulate
    // across backward calls
    for (size_t id = 0; id < nodes.size(); ++id) {
        if (!reachable[id]) continue;
        Node& n = nodes[id];
        if (n.parents[0] >= 0 || n.parents[1] >= 0) {
            for (double& v : n.grad.data) v = 0.0;
        }
    }

    grad_ref(loss.id).data[0] += 1.0;
    // ids descend in topological order by construction
    for (int id = loss.id; id >= 0; --id) {
        const Node& n = nodes[id];
        if (!reachable[id] || !n.requires_grad || !n.backward_fn) continue;
        n.backward_fn(*this, n);
    }
}

void Tape::zero_grad() {
    for (Node& n : nodes) {
        for (double& v : n.grad.data) v = 0.0;
    }
}

Var matmul(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    check_inner_dims(av, bv, "matmul");
    const int aid = a.id, bid = b.id;
    return make_node(t, dlab::matmul(av, bv), {aid, bid},
                     [aid, bid](Tape& tp, const Node& self) {
                         const Matrix& g = self.grad;
                         if (tp.nodes[aid].requires_grad) {
                             tp.grad_ref(aid) += matmul_nt(g, tp.nodes[bid].value);
                         }
                         if (tp.nodes[bid].requires_grad) {
                             tp.grad_ref(bid) += matmul_tn(tp.nodes[aid].value, g);
                         }
                     });
}

Var hadamard(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    check_same_shape(av, bv, "hadamard");
    const int aid = a.id, bid = b.id;
    return make_node(t, dlab::hadamard(av, bv), {aid, bid},
                     [aid, bid](Tape& tp, const Node& self) {
                         const Matrix& g = self.grad;
                         if (tp.nodes[aid].requires_grad) {
                             tp.grad_ref(aid) += dlab::hadamard(g, tp.nodes[bid].value);
                         }
                         if (tp.nodes[bid].requires_grad) {
                             tp.grad_ref(bid) += dlab::hadamard(g, tp.nodes[aid].value);
                         }
                     });
}

Var add(Tape& t, Var a, Var b) {
    check_same_shape(t.value(a), t.value(b), "add");
    const int aid = a.id, bid = b.id;
    return make_node(t, t.value(a) + t.value(b), {aid, bid},
                     [aid, bid](Tape& tp, const Node& self) {
                         if (tp.nodes[aid].requires_grad) tp.grad_ref(aid) += self.grad;
                         if (tp.nodes[bid].requires_grad) tp.grad_ref(bid) += self.grad;
                     });
}

Var sub(Tape& t, Var a, Var b) {
    check_same_shape(t.value(a), t.value(b), "sub");
    const int aid = a.id, bid = b.id;
    return make_node(t, t.value(a) - t.value(b), {aid, bid},
                     [aid, bid](Tape& tp, const Node& self) {
                         if (tp.nodes[aid].requires_grad) tp.grad_ref(aid) += self.grad;
                         if (tp.nodes[bid].requires_grad) tp.grad_ref(bid) -= self.grad;
                     });
}

Var scale(Tape& t, Var a, double c) {
    const int aid = a.id;
    return make_node(t, c * t.value(a), {aid, -1}, [aid, c](Tape& tp, const Node& self) {
        tp.grad_ref(aid) += c * self.grad;
    });
}

Var add_row_bias(Tape& t, Var x, Var bias) {
    const Matrix& xv = t.value(x);
    const Matrix& bv = t.value(bias);
    if (bv.rows != 1 || bv.cols != xv.cols) {
        throw std::invalid_argument("add_row_bias: bias " + bv.shape_str() +
                                    " incompatible with " + xv.shape_str());
    }
    Matrix out = xv;
    for (int i = 0; i < out.rows; ++i) {
        double* row = out.row_ptr(i);
        for (int j = 0; j < out.cols; ++j) row[j] += bv.data[j];
    }
    const int xid = x.id, bid = bias.id;
    return make_node(t, std::move(out), {xid, bid}, [xid, bid](Tape& tp, const Node& self) {
        const Matrix& g = self.grad;
        if (tp.nodes[xid].requires_grad) tp.grad_ref(xid) += g;
        if (tp.nodes[bid].requires_grad) {
            Matrix& bg = tp.grad_ref(bid);
            for (int i = 0; i < g.rows; ++i) {
                const double* row = g.row_ptr(i);
                for (int j = 0; j < g.cols; ++j) bg.data[j] += row[j];
            }
        }
    });
}

Var activation(Tape& t, Activation kind, Var x) {
    const Matrix& xv = t.value(x);
    Matrix out(xv.rows, xv.cols);
    for (size_t i = 0; i < xv.data.size(); ++i) out.data[i] = activation_value(kind, xv.data[i]);
    const int xid = x.id;
    return make_node(t, std::move(out), {xid, -1}, [xid, kind](Tape& tp, const Node& self) {
        const Matrix& xval = tp.nodes[xid].value;
        Matrix& xg = tp.grad_ref(xid);
        for (size_t i = 0; i < xval.data.size(); ++i) {
            xg.data[i] += self.grad.data[i] * activation_deriv(kind, xval.data[i]);
        }
    });
}

Var embed(Tape& t, Var table, const std::vector<int>& indices) {
    const Matrix& tab = t.value(table);
    for (int idx : indices) {
        if (idx < 0 || idx >= tab.rows) {
            throw std::out_of_range("embed: index " + std::to_string(idx) +
                                    " outside table with " + std::to_string(tab.rows) + " rows");
        }
    }
    Matrix out(static_cast<int>(indices.size()), tab.cols);
    for (int i = 0; i < out.rows; ++i) {
        const double* src = tab.row_ptr(indices[i]);
        double* dst = out.row_ptr(i);
        for (int j = 0; j < tab.cols; ++j) dst[j] = src[j];
    }
    const int tid = table.id;
    return make_node(t, std::move(out), {tid, -1},
                     [tid, indices](Tape& tp, const Node& self) {
                         Matrix& tg = tp.grad_ref(tid);
                         for (int i = 0; i < self.grad.rows; ++i) {
                             const double* src = self.grad.row_ptr(i);
                             double* dst = tg.row_ptr(indices[i]);
                             for (int j = 0; j < self.grad.cols; ++j) dst[j] += src[j];
                         }
                     });
}

Var concat_cols(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    const int aid = a.id, bid = b.id;
    const int acols = av.cols;
    return make_node(t, hcat(av, bv), {aid, bid},
                     [aid, bid, acols](Tape& tp, const Node& self) {
                         const Matrix& g = self.grad;
                         if (tp.nodes[aid].requires_grad) {
                             Matrix& ag = tp.grad_ref(aid);
                             for (int i = 0; i < g.rows; ++i) {
                                 const double* src = g.row_ptr(i);
                                 double* dst = ag.row_ptr(i);
                                 for (int j = 0; j < acols; ++j) dst[j] += src[j];
                             }
                         }
                         if (tp.nodes[bid].requires_grad) {
                             Matrix& bg = tp.grad_ref(bid);
                             for (int i = 0; i < g.rows; ++i) {
                                 const double* src = g.row_ptr(i) + acols;
                                 double* dst = bg.row_ptr(i);
                                 for (int j = 0; j < bg.cols; ++j) dst[j] += src[j];
                             }
                         }
                     });
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        const double* row = logits.row_ptr(i);
        double mx = row[0];
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        double* prow = p.row_ptr(i);
        for (int j = 0; j < logits.cols; ++j) {
            prow[j] = std::exp(row[j] - mx);
            z += prow[j];
        }
        for (int j = 0; j < logits.cols; ++j) prow[j] /= z;
    }
    return p;
}

Var softmax_cross_entropy(Tape& t, Var logits, const std::vector<int>& labels) {
    const Matrix& lv = t.value(logits);
    if (lv.rows < 1) throw std::invalid_argument("softmax_cross_entropy: empty batch");
    if (static_cast<int>(labels.size()) != lv.rows) {
        throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(lv.rows) + " rows");
    }
    for (int y : labels) {
        if (y < 0 || y >= lv.cols) {
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(y) +
                                    " outside [0," + std::to_string(lv.cols) + ")");
        }
    }
    // loss computed from log-sum-exp directly; probs kept for the backward rule
    Matrix probs = softmax_rows(lv);
    double loss = 0.0;
    for (int i = 0; i < lv.rows; ++i) {
        const double* row = lv.row_ptr(i);
        double mx = row[0];
        for (int j = 1; j < lv.cols; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < lv.cols; ++j) z += std::exp(row[j] - mx);
        loss -= row[labels[i]] - mx - std::log(z);
    }
    loss /= lv.rows;

    const int lid = logits.id;
    return make_node(t, Matrix(1, 1, {loss}), {lid, -1},
                     [lid, labels, probs](Tape& tp, const Node& self) {
                         const double g = self.grad.data[0];
                         Matrix& lg = tp.grad_ref(lid);
                         const double inv_batch = 1.0 / probs.rows;
                         for (int i = 0; i < probs.rows; ++i) {
                             const double* prow = probs.row_ptr(i);
                             double* grow = lg.row_ptr(i);
                             for (int j = 0; j < probs.cols; ++j) {
                                 grow[j] += g * inv_batch * prow[j];
                             }
                             grow[labels[i]] -= g * inv_batch;
                         }
                     });
}

Var mse(Tape& t, Var pred, const Matrix& target) {
    const Matrix& pv = t.value(pred);
    check_same_shape(pv, target, "mse");
    double loss = 0.0;
    for (size_t i = 0; i < pv.data.size(); ++i) {
        const double d = pv.data[i] - target.data[i];
        loss += d * d;
    }
    loss /= static_cast<double>(pv.data.size());
    const int pid = pred.id;
    return make_node(t, Matrix(1, 1, {loss}), {pid, -1},
                     [pid, target](Tape& tp, const Node& self) {
                         const double g = self.grad.data[0];
                         const Matrix& pv2 = tp.nodes[pid].value;
                         Matrix& pg = tp.grad_ref(pid);
                         const double c = 2.0 * g / static_cast<double>(pv2.data.size());
                         for (size_t i = 0; i < pv2.data.size(); ++i) {
                             pg.data[i] += c * (pv2.data[i] - target.data[i]);
                         }
                     });
}

namespace {

// |w| summed over one parameter; subgradient sign(w), with sign(0) = 0
Var l1_one(Tape& t, Var w) {
    const Matrix& wv = t.value(w);
    double s = 0.0;
    for (double v : wv.data) s += std::abs(v);
    const int wid = w.id;
    return make_node(t, Matrix(1, 1, {s}), {wid, -1}, [wid](Tape& tp, const Node& self) {
        const double g = self.grad.data[0];
        const Matrix& wv2 = tp.nodes[wid].value;
        Matrix& wg = tp.grad_ref(wid);
        for (size_t i = 0; i < wv2.data.size(); ++i) {
            const double v = wv2.data[i];
            wg.data[i] += g * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
        }
    });
}

}  // namespace

Var l1_penalty(Tape& t, const std::vector<Var>& params, double lambda) {
    if (params.empty()) throw std::invalid_argument("l1_penalty: no parameters given");
    Var acc = l1_one(t, params[0]);
    for (size_t i = 1; i < params.size(); ++i) acc = add(t, acc, l1_one(t, params[i]));
    return scale(t, acc, lambda);
}

Var reduce_sum(Tape& t, Var x) {
    const Matrix& xv = t.value(x);
    const int xid = x.id;
    return make_node(t, Matrix(1, 1, {dlab::sum(xv)}), {xid, -1},
                     [xid](Tape& tp, const Node& self) {
                         const double g = self.grad.data[0];
                         Matrix& xg = tp.grad_ref(xid);
                         for (double& v : xg.data) v += g;
                     });
}

Var reduce_mean(Tape& t, Var x) {
    const Matrix& xv = t.value(x);
    const double n = static_cast<double>(xv.data.size());
    const int xid = x.id;
    return make_node(t, Matrix(1, 1, {dlab::sum(xv) / n}), {xid, -1},
                     [xid, n](Tape& tp, const Node& self) {
                         const double g = self.grad.data[0] / n;
                         Matrix& xg = tp.grad_ref(xid);
                         for (double& v : xg.data) v += g;
                     });
}

}  // namespace dlab::ad
