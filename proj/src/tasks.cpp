#include "dlab/tasks.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dlab/io.hpp"

namespace dlab::tasks {

bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; static_cast<long>(d) * d <= p; ++d) {
        if (p % d == 0) return false;
    }
    return true;
}

ModOp mod_op_from_name(const std::string& name) {
    if (name == "add") return ModOp::add;
    if (name == "mul") return ModOp::mul;
    throw std::invalid_argument("unknown modular op: " + name);
}

ModArithDataset gen_mod_arith(int p, ModOp op, double split, uint64_t seed) {
    if (!is_prime(p)) {
        throw std::invalid_argument("gen_mod_arith: p = " + std::to_string(p) + " is not prime");
    }
    if (split <= 0.0 || split > 1.0) {
        throw std::invalid_argument("gen_mod_arith: split must be in (0, 1]");
    }
    ModArithDataset ds;
    ds.p = p;
    ds.op = op;
    ds.full.tok_a.reserve(static_cast<size_t>(p) * p);
    ds.full.tok_b.reserve(static_cast<size_t>(p) * p);
    ds.full.labels.reserve(static_cast<size_t>(p) * p);
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
            ds.full.tok_a.push_back(a);
            ds.full.tok_b.push_back(b);
            const long res = op == ModOp::add ? static_cast<long>(a) + b
                                              : static_cast<long>(a) * b;
            ds.full.labels.push_back(static_cast<int>(res % p));
        }
    }

    std::vector<int> perm(static_cast<size_t>(p) * p);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    const int n_train = static_cast<int>(std::llround(split * perm.size()));
    ds.train_idx.assign(perm.begin(), perm.begin() + n_train);
    ds.val_idx.assign(perm.begin() + n_train, perm.end());

    auto take = [&](const std::vector<int>& idx) {
        train::Dataset out;
        out.tok_a.reserve(idx.size());
        out.tok_b.reserve(idx.size());
        out.labels.reserve(idx.size());
        for (int i : idx) {
            out.tok_a.push_back(ds.full.tok_a[i]);
            out.tok_b.push_back(ds.full.tok_b[i]);
            out.labels.push_back(ds.full.labels[i]);
        }
        return out;
    };
    ds.train_set = take(ds.train_idx);
    ds.val_set = ds.val_idx.empty() ? ds.train_set : take(ds.val_idx);
    return ds;
}

train::Dataset gen_cycle(int p) {
    train::Dataset ds;
    ds.tok_a.resize(p);
    ds.tok_b.assign(p, p);  // phi token shares the table, reserved row p
    ds.labels.resize(p);
    for (int a = 0; a < p; ++a) {
        ds.tok_a[a] = a;
        ds.labels[a] = (a + 1) % p;
    }
    return ds;
}

std::array<double, 4> hamilton_product(const std::array<double, 4>& q1,
                                       const std::array<double, 4>& q2) {
    const double w1 = q1[0], x1 = q1[1], y1 = q1[2], z1 = q1[3];
    const double w2 = q2[0], x2 = q2[1], y2 = q2[2], z2 = q2[3];
    return {w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2};
}

train::Dataset gen_quaternion_batch(int batch, double dt, uint64_t seed, double omega_scale) {
    Rng rng(seed);
    return gen_quaternion_batch(batch, dt, rng, omega_scale);
}

train::Dataset gen_quaternion_batch(int batch, double dt, Rng& rng, double omega_scale) {
    if (dt <= 0.0) throw std::invalid_argument("gen_quaternion_batch: dt must be positive");
    train::Dataset ds;
    ds.x1 = Matrix(batch, 4);
    ds.x2 = Matrix(batch, 3);
    ds.targets = Matrix(batch, 4);
    for (int i = 0; i < batch; ++i) {
        std::array<double, 4> q;
        double nrm = 0.0;
        for (double& c : q) {
            c = rng.normal();
            nrm += c * c;
        }
        nrm = std::sqrt(nrm);
        for (double& c : q) c /= nrm;

        std::array<double, 4> omega_pure{0.0, 0.0, 0.0, 0.0};
        for (int j = 1; j < 4; ++j) omega_pure[j] = omega_scale * rng.normal();

        const std::array<double, 4> dq = hamilton_product(q, omega_pure);
        for (int j = 0; j < 4; ++j) {
            ds.x1.at(i, j) = q[j];
            ds.targets.at(i, j) = q[j] + 0.5 * dq[j] * dt;
        }
        for (int j = 0; j < 3; ++j) ds.x2.at(i, j) = omega_pure[j + 1];
    }
    return ds;
}

train::Dataset gen_sl2_batch(int batch, double dt, uint64_t seed) {
    Rng rng(seed);
    return gen_sl2_batch(batch, dt, rng);
}

train::Dataset gen_sl2_batch(int batch, double dt, Rng& rng) {
    if (dt <= 0.0) throw std::invalid_argument("gen_sl2_batch: dt must be positive");
    train::Dataset ds;
    ds.x1 = Matrix(batch, 2);
    ds.x2 = Matrix(batch, 4);
    ds.targets = Matrix(batch, 2);
    for (int i = 0; i < batch; ++i) {
        double g[4];
        for (double& v : g) v = rng.normal();
        const double half_tr = 0.5 * (g[0] + g[3]);
        g[0] -= half_tr;  // exact traceless projection
        g[3] -= half_tr;
        const double x = rng.normal();
        const double y = rng.normal();
        ds.x1.at(i, 0) = x;
        ds.x1.at(i, 1) = y;
        for (int j = 0; j < 4; ++j) ds.x2.at(i, j) = g[j];
        ds.targets.at(i, 0) = x + (g[0] * x + g[1] * y) * dt;
        ds.targets.at(i, 1) = y + (g[2] * x + g[3] * y) * dt;
    }
    return ds;
}

namespace {

double row_dot(const Matrix& a, const Matrix& b) { return dot(a, b); }

Matrix normalized_row(const Matrix& v) {
    Matrix out = v;
    const double nrm = frobenius_norm(v);
    if (nrm <= 0.0) throw std::runtime_error("normalized_row: zero vector");
    out *= 1.0 / nrm;
    return out;
}

// First two orthonormal columns of the QR factorization of a random Gaussian
// matrix, computed by Gram-Schmidt on two fresh draws; redraws on degeneracy.
std::pair<Matrix, Matrix> orthonormal_pair(Rng& rng, int d) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix q1 = rng.normal_matrix(1, d);
        Matrix q2 = rng.normal_matrix(1, d);
        const double n1 = frobenius_norm(q1);
        if (n1 < 1e-8) continue;
        q1 *= 1.0 / n1;
        q2 -= row_dot(q2, q1) * q1;
        const double n2 = frobenius_norm(q2);
        if (n2 < 1e-8) continue;
        q2 *= 1.0 / n2;
        return {q1, q2};
    }
    throw std::runtime_error("orthonormal_pair: repeated degenerate draws");
}

Matrix outer_rows(const Matrix& u, const Matrix& v, double scale) {
    Matrix m(u.cols, v.cols);
    for (int i = 0; i < u.cols; ++i) {
        for (int j = 0; j < v.cols; ++j) m.at(i, j) = scale * u.data[i] * v.data[j];
    }
    return m;
}

double quad_form(const Matrix& e_a, const Matrix& m, const Matrix& e_b) {
    // e_a M e_b^T for row vectors
    double acc = 0.0;
    for (int i = 0; i < m.rows; ++i) {
        double inner = 0.0;
        const double* mrow = m.row_ptr(i);
        for (int j = 0; j < m.cols; ++j) inner += mrow[j] * e_b.data[j];
        acc += e_a.data[i] * inner;
    }
    return acc;
}

}  // namespace

double SuperpositionTasks::overlap() const {
    return row_dot(u2, u1) * row_dot(v2, v1);
}

SuperpositionTasks gen_superposition(int d, int n_tokens, double alpha, double lambda,
                                     uint64_t seed, int dataset_size) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw std::invalid_argument("gen_superposition: alpha must be in [0, 1]");
    }
    if (d < 2) throw std::invalid_argument("gen_superposition: d must be at least 2");
    Rng rng(seed);
    SuperpositionTasks t;
    t.d = d;
    t.n_tokens = n_tokens;
    t.alpha = alpha;
    t.lambda = lambda;

    std::tie(t.u1, t.u_perp) = orthonormal_pair(rng, d);
    std::tie(t.v1, t.v_perp) = orthonormal_pair(rng, d);
    t.u2 = normalized_row(alpha * t.u1 + (1.0 - alpha) * t.u_perp);
    t.v2 = normalized_row(alpha * t.v1 + (1.0 - alpha) * t.v_perp);
    t.m_a = outer_rows(t.u1, t.v1, lambda);
    t.m_b = outer_rows(t.u2, t.v2, lambda);

    t.embed = Matrix(n_tokens, d);
    for (int i = 0; i < n_tokens; ++i) {
        Matrix row = normalized_row(rng.normal_matrix(1, d));
        for (int j = 0; j < d; ++j) t.embed.at(i, j) = row.data[j];
    }

    const Matrix m_sum = t.m_a + t.m_b;
    t.phase1.x1 = Matrix(dataset_size, d);
    t.phase1.x2 = Matrix(dataset_size, d);
    t.phase1.targets = Matrix(dataset_size, 1);
    t.phase2.targets = Matrix(dataset_size, 1);
    for (int i = 0; i < dataset_size; ++i) {
        const int a = rng.uniform_int(n_tokens);
        const int b = rng.uniform_int(n_tokens);
        Matrix e_a(1, d), e_b(1, d);
        for (int j = 0; j < d; ++j) {
            e_a.data[j] = t.embed.at(a, j);
            e_b.data[j] = t.embed.at(b, j);
            t.phase1.x1.at(i, j) = e_a.data[j];
            t.phase1.x2.at(i, j) = e_b.data[j];
        }
        t.phase1.targets.at(i, 0) = quad_form(e_a, m_sum, e_b);
        t.phase2.targets.at(i, 0) = quad_form(e_a, t.m_b, e_b);
    }
    t.phase2.x1 = t.phase1.x1;
    t.phase2.x2 = t.phase1.x2;
    return t;
}

EntangledDataset gen_entangled(int d, int r, int n_train, int n_val, uint64_t seed) {
    if (r < 1) throw std::invalid_argument("gen_entangled: rank must be at least 1");
    Rng rng(seed);
    EntangledDataset ds;
    ds.d = d;
    ds.rank = r;

    // unit-norm factor columns keep the target scale O(sqrt(r)) so the
    // attack stage's fixed SGD step stays in a stable regime
    auto planted = [&]() {
        Matrix m(d, d);
        for (int k = 0; k < r; ++k) {
            const Matrix u = normalized_row(rng.normal_matrix(1, d));
            const Matrix v = normalized_row(rng.normal_matrix(1, d));
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) m.at(i, j) += u.data[i] * v.data[j];
            }
        }
        return m;
    };
    ds.a12 = planted();
    ds.a23 = planted();

    auto fill = [&](int n, train::Dataset& out, std::vector<double>& f12,
                    std::vector<double>& f23) {
        out.x1 = Matrix(n, 3 * d);
        out.targets = Matrix(n, 1);
        f12.resize(n);
        f23.resize(n);
        Matrix x1(1, d), x2(1, d), x3(1, d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                x1.data[j] = rng.normal();
                x2.data[j] = rng.normal();
                x3.data[j] = rng.normal();
                out.x1.at(i, j) = x1.data[j];
                out.x1.at(i, d + j) = x2.data[j];
                out.x1.at(i, 2 * d + j) = x3.data[j];
            }
            f12[i] = quad_form(x1, ds.a12, x2);
            f23[i] = quad_form(x2, ds.a23, x3);
            out.targets.at(i, 0) = f12[i] + f23[i];
        }
    };
    fill(n_train, ds.train_set, ds.f12_train, ds.f23_train);
    fill(n_val, ds.val_set, ds.f12_val, ds.f23_val);
    return ds;
}

void export_csv(const train::Dataset& data, const std::string& path) {
    io::Csv csv;
    if (!data.tok_a.empty()) {
        csv.header = {"a", "b", "label"};
        for (int i = 0; i < data.size(); ++i) {
            csv.rows.push_back({static_cast<double>(data.tok_a[i]),
                                static_cast<double>(data.tok_b[i]),
                                static_cast<double>(data.labels[i])});
        }
    } else {
        for (int j = 0; j < data.x1.cols; ++j) csv.header.push_back("x1_" + std::to_string(j));
        for (int j = 0; j < data.x2.cols; ++j) csv.header.push_back("x2_" + std::to_string(j));
        for (int j = 0; j < data.targets.cols; ++j) csv.header.push_back("y_" + std::to_string(j));
        for (int i = 0; i < data.size(); ++i) {
            std::vector<double> row;
            for (int j = 0; j < data.x1.cols; ++j) row.push_back(data.x1.at(i, j));
            for (int j = 0; j < data.x2.cols; ++j) row.push_back(data.x2.at(i, j));
            for (int j = 0; j < data.targets.cols; ++j) row.push_back(data.targets.at(i, j));
            csv.rows.push_back(std::move(row));
        }
    }
    io::write_csv(path, csv);
}

train::Dataset with_targets(const train::Dataset& base, const std::vector<double>& y) {
    if (static_cast<int>(y.size()) != base.size()) {
        throw std::invalid_argument("with_targets: " + std::to_string(y.size()) +
                                    " targets for " + std::to_string(base.size()) + " examples");
    }
    train::Dataset out = base;
    out.targets = Matrix(base.size(), 1);
    for (int i = 0; i < base.size(); ++i) out.targets.at(i, 0) = y[i];
    return out;
}

}  // namespace dlab::tasks
