#include "dlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dlab::spectral {

CMatrix dft2(const Matrix& m) {
    if (m.rows != m.cols) {
        throw std::invalid_argument("dft2: square matrix required, got " + m.shape_str());
    }
    const int p = m.rows;
    Matrix cos_f(p, p), sin_f(p, p);  // F = cos_f + i*sin_f
    const double w = -2.0 * M_PI / p;
    for (int j = 0; j < p; ++j) {
        for (int k = 0; k < p; ++k) {
            // reduce j*k mod p first; exp(-2 pi i jk/p) is p-periodic in jk
            const long jk = (static_cast<long>(j) * k) % p;
            cos_f.at(j, k) = std::cos(w * static_cast<double>(jk));
            sin_f.at(j, k) = std::sin(w * static_cast<double>(jk));
        }
    }
    // A = F * M
    const Matrix a_re = matmul(cos_f, m);
    const Matrix a_im = matmul(sin_f, m);
    // Mhat = A * conj(F)  (F is symmetric, so F^* = conj(F))
    CMatrix out;
    out.re = matmul(a_re, cos_f) + matmul(a_im, sin_f);
    out.im = matmul(a_im, cos_f) - matmul(a_re, sin_f);
    return out;
}

PowerSpectrum normalized_power(const Matrix& m, int source_class) {
    const CMatrix f = dft2(m);
    PowerSpectrum ps;
    ps.source_class = source_class;
    ps.p = Matrix(m.rows, m.cols);
    double total = 0.0;
    for (size_t i = 0; i < ps.p.data.size(); ++i) {
        ps.p.data[i] = f.re.data[i] * f.re.data[i] + f.im.data[i] * f.im.data[i];
        total += ps.p.data[i];
    }
    if (total <= 0.0) {
        throw std::invalid_argument("normalized_power: all-zero matrix has no spectrum");
    }
    for (double& v : ps.p.data) v /= total;
    return ps;
}

double fourier_entropy(const Matrix& m) {
    const PowerSpectrum ps = normalized_power(m);
    double h = 0.0;
    for (double v : ps.p.data) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

Matrix center(const Matrix& m) {
    const int r = m.rows, c = m.cols;
    std::vector<double> row_mean(r, 0.0), col_mean(c, 0.0);
    double grand = 0.0;
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            row_mean[i] += m.at(i, j);
            col_mean[j] += m.at(i, j);
            grand += m.at(i, j);
        }
    }
    for (double& v : row_mean) v /= c;
    for (double& v : col_mean) v /= r;
    grand /= static_cast<double>(r) * c;
    Matrix out(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) out.at(i, j) = m.at(i, j) - row_mean[i] - col_mean[j] + grand;
    }
    return out;
}

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kMaxSweeps = 100;

// Gram-Schmidt completion for U columns whose singular value vanished.
void complete_column(Matrix& u, int col) {
    const int n = u.rows;
    for (int cand = 0; cand < n; ++cand) {
        Matrix v(n, 1);
        v.at(cand, 0) = 1.0;
        for (int j = 0; j < u.cols; ++j) {
            if (j == col) continue;
            double proj = 0.0;
            for (int i = 0; i < n; ++i) proj += u.at(i, j) * v.at(i, 0);
            for (int i = 0; i < n; ++i) v.at(i, 0) -= proj * u.at(i, j);
        }
        double nrm = 0.0;
        for (int i = 0; i < n; ++i) nrm += v.at(i, 0) * v.at(i, 0);
        nrm = std::sqrt(nrm);
        if (nrm > 1e-6) {
            for (int i = 0; i < n; ++i) u.at(i, col) = v.at(i, 0) / nrm;
            return;
        }
    }
}

}  // namespace

SVDResult svd(const Matrix& m, bool want_vectors) {
    if (m.empty()) throw std::invalid_argument("svd: empty matrix");
    const bool transposed = m.rows < m.cols;
    // rows of `b` are the columns of the (possibly transposed) input, so each
    // Jacobi rotation streams over contiguous memory
    Matrix b = transposed ? m : transpose(m);
    const int n = b.rows;       // number of singular values
    const int len = b.cols;     // length of each working vector
    Matrix v = Matrix::identity(n);

    double off = 0.0;
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double* bp = b.row_ptr(p);
                double* bq = b.row_ptr(q);
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < len; ++i) {
                    app += bp[i] * bp[i];
                    aqq += bq[i] * bq[i];
                    apq += bp[i] * bq[i];
                }
                const double denom = std::sqrt(app * aqq);
                if (denom < 1e-300) continue;
                const double rel = std::abs(apq) / denom;
                off = std::max(off, rel);
                if (rel <= kJacobiTol) continue;

                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < len; ++i) {
                    const double x = bp[i], y = bq[i];
                    bp[i] = c * x - s * y;
                    bq[i] = s * x + c * y;
                }
                double* vp = v.row_ptr(p);
                double* vq = v.row_ptr(q);
                for (int i = 0; i < n; ++i) {
                    const double x = vp[i], y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
        converged = off <= kJacobiTol;
    }
    if (!converged) {
        throw std::runtime_error("svd: one-sided Jacobi did not converge on " + m.shape_str() +
                                 " after " + std::to_string(kMaxSweeps) +
                                 " sweeps, residual " + std::to_string(off));
    }

    std::vector<double> sigma(n);
    for (int j = 0; j < n; ++j) {
        double nrm = 0.0;
        const double* row = b.row_ptr(j);
        for (int i = 0; i < len; ++i) nrm += row[i] * row[i];
        sigma[j] = std::sqrt(nrm);
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a2, int b2) { return sigma[a2] > sigma[b2]; });

    SVDResult r;
    r.sigma.resize(n);
    for (int j = 0; j < n; ++j) r.sigma[j] = sigma[order[j]];

    if (want_vectors) {
        // working rows normalize into the left factor of the worked matrix
        Matrix left(len, n), right(n, n);
        const double sig_max = r.sigma.empty() ? 0.0 : r.sigma[0];
        for (int j = 0; j < n; ++j) {
            const int src = order[j];
            const double* brow = b.row_ptr(src);
            const double* vrow = v.row_ptr(src);
            if (r.sigma[j] > 1e-13 * std::max(1.0, sig_max)) {
                for (int i = 0; i < len; ++i) left.at(i, j) = brow[i] / r.sigma[j];
            }
            for (int i = 0; i < n; ++i) right.at(i, j) = vrow[i];
        }
        for (int j = 0; j < n; ++j) {
            if (r.sigma[j] <= 1e-13 * std::max(1.0, sig_max)) complete_column(left, j);
        }
        // m = left * diag(sigma) * right^T for the worked orientation
        if (transposed) {
            r.u = right;
            r.v = left;
        } else {
            r.u = left;
            r.v = right;
        }
        r.has_vectors = true;
    }
    return r;
}

std::vector<double> sv_decay(const SVDResult& r) {
    std::vector<double> out(r.sigma.size(), 0.0);
    if (r.sigma.empty() || r.sigma[0] <= 0.0) return out;
    for (size_t i = 0; i < r.sigma.size(); ++i) out[i] = r.sigma[i] / r.sigma[0];
    return out;
}

int rank_for_energy(const SVDResult& r, double tau) {
    if (tau <= 0.0 || tau > 1.0) {
        throw std::invalid_argument("rank_for_energy: tau must be in (0, 1]");
    }
    // cumulative share of the singular-value sum; the squared variant makes
    // the leading value swamp everything on centered logit matrices
    double total = 0.0;
    for (double s : r.sigma) total += s;
    if (total <= 0.0) return 0;
    double acc = 0.0;
    for (size_t i = 0; i < r.sigma.size(); ++i) {
        acc += r.sigma[i];
        if (acc >= tau * total) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(r.sigma.size());
}

}  // namespace dlab::spectral
