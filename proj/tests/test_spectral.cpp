#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "dlab/rng.hpp"
#include "dlab/spectral.hpp"
#include "test_util.hpp"

using namespace dlab;

namespace {

// brute-force double-sum DFT, the independent oracle for dft2
spectral::CMatrix dft2_brute(const Matrix& m) {
    const int p = m.rows;
    spectral::CMatrix out;
    out.re = Matrix(p, p);
    out.im = Matrix(p, p);
    for (int u = 0; u < p; ++u) {
        for (int v = 0; v < p; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int a = 0; a < p; ++a) {
                for (int b = 0; b < p; ++b) {
                    const double phase = -2.0 * M_PI * (u * a - v * b) / p;
                    acc += m.at(a, b) * std::complex<double>(std::cos(phase), std::sin(phase));
                }
            }
            out.re.at(u, v) = acc.real();
            out.im.at(u, v) = acc.imag();
        }
    }
    return out;
}

// classical two-sided Jacobi eigendecomposition of a symmetric matrix,
// independent of the production one-sided SVD
std::vector<double> symmetric_eigenvalues(Matrix a) {
    const int n = a.rows;
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a.at(p, q)));
        }
        if (off < 1e-14) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a.at(p, q)) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * a.at(p, q), a.at(q, q) - a.at(p, p));
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a.at(i, i);
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

Matrix addition_operator(int p, int k) {
    Matrix m(p, p);
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) m.at(a, b) = (a + b) % p == k ? 1.0 : 0.0;
    }
    return m;
}

}  // namespace

TEST_CASE("dft2 of all-ones concentrates at the origin") {
    const int p = 7;
    Matrix ones(p, p);
    for (double& v : ones.data) v = 1.0;
    const spectral::CMatrix f = spectral::dft2(ones);
    CHECK(f.re.at(0, 0) == doctest::Approx(49.0).epsilon(1e-12));
    CHECK(std::abs(f.im.at(0, 0)) < 1e-9);
    double off = 0.0;
    for (int u = 0; u < p; ++u) {
        for (int v = 0; v < p; ++v) {
            if (u == 0 && v == 0) continue;
            off = std::max(off, std::hypot(f.re.at(u, v), f.im.at(u, v)));
        }
    }
    CHECK(off < 1e-9);
}

TEST_CASE("dft2 of a delta is flat") {
    const int p = 5;
    Matrix delta(p, p);
    delta.at(0, 0) = 1.0;
    const spectral::CMatrix f = spectral::dft2(delta);
    for (int u = 0; u < p; ++u) {
        for (int v = 0; v < p; ++v) {
            CHECK(std::hypot(f.re.at(u, v), f.im.at(u, v)) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("dft2 matches the brute-force double sum at p=7") {
    Rng rng(3);
    const Matrix m = rng.normal_matrix(7, 7);
    const spectral::CMatrix fast = spectral::dft2(m);
    const spectral::CMatrix slow = dft2_brute(m);
    for (size_t i = 0; i < fast.re.data.size(); ++i) {
        CHECK(std::abs(fast.re.data[i] - slow.re.data[i]) < 1e-10);
        CHECK(std::abs(fast.im.data[i] - slow.im.data[i]) < 1e-10);
    }
}

TEST_CASE("addition operator spectrum sits on the anti-diagonal frequencies") {
    const int p = 7, k = 3;
    const spectral::PowerSpectrum ps = spectral::normalized_power(addition_operator(p, k));
    for (int u = 0; u < p; ++u) {
        for (int v = 0; v < p; ++v) {
            if ((u + v) % p == 0) {
                CHECK(ps.p.at(u, v) == doctest::Approx(1.0 / p).epsilon(1e-10));
            } else {
                CHECK(ps.p.at(u, v) < 1e-12);
            }
        }
    }
}

TEST_CASE("parseval under the unnormalized convention") {
    Rng rng(9);
    const Matrix m = rng.normal_matrix(11, 11);
    const spectral::CMatrix f = spectral::dft2(m);
    double lhs = 0.0;
    for (size_t i = 0; i < f.re.data.size(); ++i) {
        lhs += f.re.data[i] * f.re.data[i] + f.im.data[i] * f.im.data[i];
    }
    double rhs = 0.0;
    for (double v : m.data) rhs += v * v;
    rhs *= 11.0 * 11.0;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("dft2 rejects non-square input") {
    CHECK_THROWS_AS(spectral::dft2(Matrix(3, 4)), std::invalid_argument);
}

TEST_CASE("fourier entropy") {
    // delta spectrum (all-ones matrix) has zero entropy
    Matrix ones(9, 9);
    for (double& v : ones.data) v = 1.0;
    CHECK(spectral::fourier_entropy(ones) == doctest::Approx(0.0).epsilon(1e-12));

    // true addition operator at p = 97: H = ln 97
    CHECK(spectral::fourier_entropy(addition_operator(97, 5)) ==
          doctest::Approx(std::log(97.0)).epsilon(1e-10));

    // uniform spectrum (delta matrix) has entropy 2 ln p
    Matrix delta(13, 13);
    delta.at(2, 4) = 1.0;
    CHECK(spectral::fourier_entropy(delta) ==
          doctest::Approx(2.0 * std::log(13.0)).epsilon(1e-10));

    // scale invariance
    Rng rng(5);
    Matrix m = rng.normal_matrix(8, 8);
    const double h = spectral::fourier_entropy(m);
    m *= -3.7;
    CHECK(spectral::fourier_entropy(m) == doctest::Approx(h).epsilon(1e-12));

    CHECK_THROWS_AS(spectral::fourier_entropy(Matrix(5, 5)), std::invalid_argument);
}

TEST_CASE("the planted teacher's interaction matrices hit ln p exactly") {
    auto [spec, params] = testutil::make_addition_teacher(7);
    const Matrix mk = models::class_interaction_matrix(spec, params, 2);
    CHECK(spectral::fourier_entropy(mk) == doctest::Approx(std::log(7.0)).epsilon(1e-8));
}

TEST_CASE("centering") {
    Rng rng(6);
    const Matrix m = rng.normal_matrix(5, 5);
    const Matrix c = spectral::center(m);
    for (int i = 0; i < 5; ++i) {
        double row = 0.0, col = 0.0;
        for (int j = 0; j < 5; ++j) {
            row += c.at(i, j);
            col += c.at(j, i);
        }
        CHECK(std::abs(row) < 1e-12);
        CHECK(std::abs(col) < 1e-12);
    }
}

TEST_CASE("svd basics") {
    // diagonal matrix: singular values sorted descending
    const spectral::SVDResult r = spectral::svd(Matrix{{3, 0}, {0, 4}});
    CHECK(r.sigma[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(r.sigma[1] == doctest::Approx(3.0).epsilon(1e-12));

    // rank-1 outer product: sigma_2 / sigma_1 vanishes
    Rng rng(8);
    const Matrix u = rng.normal_matrix(6, 1);
    const Matrix v = rng.normal_matrix(6, 1);
    const Matrix rank1 = matmul_nt(u, v);
    const spectral::SVDResult r1 = spectral::svd(rank1);
    CHECK(spectral::sv_decay(r1)[1] < 1e-10);
}

TEST_CASE("svd against the eigenvalue oracle at n=5") {
    Rng rng(12);
    const Matrix m = rng.normal_matrix(5, 5);
    const Matrix centered = spectral::center(m);
    const spectral::SVDResult r = spectral::svd(centered);
    const std::vector<double> ev = symmetric_eigenvalues(matmul_tn(centered, centered));
    for (int i = 0; i < 5; ++i) {
        const double sigma_oracle = std::sqrt(std::max(0.0, ev[i]));
        CHECK(std::abs(r.sigma[i] - sigma_oracle) < 1e-8);
    }
}

TEST_CASE("svd reconstruction and orthonormal factors") {
    Rng rng(14);
    for (auto shape : {std::pair{7, 7}, std::pair{9, 5}, std::pair{5, 9}}) {
        const Matrix m = rng.normal_matrix(shape.first, shape.second);
        const spectral::SVDResult r = spectral::svd(m, true);
        REQUIRE(r.has_vectors);

        // reconstruction
        Matrix scaled = r.u;
        for (int i = 0; i < scaled.rows; ++i) {
            for (int j = 0; j < scaled.cols; ++j) scaled.at(i, j) *= r.sigma[j];
        }
        const Matrix rec = matmul_nt(scaled, r.v);
        CHECK(frobenius_norm(rec - m) / frobenius_norm(m) < 1e-8);

        // U^T U = I and V^T V = I
        const Matrix utu = matmul_tn(r.u, r.u);
        const Matrix vtv = matmul_tn(r.v, r.v);
        CHECK(max_abs(utu - Matrix::identity(utu.rows)) < 1e-8);
        CHECK(max_abs(vtv - Matrix::identity(vtv.rows)) < 1e-8);
    }
}

TEST_CASE("svd of a singular centered matrix keeps orthonormal U") {
    Rng rng(16);
    const Matrix m = spectral::center(rng.normal_matrix(6, 6));  // rank <= 5
    const spectral::SVDResult r = spectral::svd(m, true);
    CHECK(r.sigma.back() < 1e-10);
    const Matrix utu = matmul_tn(r.u, r.u);
    CHECK(max_abs(utu - Matrix::identity(6)) < 1e-8);
}

TEST_CASE("rank_for_energy") {
    spectral::SVDResult r;
    r.sigma = {6.0, 3.0, 1.0};
    // cumulative shares: 0.6, 0.9, 1.0
    CHECK(spectral::rank_for_energy(r, 0.5) == 1);
    CHECK(spectral::rank_for_energy(r, 0.9) == 2);
    CHECK(spectral::rank_for_energy(r, 0.95) == 3);
    CHECK(spectral::rank_for_energy(r, 1.0) == 3);
    CHECK_THROWS_AS(spectral::rank_for_energy(r, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(spectral::rank_for_energy(r, 1.5), std::invalid_argument);

    // identity: every sigma equal, 90% needs ceil(0.9 n)
    const spectral::SVDResult id = spectral::svd(Matrix::identity(10));
    CHECK(spectral::rank_for_energy(id, 0.9) == 9);
}
