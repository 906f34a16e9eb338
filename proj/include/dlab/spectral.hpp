#pragma once

#include <vector>

#include "dlab/matrix.hpp"

namespace dlab::spectral {

struct CMatrix {
    Matrix re, im;
};

// Exact two-sided DFT by explicit DFT-matrix multiplication: F M F^* with
// F[j,k] = exp(-2*pi*i*j*k/p). Unnormalized convention, so Parseval reads
// sum |Mhat|^2 = p^2 * sum |M|^2.
CMatrix dft2(const Matrix& m);

struct PowerSpectrum {
    Matrix p;  // non-negative, sums to 1
    int source_class = -1;
};

PowerSpectrum normalized_power(const Matrix& m, int source_class = -1);

// Shannon entropy (nats) of the normalized DFT power spectrum; invariant to
// nonzero scaling of m. Throws on an all-zero matrix.
double fourier_entropy(const Matrix& m);

// Double centering: M - rowmean - colmean + grandmean.
Matrix center(const Matrix& m);

struct SVDResult {
    std::vector<double> sigma;  // non-increasing
    Matrix u, v;                // only filled when vectors were requested
    bool has_vectors = false;
};

// One-sided Jacobi, rotating until every column pair is orthogonal to 1e-12
// relative; throws after a bounded number of sweeps without convergence.
SVDResult svd(const Matrix& m, bool want_vectors = false);

std::vector<double> sv_decay(const SVDResult& r);  // sigma_i / sigma_1

// Smallest k whose leading singular values carry a tau share of the total
// spectrum mass (sum_{i<=k} sigma_i >= tau * sum sigma).
int rank_for_energy(const SVDResult& r, double tau);

}  // namespace dlab::spectral
