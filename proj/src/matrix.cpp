#include "dlab/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace dlab {

Matrix::Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<size_t>(r) * c) {
        throw std::invalid_argument("Matrix: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = static_cast<int>(init.size());
    cols = rows > 0 ? static_cast<int>(init.begin()->size()) : 0;
    data.reserve(static_cast<size_t>(rows) * cols);
    for (const auto& row : init) {
        if (static_cast<int>(row.size()) != cols) {
            throw std::invalid_argument("Matrix: ragged initializer list");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(std::vector<double> d) {
    const int n = static_cast<int>(d.size());
    return Matrix(1, n, std::move(d));
}

Matrix Matrix::col_vector(std::vector<double> d) {
    const int n = static_cast<int>(d.size());
    return Matrix(n, 1, std::move(d));
}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Matrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::assert_finite(const std::string& what) const {
    if (!all_finite()) {
        throw std::runtime_error("non-finite values in " + what + " (" + shape_str() + ")");
    }
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

void check_inner_dims(const Matrix& a, const Matrix& b, const char* op) {
    if (a.cols != b.rows) {
        throw std::invalid_argument(std::string(op) + ": inner dimensions disagree, " +
                                    a.shape_str() + " * " + b.shape_str());
    }
}

Matrix& Matrix::operator+=(const Matrix& o) {
    check_same_shape(*this, o, "operator+=");
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    check_same_shape(*this, o, "operator-=");
    for (size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
}

Matrix& Matrix::operator*=(double c) {
    for (double& v : data) v *= c;
    return *this;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    c += b;
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    c -= b;
    return c;
}

Matrix operator*(double c, const Matrix& a) {
    Matrix out = a;
    out *= c;
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_inner_dims(a, b, "matmul");
    Matrix c(a.rows, b.cols);
    // ikj order: streams over b rows and c rows, vectorizes well.
    for (int i = 0; i < a.rows; ++i) {
        double* crow = c.row_ptr(i);
        const double* arow = a.row_ptr(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw std::invalid_argument("matmul_nt: inner dimensions disagree, " + a.shape_str() +
                                    " * " + b.shape_str() + "^T");
    }
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw std::invalid_argument("matmul_tn: inner dimensions disagree, " + a.shape_str() +
                                    "^T * " + b.shape_str());
    }
    Matrix c(a.cols, b.cols);
    for (int l = 0; l < a.rows; ++l) {
        const double* arow = a.row_ptr(l);
        const double* brow = b.row_ptr(l);
        for (int i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.row_ptr(i);
            for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "hadamard");
    Matrix c(a.rows, a.cols);
    for (size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] * b.data[i];
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix c(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) c.at(j, i) = a.at(i, j);
    }
    return c;
}

Matrix hcat(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw std::invalid_argument("hcat: row counts disagree, " + a.shape_str() + " | " +
                                    b.shape_str());
    }
    Matrix c(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* crow = c.row_ptr(i);
        const double* arow = a.row_ptr(i);
        const double* brow = b.row_ptr(i);
        for (int j = 0; j < a.cols; ++j) crow[j] = arow[j];
        for (int j = 0; j < b.cols; ++j) crow[a.cols + j] = brow[j];
    }
    return c;
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return std::sqrt(acc);
}

double dot(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "dot");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double sum(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v;
    return acc;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace dlab
