#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace dlab {

// Dense row-major matrix of doubles. The single numeric carrier for the
// whole project; everything larger than a scalar lives in one of these.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> d);
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix identity(int n);
    static Matrix row_vector(std::vector<double> d);
    static Matrix col_vector(std::vector<double> d);

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
    double& operator()(int i, int j) { return at(i, j); }
    double operator()(int i, int j) const { return at(i, j); }

    const double* row_ptr(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
    double* row_ptr(int i) { return data.data() + static_cast<size_t>(i) * cols; }

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;

    bool all_finite() const;
    void assert_finite(const std::string& what) const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double c);
};

// Shape check helpers; throw std::invalid_argument naming both shapes.
void check_same_shape(const Matrix& a, const Matrix& b, const char* op);
void check_inner_dims(const Matrix& a, const Matrix& b, const char* op);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double c, const Matrix& a);

Matrix matmul(const Matrix& a, const Matrix& b);      // a * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);   // a * b^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);   // a^T * b
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hcat(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double dot(const Matrix& a, const Matrix& b);  // elementwise, shapes must match
double sum(const Matrix& a);
double max_abs(const Matrix& a);

}  // namespace dlab
