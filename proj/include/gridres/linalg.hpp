#pragma once

// Dense vector/matrix helpers and a symmetric-indefinite LDL^T factorization
// with Bunch-Kaufman pivoting and inertia reporting. Sized for the problems
// in this project (a few hundred variables), so everything is dense.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gridres {

using Vec = std::vector<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  // y = A x
  Vec apply(const Vec& x) const {
    if (x.size() != cols_) throw std::invalid_argument("Matrix::apply: size mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double acc = 0.0;
      const double* row = &data_[i * cols_];
      for (std::size_t j = 0; j < cols_; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
    return y;
  }

  // y = A^T x
  Vec apply_transposed(const Vec& x) const {
    if (x.size() != rows_) throw std::invalid_argument("Matrix::apply_transposed: size mismatch");
    Vec y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* row = &data_[i * cols_];
      for (std::size_t j = 0; j < cols_; ++j) y[j] += row[j] * xi;
    }
    return y;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double inf_norm(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double one_norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

// LDL^T of a symmetric matrix with Bunch-Kaufman partial pivoting. Only the
// lower triangle of the input is referenced. Row/column interchanges are
// recorded as one up-front permutation, so P A P^T = L D L^T.
class LdltFactor {
 public:
  explicit LdltFactor(const Matrix& a) : n_(a.rows()) {
    if (a.rows() != a.cols()) throw std::invalid_argument("LdltFactor: matrix not square");
    a_ = a;
    perm_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) perm_[i] = static_cast<int>(i);
    block_.assign(n_, 1);
    factorize();
  }

  const Inertia& inertia() const { return inertia_; }
  bool singular() const { return inertia_.zero > 0; }

  Vec solve(const Vec& b) const {
    if (b.size() != n_) throw std::invalid_argument("LdltFactor::solve: size mismatch");
    Vec y(n_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = b[perm_[i]];

    // forward: L z = y, unit lower triangular, 2x2 blocks contribute two columns
    for (std::size_t k = 0; k < n_;) {
      if (block_[k] == 1) {
        const double yk = y[k];
        if (yk != 0.0)
          for (std::size_t i = k + 1; i < n_; ++i) y[i] -= a_(i, k) * yk;
        ++k;
      } else {
        const double y1 = y[k], y2 = y[k + 1];
        for (std::size_t i = k + 2; i < n_; ++i) y[i] -= a_(i, k) * y1 + a_(i, k + 1) * y2;
        k += 2;
      }
    }

    // block-diagonal solve
    for (std::size_t k = 0; k < n_;) {
      if (block_[k] == 1) {
        const double d = a_(k, k);
        y[k] = (d != 0.0) ? y[k] / d : 0.0;
        ++k;
      } else {
        const double d11 = a_(k, k), d21 = a_(k + 1, k), d22 = a_(k + 1, k + 1);
        const double det = d11 * d22 - d21 * d21;
        const double b1 = y[k], b2 = y[k + 1];
        if (det != 0.0) {
          y[k] = (d22 * b1 - d21 * b2) / det;
          y[k + 1] = (d11 * b2 - d21 * b1) / det;
        } else {
          y[k] = y[k + 1] = 0.0;
        }
        k += 2;
      }
    }

    // backward: L^T x = z
    for (std::size_t k = n_; k-- > 0;) {
      if (block_[k] == 0) {
        // second column of a 2x2 block starting at k-1
        double acc2 = y[k];
        for (std::size_t i = k + 1; i < n_; ++i) acc2 -= a_(i, k) * y[i];
        y[k] = acc2;
        double acc1 = y[k - 1];
        for (std::size_t i = k + 1; i < n_; ++i) acc1 -= a_(i, k - 1) * y[i];
        y[k - 1] = acc1;
        --k;
      } else {
        double acc = y[k];
        for (std::size_t i = k + 1; i < n_; ++i) acc -= a_(i, k) * y[i];
        y[k] = acc;
      }
    }

    Vec x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = y[i];
    return x;
  }

 private:
  // symmetric interchange of rows/cols p < q using lower-triangle storage
  void swap_sym(std::size_t p, std::size_t q) {
    if (p == q) return;
    for (std::size_t j = 0; j < p; ++j) std::swap(a_(p, j), a_(q, j));
    for (std::size_t i = p + 1; i < q; ++i) std::swap(a_(i, p), a_(q, i));
    for (std::size_t i = q + 1; i < n_; ++i) std::swap(a_(i, p), a_(i, q));
    std::swap(a_(p, p), a_(q, q));
    std::swap(perm_[p], perm_[q]);
  }

  void factorize() {
    const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j <= i; ++j) scale = std::max(scale, std::abs(a_(i, j)));
    // barrier systems legitimately span ~1e10 in magnitude, so only pivots
    // far below any representable contribution count as zero
    const double tiny = scale * 1e-20 + 1e-300;

    Vec col1, col2;
    std::size_t k = 0;
    while (k < n_) {
      const double abs_akk = std::abs(a_(k, k));
      std::size_t imax = k;
      double colmax = 0.0;
      for (std::size_t i = k + 1; i < n_; ++i) {
        const double v = std::abs(a_(i, k));
        if (v > colmax) {
          colmax = v;
          imax = i;
        }
      }

      if (std::max(abs_akk, colmax) <= tiny) {
        ++inertia_.zero;
        a_(k, k) = 0.0;
        for (std::size_t i = k + 1; i < n_; ++i) a_(i, k) = 0.0;
        block_[k] = 1;
        ++k;
        continue;
      }

      int kstep = 1;
      if (abs_akk < alpha * colmax) {
        double rowmax = 0.0;
        for (std::size_t j = k; j < n_; ++j) {
          if (j == imax) continue;
          const double v = (j < imax) ? std::abs(a_(imax, j)) : std::abs(a_(j, imax));
          rowmax = std::max(rowmax, v);
        }
        if (abs_akk * rowmax >= alpha * colmax * colmax) {
          kstep = 1;
        } else if (std::abs(a_(imax, imax)) >= alpha * rowmax) {
          kstep = 1;
          swap_sym(k, imax);
        } else {
          kstep = 2;
          swap_sym(k + 1, imax);
        }
      }

      if (kstep == 1) {
        const double d = a_(k, k);
        record_1x1(d, tiny);
        block_[k] = 1;
        const std::size_t m = n_ - k - 1;
        col1.resize(m);
        for (std::size_t i = 0; i < m; ++i) col1[i] = a_(k + 1 + i, k);
        for (std::size_t i = 0; i < m; ++i) {
          const double li = col1[i] / d;
          a_(k + 1 + i, k) = li;
          if (li != 0.0)
            for (std::size_t j = 0; j <= i; ++j) a_(k + 1 + i, k + 1 + j) -= li * col1[j];
        }
        ++k;
      } else {
        const double d11 = a_(k, k), d21 = a_(k + 1, k), d22 = a_(k + 1, k + 1);
        const double det = d11 * d22 - d21 * d21;
        record_2x2(d11, d22, det, tiny);
        block_[k] = 2;
        block_[k + 1] = 0;  // continuation marker
        const std::size_t m = n_ - k - 2;
        col1.resize(m);
        col2.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
          col1[i] = a_(k + 2 + i, k);
          col2[i] = a_(k + 2 + i, k + 1);
        }
        for (std::size_t i = 0; i < m; ++i) {
          const double l1 = (d22 * col1[i] - d21 * col2[i]) / det;
          const double l2 = (d11 * col2[i] - d21 * col1[i]) / det;
          a_(k + 2 + i, k) = l1;
          a_(k + 2 + i, k + 1) = l2;
          for (std::size_t j = 0; j <= i; ++j)
            a_(k + 2 + i, k + 2 + j) -= l1 * col1[j] + l2 * col2[j];
        }
        k += 2;
      }
    }
  }

  void record_1x1(double d, double tiny) {
    if (std::abs(d) <= tiny)
      ++inertia_.zero;
    else if (d > 0.0)
      ++inertia_.positive;
    else
      ++inertia_.negative;
  }

  void record_2x2(double d11, double d22, double det, double tiny) {
    if (std::abs(det) <= tiny * tiny) {
      ++inertia_.zero;
      const double tr = d11 + d22;
      if (std::abs(tr) <= tiny)
        ++inertia_.zero;
      else if (tr > 0.0)
        ++inertia_.positive;
      else
        ++inertia_.negative;
    } else if (det < 0.0) {
      ++inertia_.positive;
      ++inertia_.negative;
    } else if (d11 + d22 > 0.0) {
      inertia_.positive += 2;
    } else {
      inertia_.negative += 2;
    }
  }

  Matrix a_;
  std::size_t n_ = 0;
  std::vector<int> perm_;
  std::vector<int> block_;
  Inertia inertia_;
};

}  // namespace gridres
