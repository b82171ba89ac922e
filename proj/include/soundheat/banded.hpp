#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace soundheat {

/// General banded matrix with an LU solve using partial pivoting.
///
/// Storage keeps kl extra superdiagonals per row for pivoting fill-in, as in
/// LAPACK's gbtrf layout (row-major here).
class BandMatrix {
public:
    BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * width_, 0.0) {}

    std::size_t size() const noexcept { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }

    bool in_band(std::size_t i, std::size_t j) const noexcept {
        return j + kl_ >= i && j <= i + ku_;
    }

    /// y = A x for the original (unfactored) band.
    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + ku_);
            for (std::size_t j = j0; j <= j1; ++j) y[i] += (*this)(i, j) * x[j];
        }
        return y;
    }

    /// Solves A x = b in place of a copy; the matrix itself is consumed by the factorization.
    std::vector<double> solve(std::vector<double> b) && {
        const std::size_t ubw = ku_ + kl_;
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t last_row = std::min(n_ - 1, k + kl_);
            std::size_t p = k;
            double best = std::abs((*this)(k, k));
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                if (std::abs((*this)(i, k)) > best) {
                    best = std::abs((*this)(i, k));
                    p = i;
                }
            }
            if (best == 0.0) throw std::runtime_error("BandMatrix::solve: singular matrix");
            const std::size_t last_col = std::min(n_ - 1, k + ubw);
            if (p != k) {
                for (std::size_t j = k; j <= last_col; ++j) std::swap((*this)(k, j), (*this)(p, j));
                std::swap(b[k], b[p]);
            }
            const double pivot = (*this)(k, k);
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                const double l = (*this)(i, k) / pivot;
                if (l == 0.0) continue;
                (*this)(i, k) = 0.0;
                for (std::size_t j = k + 1; j <= last_col; ++j) (*this)(i, j) -= l * (*this)(k, j);
                b[i] -= l * b[k];
            }
        }
        for (std::size_t k = n_; k-- > 0;) {
            double s = b[k];
            const std::size_t last_col = std::min(n_ - 1, k + ubw);
            for (std::size_t j = k + 1; j <= last_col; ++j) s -= (*this)(k, j) * b[j];
            b[k] = s / (*this)(k, k);
        }
        return b;
    }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        // column offset j - i + kl must lie in [0, width)
        return i * width_ + (j + kl_ - i);
    }

    std::size_t n_, kl_, ku_, width_;
    std::vector<double> data_;
};

}  // namespace soundheat
