#include "noisegate/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace noisegate::kernels {

namespace {

// Below this many output rows the fork/join overhead dominates.
constexpr std::ptrdiff_t kParallelMinRows = 256;

inline void affine_row(std::span<const double> in, const Matrix& w, std::span<const double> b, bool relu,
                       std::span<double> out) {
    const std::size_t in_dim = in.size();
    for (std::size_t o = 0; o < out.size(); ++o) {
        const auto wr = w.row(o);
        double acc = b[o];
        for (std::size_t c = 0; c < in_dim; ++c) acc += wr[c] * in[c];
        out[o] = relu && acc < 0.0 ? 0.0 : acc;
    }
}

inline double sq_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double d = a[c] - b[c];
        acc += d * d;
    }
    return acc;
}

// k nearest of `row` given its distance row; ordering by (distance, index).
std::vector<std::size_t> select_nearest(std::span<const double> dist, std::size_t self, std::size_t k,
                                        std::vector<std::size_t>& scratch) {
    scratch.clear();
    for (std::size_t j = 0; j < dist.size(); ++j)
        if (j != self) scratch.push_back(j);
    auto closer = [&](std::size_t a, std::size_t b) {
        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    };
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end(),
                      closer);
    return {scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k)};
}

void check_affine(const Matrix& x, const Matrix& w, std::span<const double> b) {
    if (x.cols() != w.cols()) throw std::invalid_argument("affine: input dimension mismatch");
    if (b.size() != w.rows()) throw std::invalid_argument("affine: bias dimension mismatch");
}

void check_knn(const Matrix& x, std::size_t k) {
    if (k < 1 || k >= x.rows()) throw std::invalid_argument("knn: need 1 <= k < number of points");
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b, bool relu) {
    check_affine(x, w, b);
    Matrix out(x.rows(), w.rows());
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static) if (n >= kParallelMinRows)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        affine_row(x.row(static_cast<std::size_t>(i)), w, b, relu, out.row(static_cast<std::size_t>(i)));
    return out;
}

Matrix pairwise_sq_distances(const Matrix& x) {
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
    Matrix out(x.rows(), x.rows());
#pragma omp parallel for schedule(dynamic, 16) if (n >= kParallelMinRows)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto a = x.row(static_cast<std::size_t>(i));
        auto dst = out.row(static_cast<std::size_t>(i));
        for (std::ptrdiff_t j = 0; j < n; ++j) dst[static_cast<std::size_t>(j)] =
            sq_distance(a, x.row(static_cast<std::size_t>(j)));
    }
    return out;
}

std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k) {
    check_knn(x, k);
    const Matrix dist = pairwise_sq_distances(x);
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
    std::vector<std::vector<std::size_t>> out(x.rows());
#pragma omp parallel if (n >= kParallelMinRows)
    {
        std::vector<std::size_t> scratch;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto row = static_cast<std::size_t>(i);
            out[row] = select_nearest(dist.row(row), row, k, scratch);
        }
    }
    return out;
}

namespace serial {

Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b, bool relu) {
    check_affine(x, w, b);
    Matrix out(x.rows(), w.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) affine_row(x.row(i), w, b, relu, out.row(i));
    return out;
}

Matrix pairwise_sq_distances(const Matrix& x) {
    Matrix out(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.rows(); ++j) out(i, j) = sq_distance(x.row(i), x.row(j));
    return out;
}

std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k) {
    check_knn(x, k);
    const Matrix dist = pairwise_sq_distances(x);
    std::vector<std::vector<std::size_t>> out(x.rows());
    std::vector<std::size_t> scratch;
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = select_nearest(dist.row(i), i, k, scratch);
    return out;
}

}  // namespace serial

}  // namespace noisegate::kernels
