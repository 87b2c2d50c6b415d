#include <ovmot/kernels/bev_distance.hpp>

#include <cmath>
#include <immintrin.h>

namespace ovmot::kernels::avx2 {

void bev_distance_matrix(std::span<const double> a_x, std::span<const double> a_y,
                         std::span<const double> b_x, std::span<const double> b_y,
                         std::span<double> out) {
    const std::size_t nb = b_x.size();
    const std::size_t nb4 = nb & ~std::size_t{3};
    for (std::size_t i = 0; i < a_x.size(); ++i) {
        const __m256d ax = _mm256_set1_pd(a_x[i]);
        const __m256d ay = _mm256_set1_pd(a_y[i]);
        double* row = out.data() + i * nb;
        std::size_t j = 0;
        for (; j < nb4; j += 4) {
            const __m256d dx = _mm256_sub_pd(ax, _mm256_loadu_pd(b_x.data() + j));
            const __m256d dy = _mm256_sub_pd(ay, _mm256_loadu_pd(b_y.data() + j));
            const __m256d sq = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
            _mm256_storeu_pd(row + j, _mm256_sqrt_pd(sq));
        }
        for (; j < nb; ++j) {
            const double dx = a_x[i] - b_x[j];
            const double dy = a_y[i] - b_y[j];
            row[j] = std::sqrt(dx * dx + dy * dy);
        }
    }
}

} // namespace ovmot::kernels::avx2
