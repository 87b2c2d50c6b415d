#include <ovmot/kernels/bev_distance.hpp>

#include <cmath>

namespace ovmot::kernels::scalar {

void bev_distance_matrix(std::span<const double> a_x, std::span<const double> a_y,
                         std::span<const double> b_x, std::span<const double> b_y,
                         std::span<double> out) {
    const std::size_t nb = b_x.size();
    for (std::size_t i = 0; i < a_x.size(); ++i) {
        const double ax = a_x[i];
        const double ay = a_y[i];
        double* row = out.data() + i * nb;
        for (std::size_t j = 0; j < nb; ++j) {
            const double dx = ax - b_x[j];
            const double dy = ay - b_y[j];
            row[j] = std::sqrt(dx * dx + dy * dy);
        }
    }
}

} // namespace ovmot::kernels::scalar
