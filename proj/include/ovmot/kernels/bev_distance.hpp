#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Pairwise ground-plane center distances, the hot loop behind gating,
// neighbour search during mining and the IoU pre-filter in evaluation.
//
// Every variant evaluates sqrt(dx*dx + dy*dy) with IEEE add/mul/sqrt and no
// fused multiply-add, so results are bit-identical across variants.

namespace ovmot::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Row-major |a| x |b| output: out[i * b_x.size() + j] = |a_i - b_j|.
/// Spans of one point set must have equal sizes and out must be exactly
/// |a| * |b| long; std::invalid_argument otherwise.
void bev_distance_matrix(std::span<const double> a_x, std::span<const double> a_y,
                         std::span<const double> b_x, std::span<const double> b_y,
                         std::span<double> out);

namespace scalar {
void bev_distance_matrix(std::span<const double> a_x, std::span<const double> a_y,
                         std::span<const double> b_x, std::span<const double> b_y,
                         std::span<double> out);
}

#if defined(OVMOT_HAVE_AVX2)
namespace avx2 {
void bev_distance_matrix(std::span<const double> a_x, std::span<const double> a_y,
                         std::span<const double> b_x, std::span<const double> b_y,
                         std::span<double> out);
}
#endif

/// True when the AVX2 variant was compiled in and the CPU supports it.
bool avx2_available();

/// Variant currently serving bev_distance_matrix. Chosen on first use from
/// CPU features; OVMOT_SIMD=scalar in the environment pins the scalar path.
Isa active_isa();

/// Overrides the runtime choice. Throws std::runtime_error when the
/// requested variant is unavailable.
void force_isa(Isa isa);

} // namespace ovmot::kernels
