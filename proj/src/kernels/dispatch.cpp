#include <ovmot/kernels/bev_distance.hpp>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ovmot::kernels {

namespace {

using DistanceFn = void (*)(std::span<const double>, std::span<const double>,
                            std::span<const double>, std::span<const double>, std::span<double>);

bool cpu_has_avx2() {
#if defined(OVMOT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa detect() {
    if (const char* env = std::getenv("OVMOT_SIMD"); env && std::string(env) == "scalar") {
        return Isa::Scalar;
    }
    return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

DistanceFn select(Isa isa) {
#if defined(OVMOT_HAVE_AVX2)
    if (isa == Isa::Avx2) {
        return &avx2::bev_distance_matrix;
    }
#endif
    (void)isa;
    return &scalar::bev_distance_matrix;
}

struct Dispatch {
    std::atomic<Isa> isa;
    std::atomic<DistanceFn> fn;
    Dispatch() : isa(detect()), fn(select(isa.load())) {}
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

bool avx2_available() { return cpu_has_avx2(); }

Isa active_isa() { return dispatch().isa.load(); }

void force_isa(Isa isa) {
    if (isa == Isa::Avx2 && !avx2_available()) {
        throw std::runtime_error("AVX2 kernels are not available on this build/CPU");
    }
    auto& d = dispatch();
    d.fn.store(select(isa));
    d.isa.store(isa);
}

void bev_distance_matrix(std::span<const double> a_x, std::span<const double> a_y,
                         std::span<const double> b_x, std::span<const double> b_y,
                         std::span<double> out) {
    if (a_x.size() != a_y.size() || b_x.size() != b_y.size()) {
        throw std::invalid_argument("bev_distance_matrix: x/y spans differ in length");
    }
    if (out.size() != a_x.size() * b_x.size()) {
        throw std::invalid_argument("bev_distance_matrix: output span has the wrong size");
    }
    dispatch().fn.load()(a_x, a_y, b_x, b_y, out);
}

} // namespace ovmot::kernels
