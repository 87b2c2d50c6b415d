#include <ovmot/geometry.hpp>

#include <ovmot/errors.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace ovmot {

double normalize_yaw(double yaw) {
    if (!std::isfinite(yaw)) {
        throw InvalidBox("yaw is not finite");
    }
    if (yaw > -kPi && yaw <= kPi) {
        return yaw;
    }
    double r = std::remainder(yaw, 2.0 * kPi);
    if (r <= -kPi) {
        r += 2.0 * kPi;
    }
    return r;
}

double yaw_difference(double a, double b) {
    const double d = std::fabs(normalize_yaw(a) - normalize_yaw(b));
    return std::min(d, 2.0 * kPi - d);
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw InvalidBox(what);
    }
}

} // namespace

Box3D::Box3D(double x, double y, double z, double l, double w, double h, double yaw,
             double score)
    : x_(x), y_(y), z_(z), l_(l), w_(w), h_(h), yaw_(0.0), score_(score) {
    require(std::isfinite(x) && std::isfinite(y) && std::isfinite(z), "box center must be finite");
    require(std::isfinite(l) && l > 0.0, "box length must be > 0");
    require(std::isfinite(w) && w > 0.0, "box width must be > 0");
    require(std::isfinite(h) && h > 0.0, "box height must be > 0");
    require(score >= 0.0 && score <= 1.0, "box score must lie in [0, 1]");
    yaw_ = normalize_yaw(yaw);
}

Box3D Box3D::from_array(const std::array<double, 7>& v, double score) {
    return Box3D(v[0], v[1], v[2], v[3], v[4], v[5], v[6], score);
}

std::array<double, 7> Box3D::to_array() const {
    return {x_, y_, z_, l_, w_, h_, yaw_};
}

Box3D Box3D::with_center(double x, double y, double z) const {
    return Box3D(x, y, z, l_, w_, h_, yaw_, score_);
}

Box3D Box3D::with_score(double score) const {
    return Box3D(x_, y_, z_, l_, w_, h_, yaw_, score);
}

std::array<Point2, 4> Box3D::footprint() const {
    const double c = std::cos(yaw_);
    const double s = std::sin(yaw_);
    const double hl = 0.5 * l_;
    const double hw = 0.5 * w_;
    // Local corners (+l,+w) -> (-l,+w) -> (-l,-w) -> (+l,-w) is CCW.
    const std::array<Point2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
    std::array<Point2, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        out[i] = {x_ + c * local[i].x - s * local[i].y, y_ + s * local[i].x + c * local[i].y};
    }
    return out;
}

double volume(const Box3D& b) { return b.l() * b.w() * b.h(); }

namespace {

using Polygon = std::vector<Point2>;

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double polygon_area(const Polygon& poly) {
    if (poly.size() < 3) {
        return 0.0;
    }
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        twice += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::fabs(twice);
}

// Clips `subject` to the left half-plane of the directed edge e0 -> e1.
Polygon clip_half_plane(const Polygon& subject, const Point2& e0, const Point2& e1) {
    Polygon out;
    out.reserve(subject.size() + 2);
    const std::size_t n = subject.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& cur = subject[i];
        const Point2& nxt = subject[(i + 1) % n];
        const double dc = cross(e0, e1, cur);
        const double dn = cross(e0, e1, nxt);
        if (dc >= 0.0) {
            out.push_back(cur);
        }
        if ((dc >= 0.0) != (dn >= 0.0)) {
            const double t = dc / (dc - dn);
            out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    return out;
}

bool same_geometry(const Box3D& a, const Box3D& b) { return a.to_array() == b.to_array(); }

// Evaluate pairwise quantities in a canonical argument order so results are
// bit-identical under swapping.
std::pair<const Box3D*, const Box3D*> canonical(const Box3D& a, const Box3D& b) {
    if (b.to_array() < a.to_array()) {
        return {&b, &a};
    }
    return {&a, &b};
}

double clipped_area(const Box3D& a, const Box3D& b) {
    const auto fa = a.footprint();
    const auto fb = b.footprint();
    Polygon poly(fa.begin(), fa.end());
    for (std::size_t i = 0; i < 4 && !poly.empty(); ++i) {
        poly = clip_half_plane(poly, fb[i], fb[(i + 1) % 4]);
    }
    const double area = polygon_area(poly);
    return area < kAreaEpsilon ? 0.0 : area;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

double intersection_area_bev(const Box3D& a, const Box3D& b) {
    if (center_distance_bev(a, b) > overlap_radius_bev(a, b)) {
        return 0.0;
    }
    const auto [p, q] = canonical(a, b);
    return std::min({clipped_area(*p, *q), p->l() * p->w(), q->l() * q->w()});
}

double iou_bev(const Box3D& a, const Box3D& b) {
    if (same_geometry(a, b)) {
        return 1.0;
    }
    const double inter = intersection_area_bev(a, b);
    if (inter <= 0.0) {
        return 0.0;
    }
    const double uni = a.l() * a.w() + b.l() * b.w() - inter;
    return clamp_unit(inter / uni);
}

double iou_3d(const Box3D& a, const Box3D& b) {
    if (same_geometry(a, b)) {
        return 1.0;
    }
    const double dz = std::min(a.z_max(), b.z_max()) - std::max(a.z_min(), b.z_min());
    if (dz <= 0.0) {
        return 0.0;
    }
    const double inter_area = intersection_area_bev(a, b);
    if (inter_area <= 0.0) {
        return 0.0;
    }
    const double inter = inter_area * dz;
    const double uni = volume(a) + volume(b) - inter;
    return clamp_unit(inter / uni);
}

// Same expression as the distance-matrix kernels so gating agrees bit for bit.
double center_distance_bev(const Box3D& a, const Box3D& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    return std::sqrt(dx * dx + dy * dy);
}

double overlap_radius_bev(const Box3D& a, const Box3D& b) {
    return 0.5 * (std::hypot(a.l(), a.w()) + std::hypot(b.l(), b.w()));
}

void JitterParams::validate() const {
    if (!(sigma_center >= 0.0) || !(sigma_size_log >= 0.0) || !(sigma_yaw >= 0.0)) {
        throw ConfigError("jitter sigmas must be >= 0");
    }
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

double standard_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

Box3D jitter(const Box3D& b, const JitterParams& p, Rng& rng) {
    p.validate();
    const double dx = p.sigma_center * standard_normal(rng);
    const double dy = p.sigma_center * standard_normal(rng);
    const double dz = p.sigma_center * standard_normal(rng);
    const double sl = std::exp(p.sigma_size_log * standard_normal(rng));
    const double sw = std::exp(p.sigma_size_log * standard_normal(rng));
    const double sh = std::exp(p.sigma_size_log * standard_normal(rng));
    const double dyaw = p.sigma_yaw * standard_normal(rng);
    return Box3D(b.x() + dx, b.y() + dy, b.z() + dz, b.l() * sl, b.w() * sw, b.h() * sh,
                 b.yaw() + dyaw, b.score());
}

} // namespace ovmot
