#pragma once

#include <ovmot/geometry.hpp>

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace ovmot {

struct PairIndex {
    std::size_t track = 0;
    std::size_t det = 0;

    friend auto operator<=>(const PairIndex&, const PairIndex&) = default;
};

enum class GateReason { BeyondGate };

struct GateExclusion {
    PairIndex pair;
    GateReason reason = GateReason::BeyondGate;
    double distance = 0.0;
};

/// Track/detection pairs that survive gating, in (track, det) order.
struct CandidateSet {
    std::vector<PairIndex> pairs;
    std::vector<GateExclusion> excluded;

    bool contains(PairIndex p) const;
};

/// Keeps (i, j) iff the BEV distance between predicted track i and
/// detection j is <= max_dist. max_dist may be +infinity.
CandidateSet gate(std::span<const Box3D> predicted_tracks, std::span<const Box3D> detections,
                  double max_dist);

/// Dense tracks x detections cost layer. Entries are either a finite cost
/// or FORBIDDEN (disengaged).
class CostMatrix {
public:
    CostMatrix() = default;
    /// All entries FORBIDDEN.
    CostMatrix(std::size_t rows, std::size_t cols);
    /// Row-major finite costs.
    static CostMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    void set(std::size_t i, std::size_t j, double cost);
    void forbid(std::size_t i, std::size_t j);
    const std::optional<double>& at(std::size_t i, std::size_t j) const;
    bool allowed(std::size_t i, std::size_t j) const { return at(i, j).has_value(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::optional<double>> entries_;
};

using ScoreMap = std::map<PairIndex, double>;

/// C(i, j) = 1 - p(i, j) on candidate pairs, FORBIDDEN elsewhere.
/// Throws MissingScore when a candidate has no score.
CostMatrix build_cost(const ScoreMap& scores, std::size_t rows, std::size_t cols,
                      const CandidateSet& candidates);

struct Assignment {
    std::vector<PairIndex> matches; // sorted
    std::vector<std::size_t> unmatched_tracks;
    std::vector<std::size_t> unmatched_dets;

    /// Sum of matched costs accumulated in sorted match order.
    double total_cost(const CostMatrix& cost) const;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Costs closer than this (relative to max(1, |total|)) are treated as tied.
inline constexpr double kTieTolerance = 1e-12;

/// Optimal one-to-one matching over allowed entries: the match count is
/// maximized first, then total cost is minimized; among tied optima the
/// lexicographically smallest sorted match list wins. Shortest augmenting
/// path Hungarian method run per connected component of the allowed graph.
Assignment solve(const CostMatrix& cost);

/// Exhaustive reference with the same objective and tie policy.
/// Throws SizeExceeded when rows or cols exceed kBruteForceLimit.
inline constexpr std::size_t kBruteForceLimit = 8;
Assignment solve_brute(const CostMatrix& cost);

/// Demotes matches whose cost exceeds max_cost to unmatched on both sides.
Assignment threshold_filter(const Assignment& a, const CostMatrix& cost, double max_cost);

} // namespace ovmot
