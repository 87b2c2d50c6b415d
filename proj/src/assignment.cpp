#include <ovmot/assignment.hpp>

#include <ovmot/errors.hpp>
#include <ovmot/kernels/bev_distance.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ovmot {

bool CandidateSet::contains(PairIndex p) const {
    return std::binary_search(pairs.begin(), pairs.end(), p);
}

CandidateSet gate(std::span<const Box3D> predicted_tracks, std::span<const Box3D> detections,
                  double max_dist) {
    if (!(max_dist > 0.0)) {
        throw ConfigError("gate distance must be > 0");
    }
    CandidateSet out;
    const std::size_t m = predicted_tracks.size();
    const std::size_t n = detections.size();
    if (m == 0 || n == 0) {
        return out;
    }
    std::vector<double> tx(m), ty(m), dx(n), dy(n), dist(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        tx[i] = predicted_tracks[i].x();
        ty[i] = predicted_tracks[i].y();
    }
    for (std::size_t j = 0; j < n; ++j) {
        dx[j] = detections[j].x();
        dy[j] = detections[j].y();
    }
    kernels::bev_distance_matrix(tx, ty, dx, dy, dist);
    out.pairs.reserve(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dist[i * n + j];
            if (d <= max_dist) {
                out.pairs.push_back({i, j});
            } else {
                out.excluded.push_back({{i, j}, GateReason::BeyondGate, d});
            }
        }
    }
    return out;
}

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), entries_(rows * cols) {}

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    CostMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) {
            throw ConfigError("cost matrix rows differ in length");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            m.set(i, j, rows[i][j]);
        }
    }
    return m;
}

void CostMatrix::set(std::size_t i, std::size_t j, double cost) {
    if (!std::isfinite(cost)) {
        throw ConfigError("cost entries must be finite; use forbid() instead");
    }
    entries_.at(i * cols_ + j) = cost;
}

void CostMatrix::forbid(std::size_t i, std::size_t j) { entries_.at(i * cols_ + j).reset(); }

const std::optional<double>& CostMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) {
        throw std::out_of_range("cost matrix index out of range");
    }
    return entries_[i * cols_ + j];
}

CostMatrix build_cost(const ScoreMap& scores, std::size_t rows, std::size_t cols,
                      const CandidateSet& candidates) {
    CostMatrix m(rows, cols);
    for (const auto& pair : candidates.pairs) {
        const auto it = scores.find(pair);
        if (it == scores.end()) {
            throw MissingScore("no score for candidate pair (" + std::to_string(pair.track) + ", " +
                               std::to_string(pair.det) + ")");
        }
        m.set(pair.track, pair.det, 1.0 - it->second);
    }
    return m;
}

double Assignment::total_cost(const CostMatrix& cost) const {
    double total = 0.0;
    for (const auto& m : matches) {
        total += *cost.at(m.track, m.det);
    }
    return total;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool within_tie(double cost, double optimum) {
    return cost <= optimum + kTieTolerance * std::max(1.0, std::fabs(optimum));
}

// Dense view of one connected component of the allowed graph.
struct Component {
    std::vector<std::size_t> rows; // global indices, ascending
    std::vector<std::size_t> cols;
    std::vector<double> cost;      // rows x cols, NaN when forbidden
    double base = 0.0;             // subtracted so every allowed weight is >= 0

    std::size_t r() const { return rows.size(); }
    std::size_t c() const { return cols.size(); }
    bool allowed(std::size_t i, std::size_t j) const { return !std::isnan(cost[i * c() + j]); }
    double at(std::size_t i, std::size_t j) const { return cost[i * c() + j]; }
};

struct LocalSolution {
    std::vector<int> row_to_col;
    std::size_t count = 0;
    double cost = 0.0;
};

double local_cost(const Component& comp, const std::vector<int>& row_to_col) {
    double total = 0.0;
    for (std::size_t i = 0; i < row_to_col.size(); ++i) {
        if (row_to_col[i] >= 0) {
            total += comp.at(i, static_cast<std::size_t>(row_to_col[i]));
        }
    }
    return total;
}

// Successive shortest augmenting paths with Johnson potentials. Each
// augmentation keeps the current k-matching minimum cost among k-matchings,
// so stopping when no augmenting path exists yields a minimum-cost
// maximum-cardinality matching over the active rows and columns.
LocalSolution shortest_augmenting_paths(const Component& comp, const std::vector<char>& row_on,
                                        const std::vector<char>& col_on) {
    const std::size_t r = comp.r();
    const std::size_t c = comp.c();
    // Nodes: 0 = source, 1..r rows, r+1..r+c cols, r+c+1 = sink.
    const std::size_t n_nodes = r + c + 2;
    const std::size_t src = 0;
    const std::size_t sink = r + c + 1;
    auto row_node = [](std::size_t i) { return 1 + i; };
    auto col_node = [r](std::size_t j) { return 1 + r + j; };

    std::vector<int> row_match(r, -1);
    std::vector<int> col_match(c, -1);
    std::vector<double> phi(n_nodes, 0.0);
    std::vector<double> dist(n_nodes);
    std::vector<std::size_t> parent(n_nodes);
    std::vector<char> done(n_nodes);

    auto weight = [&](std::size_t i, std::size_t j) { return comp.at(i, j) - comp.base; };

    for (;;) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(done.begin(), done.end(), 0);
        dist[src] = 0.0;
        for (;;) {
            std::size_t u = n_nodes;
            double best = kInf;
            for (std::size_t v = 0; v < n_nodes; ++v) {
                if (!done[v] && dist[v] < best) {
                    best = dist[v];
                    u = v;
                }
            }
            if (u == n_nodes || u == sink) {
                break;
            }
            done[u] = 1;
            auto relax = [&](std::size_t v, double edge_cost) {
                const double reduced = std::max(0.0, edge_cost + phi[u] - phi[v]);
                if (dist[u] + reduced < dist[v]) {
                    dist[v] = dist[u] + reduced;
                    parent[v] = u;
                }
            };
            if (u == src) {
                for (std::size_t i = 0; i < r; ++i) {
                    if (row_on[i] && row_match[i] < 0) {
                        relax(row_node(i), 0.0);
                    }
                }
            } else if (u <= r) {
                const std::size_t i = u - 1;
                for (std::size_t j = 0; j < c; ++j) {
                    if (col_on[j] && comp.allowed(i, j) && row_match[i] != static_cast<int>(j)) {
                        relax(col_node(j), weight(i, j));
                    }
                }
            } else {
                const std::size_t j = u - 1 - r;
                if (col_match[j] >= 0) {
                    const auto i = static_cast<std::size_t>(col_match[j]);
                    relax(row_node(i), -weight(i, j));
                } else {
                    relax(sink, 0.0);
                }
            }
        }
        if (dist[sink] == kInf) {
            break;
        }
        for (std::size_t v = 0; v < n_nodes; ++v) {
            phi[v] += std::min(dist[v], dist[sink]);
        }
        // Walk sink <- col <- row <- col ... <- row <- source, flipping edges.
        std::size_t v = parent[sink];
        while (v != src) {
            const std::size_t j = v - 1 - r;
            const std::size_t row_v = parent[v];
            const std::size_t i = row_v - 1;
            const int previous = row_match[i];
            row_match[i] = static_cast<int>(j);
            col_match[j] = static_cast<int>(i);
            if (previous < 0) {
                break; // reached a free row, whose parent is the source
            }
            // Row i left column `previous`, which is the next column on the path.
            v = parent[row_v];
        }
    }

    LocalSolution out;
    out.row_to_col = std::move(row_match);
    out.count = static_cast<std::size_t>(
        std::count_if(out.row_to_col.begin(), out.row_to_col.end(), [](int j) { return j >= 0; }));
    out.cost = local_cost(comp, out.row_to_col);
    return out;
}

// Greedy row-by-row refinement to the lexicographically smallest optimum.
std::vector<int> solve_component(const Component& comp) {
    const std::size_t r = comp.r();
    const std::size_t c = comp.c();
    std::vector<char> row_on(r, 1);
    std::vector<char> col_on(c, 1);
    LocalSolution current = shortest_augmenting_paths(comp, row_on, col_on);
    const std::size_t k = current.count;
    const double optimum = current.cost;

    std::vector<int> fixed(r, -1);
    std::size_t fixed_count = 0;
    for (std::size_t i = 0; i < r; ++i) {
        int chosen = -1;
        for (std::size_t j = 0; j < c; ++j) {
            if (!col_on[j] || !comp.allowed(i, j)) {
                continue;
            }
            if (current.row_to_col[i] == static_cast<int>(j)) {
                chosen = static_cast<int>(j);
                break;
            }
            row_on[i] = 0;
            col_on[j] = 0;
            LocalSolution rest = shortest_augmenting_paths(comp, row_on, col_on);
            std::vector<int> candidate = rest.row_to_col;
            for (std::size_t a = 0; a < r; ++a) {
                if (fixed[a] >= 0) {
                    candidate[a] = fixed[a];
                }
            }
            candidate[i] = static_cast<int>(j);
            const std::size_t count = fixed_count + 1 + rest.count;
            if (count == k && within_tie(local_cost(comp, candidate), optimum)) {
                chosen = static_cast<int>(j);
                current.row_to_col = std::move(candidate);
                break;
            }
            row_on[i] = 1;
            col_on[j] = 1;
        }
        row_on[i] = 0;
        if (chosen >= 0) {
            fixed[i] = chosen;
            col_on[static_cast<std::size_t>(chosen)] = 0;
            ++fixed_count;
        }
    }
    return fixed;
}

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

Assignment finalize(std::vector<PairIndex> matches, std::size_t rows, std::size_t cols) {
    std::sort(matches.begin(), matches.end());
    Assignment a;
    std::vector<char> row_used(rows, 0);
    std::vector<char> col_used(cols, 0);
    for (const auto& m : matches) {
        row_used[m.track] = 1;
        col_used[m.det] = 1;
    }
    for (std::size_t i = 0; i < rows; ++i) {
        if (!row_used[i]) {
            a.unmatched_tracks.push_back(i);
        }
    }
    for (std::size_t j = 0; j < cols; ++j) {
        if (!col_used[j]) {
            a.unmatched_dets.push_back(j);
        }
    }
    a.matches = std::move(matches);
    return a;
}

} // namespace

Assignment solve(const CostMatrix& cost) {
    const std::size_t m = cost.rows();
    const std::size_t n = cost.cols();
    DisjointSets sets(m + n);
    std::vector<char> has_edge(m + n, 0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (cost.allowed(i, j)) {
                sets.unite(i, m + j);
                has_edge[i] = has_edge[m + j] = 1;
            }
        }
    }

    std::map<std::size_t, Component> components;
    for (std::size_t i = 0; i < m; ++i) {
        if (has_edge[i]) {
            components[sets.find(i)].rows.push_back(i);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (has_edge[m + j]) {
            components[sets.find(m + j)].cols.push_back(j);
        }
    }

    std::vector<PairIndex> matches;
    for (auto& [root, comp] : components) {
        comp.cost.assign(comp.r() * comp.c(), std::numeric_limits<double>::quiet_NaN());
        comp.base = kInf;
        for (std::size_t a = 0; a < comp.r(); ++a) {
            for (std::size_t b = 0; b < comp.c(); ++b) {
                if (const auto& e = cost.at(comp.rows[a], comp.cols[b])) {
                    comp.cost[a * comp.c() + b] = *e;
                    comp.base = std::min(comp.base, *e);
                }
            }
        }
        const std::vector<int> local = solve_component(comp);
        for (std::size_t a = 0; a < local.size(); ++a) {
            if (local[a] >= 0) {
                matches.push_back({comp.rows[a], comp.cols[static_cast<std::size_t>(local[a])]});
            }
        }
    }
    return finalize(std::move(matches), m, n);
}

namespace {

struct BruteSearch {
    explicit BruteSearch(const CostMatrix& c) : cost(c), col_used(c.cols(), 0) {}

    const CostMatrix& cost;
    std::vector<PairIndex> current;
    std::vector<char> col_used;
    std::size_t best_count = 0;
    double best_cost = kInf;
    bool selecting = false; // second pass: pick lexicographic minimum within tolerance
    std::optional<std::vector<PairIndex>> chosen;

    double current_cost() const {
        double total = 0.0;
        for (const auto& m : current) {
            total += *cost.at(m.track, m.det);
        }
        return total;
    }

    void leaf() {
        const std::size_t count = current.size();
        const double total = current_cost();
        if (!selecting) {
            if (count > best_count || (count == best_count && total < best_cost)) {
                best_count = count;
                best_cost = total;
            }
            return;
        }
        if (count == best_count && within_tie(total, best_cost) &&
            (!chosen || current < *chosen)) {
            chosen = current;
        }
    }

    void recurse(std::size_t row) {
        if (row == cost.rows()) {
            leaf();
            return;
        }
        for (std::size_t j = 0; j < cost.cols(); ++j) {
            if (!col_used[j] && cost.allowed(row, j)) {
                col_used[j] = 1;
                current.push_back({row, j});
                recurse(row + 1);
                current.pop_back();
                col_used[j] = 0;
            }
        }
        recurse(row + 1);
    }
};

} // namespace

Assignment solve_brute(const CostMatrix& cost) {
    if (cost.rows() > kBruteForceLimit || cost.cols() > kBruteForceLimit) {
        throw SizeExceeded("brute-force assignment limited to " + std::to_string(kBruteForceLimit) +
                           "x" + std::to_string(kBruteForceLimit));
    }
    BruteSearch search(cost);
    search.recurse(0);
    search.selecting = true;
    search.recurse(0);
    return finalize(search.chosen.value_or(std::vector<PairIndex>{}), cost.rows(), cost.cols());
}

Assignment threshold_filter(const Assignment& a, const CostMatrix& cost, double max_cost) {
    if (!(max_cost >= 0.0 && max_cost <= 1.0)) {
        throw ConfigError("max_cost must lie in [0, 1]");
    }
    std::vector<PairIndex> kept;
    for (const auto& m : a.matches) {
        if (*cost.at(m.track, m.det) <= max_cost) {
            kept.push_back(m);
        }
    }
    return finalize(std::move(kept), cost.rows(), cost.cols());
}

} // namespace ovmot
