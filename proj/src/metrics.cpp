#include <ovmot/metrics.hpp>

#include <ovmot/assignment.hpp>
#include <ovmot/errors.hpp>
#include <ovmot/kernels/bev_distance.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace ovmot {

void EvalConfig::validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        throw ConfigError("iou_threshold must lie in (0, 1)");
    }
    if (recall_points < 2) {
        throw ConfigError("recall_points must be >= 2");
    }
}

EvalSequence make_eval_sequence(const SceneFile& scene, std::span<const TrackingRecord> records) {
    EvalSequence seq;
    std::map<FrameIndex, std::size_t> index;
    for (const auto& f : scene.frames) {
        EvalFrame ef;
        ef.frame = f.frame_index;
        for (const auto& g : f.gt) {
            ef.gt.push_back({g.gt_id, g.box, g.class_label});
        }
        index.emplace(f.frame_index, seq.size());
        seq.push_back(std::move(ef));
    }
    for (const auto& r : records) {
        const auto it = index.find(r.frame);
        if (it == index.end()) {
            throw ParseError("tracking record for frame " + std::to_string(r.frame) +
                             " has no ground-truth frame");
        }
        seq[it->second].hyp.push_back({r.track_id, r.box, r.class_label, r.score});
    }
    return seq;
}

namespace {

// IoU for every gt x hyp pair whose centers are close enough to overlap;
// everything else is 0.
std::vector<double> iou_table(std::span<const GtBox> gt, std::span<const HypBox> hyp) {
    const std::size_t n = gt.size();
    const std::size_t m = hyp.size();
    std::vector<double> ious(n * m, 0.0);
    if (n == 0 || m == 0) {
        return ious;
    }
    std::vector<double> gx(n), gy(n), hx(m), hy(m), dist(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        gx[i] = gt[i].box.x();
        gy[i] = gt[i].box.y();
    }
    for (std::size_t j = 0; j < m; ++j) {
        hx[j] = hyp[j].box.x();
        hy[j] = hyp[j].box.y();
    }
    kernels::bev_distance_matrix(gx, gy, hx, hy, dist);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (dist[i * m + j] <= overlap_radius_bev(gt[i].box, hyp[j].box)) {
                ious[i * m + j] = iou_3d(gt[i].box, hyp[j].box);
            }
        }
    }
    return ious;
}

} // namespace

std::vector<Correspondence> match_frame(std::span<const GtBox> gt, std::span<const HypBox> hyp,
                                        const CorrespondenceMap& prev_map, const EvalConfig& cfg) {
    const std::size_t m = hyp.size();
    const auto ious = iou_table(gt, hyp);
    std::vector<Correspondence> out;
    std::vector<bool> gt_used(gt.size(), false);
    std::vector<bool> hyp_used(m, false);

    std::map<TrackId, std::size_t> hyp_index;
    for (std::size_t j = 0; j < m; ++j) {
        hyp_index.emplace(hyp[j].track_id, j);
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const auto prev = prev_map.find(gt[i].gt_id);
        if (prev == prev_map.end()) {
            continue;
        }
        const auto h = hyp_index.find(prev->second);
        if (h == hyp_index.end() || hyp_used[h->second]) {
            continue;
        }
        const double iou = ious[i * m + h->second];
        if (iou >= cfg.iou_threshold) {
            out.push_back({i, h->second, iou});
            gt_used[i] = true;
            hyp_used[h->second] = true;
        }
    }

    std::vector<std::size_t> rows, cols;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!gt_used[i]) {
            rows.push_back(i);
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (!hyp_used[j]) {
            cols.push_back(j);
        }
    }
    CostMatrix cost(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double iou = ious[rows[r] * m + cols[c]];
            if (iou >= cfg.iou_threshold) {
                cost.set(r, c, 1.0 - iou);
            }
        }
    }
    for (const auto& [r, c] : solve(cost).matches) {
        out.push_back({rows[r], cols[c], ious[rows[r] * m + cols[c]]});
    }
    std::sort(out.begin(), out.end(),
              [](const Correspondence& a, const Correspondence& b) { return a.gt_index < b.gt_index; });
    return out;
}

ClearCounts& ClearCounts::operator+=(const ClearCounts& o) {
    gt += o.gt;
    hyp += o.hyp;
    matches += o.matches;
    fp += o.fp;
    fn += o.fn;
    ids += o.ids;
    motp_sum += o.motp_sum;
    gt_tracks += o.gt_tracks;
    mostly_tracked += o.mostly_tracked;
    mostly_lost += o.mostly_lost;
    return *this;
}

ClearMetrics finalize(const ClearCounts& c) {
    if (c.gt == 0) {
        throw EmptyGroundTruth();
    }
    ClearMetrics m;
    m.counts = c;
    m.mota = 1.0 - static_cast<double>(c.fp + c.fn + c.ids) / static_cast<double>(c.gt);
    m.motp = c.matches > 0 ? c.motp_sum / static_cast<double>(c.matches) : 0.0;
    if (c.gt_tracks > 0) {
        m.mt = static_cast<double>(c.mostly_tracked) / static_cast<double>(c.gt_tracks);
        m.ml = static_cast<double>(c.mostly_lost) / static_cast<double>(c.gt_tracks);
    }
    return m;
}

ClearAccumulator::ClearAccumulator(EvalConfig cfg) : cfg_(cfg) {
    cfg_.validate();
}

void ClearAccumulator::add_frame(std::span<const GtBox> gt, std::span<const HypBox> hyp) {
    const auto matches = match_frame(gt, hyp, last_, cfg_);
    counts_.gt += gt.size();
    counts_.hyp += hyp.size();
    counts_.matches += matches.size();
    counts_.fn += gt.size() - matches.size();
    counts_.fp += hyp.size() - matches.size();
    for (const auto& g : gt) {
        ++coverage_[g.gt_id].present;
    }
    for (const auto& c : matches) {
        const GtBox& g = gt[c.gt_index];
        const HypBox& h = hyp[c.hyp_index];
        const auto prev = last_.find(g.gt_id);
        if (prev != last_.end() && prev->second != h.track_id) {
            ++counts_.ids;
        }
        last_[g.gt_id] = h.track_id;
        ++coverage_[g.gt_id].matched;
        counts_.motp_sum += cfg_.motp_mode == MotpMode::Iou ? c.iou : center_distance_bev(g.box, h.box);
        matched_scores_.push_back(h.score);
    }
}

ClearCounts ClearAccumulator::counts() const {
    ClearCounts c = counts_;
    c.gt_tracks = coverage_.size();
    for (const auto& [id, cov] : coverage_) {
        const double ratio = static_cast<double>(cov.matched) / static_cast<double>(cov.present);
        c.mostly_tracked += ratio >= 0.8 ? 1 : 0;
        c.mostly_lost += ratio <= 0.2 ? 1 : 0;
    }
    return c;
}

ClearMetrics clear_mot(const EvalSequence& seq, const EvalConfig& cfg) {
    ClearAccumulator acc(cfg);
    for (const auto& f : seq) {
        acc.add_frame(f.gt, f.hyp);
    }
    return finalize(acc.counts());
}

double motar(std::size_t fp, std::size_t fn, std::size_t ids, double r, std::size_t p, bool clamp_negative) {
    const double pd = static_cast<double>(p);
    const double errors = static_cast<double>(fp + fn + ids) - (1.0 - r) * pd;
    double v = std::min(1.0, 1.0 - errors / (r * pd));
    if (clamp_negative) {
        v = std::max(0.0, v);
    }
    return v;
}

namespace {

struct SweepRun {
    ClearCounts counts;
    std::vector<double> matched_scores;
};

SweepRun run_at(const EvalSequence& seq, const EvalConfig& cfg, std::optional<double> cutoff) {
    ClearAccumulator acc(cfg);
    std::vector<HypBox> kept;
    for (const auto& f : seq) {
        if (!cutoff) {
            acc.add_frame(f.gt, f.hyp);
            continue;
        }
        kept.clear();
        for (const auto& h : f.hyp) {
            if (h.score >= *cutoff) {
                kept.push_back(h);
            }
        }
        acc.add_frame(f.gt, kept);
    }
    return {acc.counts(), acc.matched_scores()};
}

} // namespace

AmotaResult amota(const EvalSequence& seq, const EvalConfig& cfg) {
    cfg.validate();
    const SweepRun base = run_at(seq, cfg, std::nullopt);
    const std::size_t p = base.counts.gt;
    if (p == 0) {
        throw EmptyGroundTruth();
    }
    const double pd = static_cast<double>(p);

    std::vector<double> observed;
    for (const auto& f : seq) {
        for (const auto& h : f.hyp) {
            observed.push_back(h.score);
        }
    }
    std::sort(observed.begin(), observed.end(), std::greater<>());
    observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
    std::vector<double> tp_scores = base.matched_scores;
    std::sort(tp_scores.begin(), tp_scores.end(), std::greater<>());

    std::map<double, ClearCounts> memo;
    const auto counts_at = [&](double cutoff) -> const ClearCounts& {
        auto it = memo.find(cutoff);
        if (it == memo.end()) {
            it = memo.emplace(cutoff, run_at(seq, cfg, cutoff).counts).first;
        }
        return it->second;
    };
    const auto recall_of = [&](const ClearCounts& c) { return static_cast<double>(c.matches) / pd; };
    const auto position = [&](double cutoff) {
        return static_cast<std::size_t>(std::lower_bound(observed.begin(), observed.end(), cutoff, std::greater<>()) -
                                        observed.begin());
    };

    AmotaResult result;
    result.max_recall = recall_of(base.counts);
    const std::size_t targets = cfg.recall_points - 1;
    double amotp_sum = 0.0;
    std::size_t achieved = 0;
    for (std::size_t k = 1; k <= targets; ++k) {
        RecallPoint pt;
        pt.target = static_cast<double>(k) / static_cast<double>(targets);
        const double needed = std::ceil(pt.target * pd - 1e-9);
        if (needed <= static_cast<double>(tp_scores.size()) && needed >= 1.0) {
            // Start at the score of the needed-th best true positive, then
            // move over observed cutoffs until the recall is the smallest
            // one not below the target.
            std::size_t pos = position(tp_scores[static_cast<std::size_t>(needed) - 1]);
            while (pos < observed.size() && recall_of(counts_at(observed[pos])) < pt.target) {
                ++pos;
            }
            while (pos < observed.size() && pos > 0 && recall_of(counts_at(observed[pos - 1])) >= pt.target) {
                --pos;
            }
            if (pos < observed.size()) {
                const ClearCounts& c = counts_at(observed[pos]);
                pt.achieved = true;
                pt.cutoff = observed[pos];
                pt.counts = c;
                pt.recall = recall_of(c);
                pt.motar = motar(c.fp, c.fn, c.ids, pt.target, p, cfg.clamp_negative);
                pt.motp = c.matches > 0 ? c.motp_sum / static_cast<double>(c.matches) : 0.0;
                amotp_sum += pt.motp;
                ++achieved;
            }
        }
        result.amota += pt.motar;
        result.curve.push_back(pt);
    }
    result.amota /= static_cast<double>(targets);
    result.amotp = achieved > 0 ? amotp_sum / static_cast<double>(achieved) : 0.0;
    if (base.counts.matches > 0) {
        const auto& c = base.counts;
        result.samota = motar(c.fp, c.fn, c.ids, result.max_recall, p, cfg.clamp_negative);
    }
    return result;
}

namespace {

EvalSequence filter_class(const EvalSequence& seq, const std::string& label) {
    EvalSequence out;
    out.reserve(seq.size());
    for (const auto& f : seq) {
        EvalFrame ef;
        ef.frame = f.frame;
        for (const auto& g : f.gt) {
            if (g.class_label == label) {
                ef.gt.push_back(g);
            }
        }
        for (const auto& h : f.hyp) {
            if (h.class_label == label) {
                ef.hyp.push_back(h);
            }
        }
        out.push_back(std::move(ef));
    }
    return out;
}

bool in_split(const std::string& split, const ClassMetrics& c) {
    return split == "all" || (split == "novel") == c.novel;
}

} // namespace

EvalReport split_eval(const EvalSequence& seq, const ClassVocabulary& vocab, const EvalConfig& cfg,
                      const std::vector<std::string>& splits) {
    cfg.validate();
    for (const auto& s : splits) {
        if (s != "base" && s != "novel" && s != "all") {
            throw ConfigError("unknown split '" + s + "' (expected base, novel or all)");
        }
    }
    std::set<std::string> labels;
    for (const auto& f : seq) {
        for (const auto& g : f.gt) {
            labels.insert(g.class_label);
        }
        for (const auto& h : f.hyp) {
            labels.insert(h.class_label);
        }
    }
    EvalReport report;
    report.config = cfg;
    for (const auto& label : labels) {
        const EvalSequence sub = filter_class(seq, label);
        ClassMetrics cm;
        cm.class_label = label;
        cm.novel = vocab.is_novel(label);
        ClearAccumulator acc(cfg);
        for (const auto& f : sub) {
            acc.add_frame(f.gt, f.hyp);
        }
        const ClearCounts counts = acc.counts();
        cm.gt_boxes = counts.gt;
        cm.fp = counts.fp;
        if (counts.gt > 0) {
            cm.clear = finalize(counts);
            cm.sweep = amota(sub, cfg);
        }
        report.per_class.push_back(std::move(cm));
    }

    for (const auto& split : splits) {
        SplitMetrics sm;
        sm.split = split;
        for (const auto& c : report.per_class) {
            if (!in_split(split, c)) {
                continue;
            }
            sm.fp += c.fp;
            if (!c.clear) {
                continue;
            }
            const double w = static_cast<double>(c.gt_boxes);
            sm.classes.push_back(c.class_label);
            sm.gt_boxes += c.gt_boxes;
            sm.gt_tracks += c.clear->counts.gt_tracks;
            sm.ids += c.clear->counts.ids;
            sm.fn += c.clear->counts.fn;
            sm.samota += w * c.sweep->samota;
            sm.amota += w * c.sweep->amota;
            sm.amotp += w * c.sweep->amotp;
            sm.mota += w * c.clear->mota;
            sm.motp += w * c.clear->motp;
            sm.mt += w * c.clear->mt;
            sm.ml += w * c.clear->ml;
        }
        sm.present = sm.gt_boxes > 0;
        if (sm.present) {
            const double total = static_cast<double>(sm.gt_boxes);
            for (double* v : {&sm.samota, &sm.amota, &sm.amotp, &sm.mota, &sm.motp, &sm.mt, &sm.ml}) {
                *v /= total;
            }
        }
        report.splits.push_back(std::move(sm));
    }
    return report;
}

nlohmann::ordered_json report_json(const EvalReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["config"] = {{"iou_threshold", report.config.iou_threshold},
                   {"recall_points", report.config.recall_points},
                   {"motp_mode", report.config.motp_mode == MotpMode::Iou ? "iou" : "center_distance"},
                   {"clamp_negative", report.config.clamp_negative}};
    ordered_json splits = ordered_json::array();
    for (const auto& s : report.splits) {
        ordered_json row;
        row["split"] = s.split;
        row["present"] = s.present;
        row["classes"] = s.classes;
        row["gt_boxes"] = s.gt_boxes;
        row["gt_tracks"] = s.gt_tracks;
        if (s.present) {
            row["samota"] = s.samota;
            row["amota"] = s.amota;
            row["amotp"] = s.amotp;
            row["mota"] = s.mota;
            row["motp"] = s.motp;
            row["mt"] = s.mt;
            row["ml"] = s.ml;
        } else {
            for (const char* k : {"samota", "amota", "amotp", "mota", "motp", "mt", "ml"}) {
                row[k] = nullptr;
            }
        }
        row["ids"] = s.ids;
        row["fp"] = s.fp;
        row["fn"] = s.fn;
        splits.push_back(std::move(row));
    }
    j["splits"] = std::move(splits);
    ordered_json classes = ordered_json::array();
    for (const auto& c : report.per_class) {
        ordered_json row;
        row["class"] = c.class_label;
        row["novel"] = c.novel;
        row["gt_boxes"] = c.gt_boxes;
        row["fp"] = c.fp;
        if (c.clear) {
            row["samota"] = c.sweep->samota;
            row["amota"] = c.sweep->amota;
            row["amotp"] = c.sweep->amotp;
            row["mota"] = c.clear->mota;
            row["motp"] = c.clear->motp;
            row["mt"] = c.clear->mt;
            row["ids"] = c.clear->counts.ids;
            row["fn"] = c.clear->counts.fn;
        }
        classes.push_back(std::move(row));
    }
    j["per_class"] = std::move(classes);
    return j;
}

std::string report_table(const EvalReport& report) {
    const bool iou_mode = report.config.motp_mode == MotpMode::Iou;
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-6s %8s %8s %8s %8s %8s %7s %6s %6s %6s %7s\n", "Split", "sAMOTA", "AMOTA",
                  "AMOTP", "MOTA", "MOTP", "MT", "IDS", "FP", "FN", "GT");
    out << buf;
    for (const auto& s : report.splits) {
        if (!s.present) {
            std::snprintf(buf, sizeof buf, "%-6s %8s %8s %8s %8s %8s %7s %6zu %6zu %6zu %7zu\n", s.split.c_str(), "-",
                          "-", "-", "-", "-", "-", s.ids, s.fp, s.fn, s.gt_boxes);
        } else {
            const double motp_scale = iou_mode ? 100.0 : 1.0;
            std::snprintf(buf, sizeof buf, "%-6s %8.2f %8.2f %8.2f %8.2f %8.2f %7.2f %6zu %6zu %6zu %7zu\n",
                          s.split.c_str(), 100.0 * s.samota, 100.0 * s.amota, motp_scale * s.amotp, 100.0 * s.mota,
                          motp_scale * s.motp, 100.0 * s.mt, s.ids, s.fp, s.fn, s.gt_boxes);
        }
        out << buf;
    }
    return out.str();
}

} // namespace ovmot
