#include <ovmot/cli.hpp>

#include <ovmot/errors.hpp>
#include <ovmot/metrics.hpp>
#include <ovmot/mining.hpp>
#include <ovmot/remote_scorer.hpp>
#include <ovmot/scene.hpp>
#include <ovmot/simulate.hpp>
#include <ovmot/tracker.hpp>

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iterator>
#include <sstream>

namespace ovmot {

std::vector<std::string> config_file_args(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::vector<std::string> out;
    std::string line;
    std::size_t line_no = 0;
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            return std::string();
        }
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        out.push_back("--" + key);
        out.push_back(value);
    }
    return out;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

// Moves every label named in `novel` to the novel set.
ClassVocabulary with_novel_classes(const ClassVocabulary& vocab, const std::string& novel) {
    if (novel.empty()) {
        return vocab;
    }
    const auto names = split_list(novel);
    std::set<std::string> novel_set(names.begin(), names.end());
    std::set<std::string> base;
    for (const auto& b : vocab.base_classes()) {
        if (!novel_set.count(b)) {
            base.insert(b);
        }
    }
    for (const auto& n : vocab.novel_classes()) {
        if (!novel_set.count(n)) {
            base.insert(n);
        }
    }
    return ClassVocabulary(std::move(base), std::move(novel_set), vocab.placeholder());
}

// Inserts the contents of `--config FILE` right after the subcommand so
// that flags given on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.starts_with("-"); });
    if (sub == args.end()) {
        return args;
    }
    const std::size_t sub_pos = static_cast<std::size_t>(sub - args.begin());
    std::vector<std::string> file_args;
    for (std::size_t k = sub_pos + 1; k < args.size();) {
        std::string path;
        std::size_t consumed = 0;
        if (args[k] == "--config" && k + 1 < args.size()) {
            path = args[k + 1];
            consumed = 2;
        } else if (args[k].starts_with("--config=")) {
            path = args[k].substr(9);
            consumed = 1;
        }
        if (consumed == 0) {
            ++k;
            continue;
        }
        auto more = config_file_args(path);
        file_args.insert(file_args.end(), more.begin(), more.end());
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(k),
                   args.begin() + static_cast<std::ptrdiff_t>(k + consumed));
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1), file_args.begin(), file_args.end());
    return args;
}

const auto kOnOff = CLI::IsMember({"on", "off"});

struct TrackArgs {
    std::vector<std::string> scenes;
    std::string out;
    std::string scorer = "geometric";
    std::string fallback = "off";
    std::string mask_novel = "on";
    std::string novel_classes;
    std::size_t jobs = 1;
    LifecycleConfig lifecycle;
    std::size_t history_len = 3;
    GeoScorerParams geo;
};

struct EvalArgs {
    std::string gt;
    std::string hyp;
    std::string out;
    std::string format = "table";
    std::string splits = "base,novel,all";
    std::string novel_classes;
    std::string motp = "iou";
    std::string clamp = "on";
    EvalConfig eval;
};

struct MineArgs {
    std::string scene;
    std::string out;
    std::string strategy = "hard";
    std::string mask_novel = "on";
    std::string novel_classes;
    MiningConfig mining;
};

struct SimArgs {
    std::string out;
    SimConfig sim;
};

struct ParityArgs {
    std::string endpoint;
    std::size_t pairs = 256;
    std::uint64_t seed = 0;
    std::size_t history_len = 3;
    double tolerance = 1e-9;
    GeoScorerParams geo;
};

void add_geo(CLI::App* app, GeoScorerParams& geo) {
    app->add_option("--w-iou", geo.w_iou, "geometric scorer IoU weight")->capture_default_str();
    app->add_option("--tau-d", geo.tau_d, "geometric scorer distance scale (m)")->capture_default_str();
}

void add_jitter(CLI::App* app, JitterParams& j, const std::string& what) {
    app->add_option("--sigma-center", j.sigma_center, what + " center noise std (m)")->capture_default_str();
    app->add_option("--sigma-size", j.sigma_size_log, what + " log-size noise std")->capture_default_str();
    app->add_option("--sigma-yaw", j.sigma_yaw, what + " yaw noise std (rad)")->capture_default_str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_text_file(path, text);
    }
}

int cmd_track(const TrackArgs& a, std::ostream& out, std::ostream& err) {
    auto scorer = make_scorer(a.scorer, a.geo, a.fallback == "on");
    const auto run_one = [&](const std::string& path) {
        const SceneFile scene = load_scene(path);
        TrackerConfig cfg;
        cfg.lifecycle = a.lifecycle;
        cfg.serializer.history_len = a.history_len;
        cfg.serializer.mask_novel = a.mask_novel == "on";
        cfg.vocab = with_novel_classes(scene.header.vocab, a.novel_classes);
        const auto stream = detection_stream(scene);
        const auto results = run_sequence(stream, *scorer, cfg);
        std::ostringstream s;
        write_tracking_jsonl(s, results);
        return s.str();
    };
    if (a.scenes.size() == 1) {
        write_output(a.out, run_one(a.scenes.front()), out);
        return kExitOk;
    }
    if (a.out.empty()) {
        err << "track: --out must name a directory when several scenes are given\n";
        return kExitUsage;
    }
    std::filesystem::create_directories(a.out);
    // Each scene runs its own tracker; only the scorer is shared.
    const std::size_t jobs = std::max<std::size_t>(1, a.jobs);
    for (std::size_t start = 0; start < a.scenes.size(); start += jobs) {
        std::vector<std::future<std::string>> running;
        const std::size_t end = std::min(a.scenes.size(), start + jobs);
        for (std::size_t k = start; k < end; ++k) {
            running.push_back(std::async(std::launch::async, run_one, a.scenes[k]));
        }
        for (std::size_t k = start; k < end; ++k) {
            const auto target = std::filesystem::path(a.out) / (std::filesystem::path(a.scenes[k]).stem().string() + ".jsonl");
            write_text_file(target, running[k - start].get());
        }
    }
    return kExitOk;
}

int cmd_eval(EvalArgs a, std::ostream& out) {
    a.eval.motp_mode = a.motp == "iou" ? MotpMode::Iou : MotpMode::CenterDistance;
    a.eval.clamp_negative = a.clamp == "on";
    const SceneFile scene = load_scene(a.gt);
    std::ifstream hyp(a.hyp);
    if (!hyp) {
        throw IoError("cannot open " + a.hyp);
    }
    const auto records = read_tracking_jsonl(hyp);
    const auto seq = make_eval_sequence(scene, records);
    const auto report = split_eval(seq, with_novel_classes(scene.header.vocab, a.novel_classes), a.eval,
                                   split_list(a.splits));
    if (a.format == "json") {
        write_output(a.out, report_json(report).dump(2) + "\n", out);
    } else {
        if (!a.out.empty()) {
            write_text_file(a.out, report_json(report).dump(2) + "\n");
        }
        out << report_table(report);
    }
    return kExitOk;
}

int cmd_mine(MineArgs a, std::ostream& out, std::ostream& err) {
    a.mining.strategy = parse_strategy(a.strategy);
    a.mining.mask_novel = a.mask_novel == "on";
    const SceneFile scene = load_scene(a.scene);
    const auto tracks = ground_truth_tracks(scene);
    const auto pairs = mine_scene(tracks, a.mining, with_novel_classes(scene.header.vocab, a.novel_classes));
    std::ostringstream s;
    write_dataset(s, pairs);
    write_output(a.out, s.str(), out);
    const auto yes = std::count_if(pairs.begin(), pairs.end(),
                                   [](const TrainingPair& p) { return p.label == TrainingLabel::Yes; });
    err << "mined " << pairs.size() << " pairs (" << yes << " Yes, " << (static_cast<long>(pairs.size()) - yes)
        << " No)\n";
    return kExitOk;
}

int cmd_sim(const SimArgs& a, std::ostream& out) {
    write_output(a.out, dump_scene(simulate(a.sim)), out);
    return kExitOk;
}

int cmd_parity(const ParityArgs& a, std::ostream& out) {
    SimConfig sim;
    sim.n_objects = 8;
    sim.duration = std::max<std::size_t>(a.history_len + 2, 20);
    sim.min_spacing = 2.0;
    sim.region = 40.0;
    MiningConfig mc;
    mc.history_len = a.history_len;
    mc.jitter.sigma_center = 0.2;
    std::vector<TrainingPair> pairs;
    for (std::uint64_t k = 0; pairs.size() < a.pairs; ++k) {
        sim.seed = a.seed + k;
        mc.seed = a.seed + k;
        auto more = mine_scene(ground_truth_tracks(simulate(sim)), mc, sim.vocab);
        std::move(more.begin(), more.end(), std::back_inserter(pairs));
    }
    if (pairs.size() > a.pairs) {
        pairs.resize(a.pairs);
    }
    std::vector<ScoreRequest> requests;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        requests.push_back({pairs[k].prompt, "pair-" + std::to_string(k)});
    }
    const GeometricScorer local(a.geo);
    RemoteScorer remote(std::make_shared<HttpTransport>(a.endpoint));
    const auto health = remote.health();
    const auto expected = local.score_batch(requests);
    const auto got = remote.score_batch(requests);
    double max_dp = 0.0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
        max_dp = std::max(max_dp, std::abs(expected[k].p - got[k].p));
    }
    nlohmann::ordered_json j;
    j["endpoint"] = a.endpoint;
    j["mode"] = health.mode;
    j["pairs"] = requests.size();
    j["max_abs_dp"] = max_dp;
    j["tolerance"] = a.tolerance;
    j["pass"] = max_dp <= a.tolerance;
    out << j.dump(2) << "\n";
    return max_dp <= a.tolerance ? kExitOk : kExitParityMismatch;
}

} // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online open-vocabulary 3D multi-object tracking engine", "ovmot"};
    app.option_defaults()->take_last();
    app.require_subcommand(1);

    TrackArgs track;
    auto* t = app.add_subcommand("track", "track a scene file and write tracking JSON lines");
    t->add_option("scenes", track.scenes, "scene files")->required()->check(CLI::ExistingFile);
    t->add_option("-o,--out", track.out, "output file (directory for several scenes); stdout when omitted");
    t->add_option("--scorer", track.scorer, "geometric | remote:<url>")->capture_default_str();
    t->add_option("--fallback", track.fallback, "fall back to geometric when the remote scorer is down")
        ->check(kOnOff)->capture_default_str();
    t->add_option("--history-len", track.history_len, "history boxes per prompt (L)")->capture_default_str();
    t->add_option("--history-capacity", track.lifecycle.history_capacity, "stored boxes per track")->capture_default_str();
    t->add_option("--max-age", track.lifecycle.max_age, "missed frames before death (K)")->capture_default_str();
    t->add_option("--gate-dist", track.lifecycle.gate_dist, "gating radius (m)")->capture_default_str();
    t->add_option("--birth-score", track.lifecycle.birth_score, "minimum detection score to start a track")
        ->capture_default_str();
    t->add_option("--confirm-hits", track.lifecycle.confirm_hits, "matches before a track is reported")
        ->capture_default_str();
    t->add_option("--accept-max-cost", track.lifecycle.accept_max_cost, "largest accepted 1 - p")->capture_default_str();
    t->add_option("--mask-novel", track.mask_novel, "hide novel class names from the scorer")->check(kOnOff)
        ->capture_default_str();
    t->add_option("--novel-classes", track.novel_classes, "comma list overriding the novel set");
    t->add_option("--jobs", track.jobs, "scenes tracked in parallel")->capture_default_str();
    add_geo(t, track.geo);
    t->add_option("--config", "flat key = value file; command-line flags win");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "evaluate tracking output against scene ground truth");
    e->add_option("--gt", ev.gt, "scene file with ground truth")->required()->check(CLI::ExistingFile);
    e->add_option("--hyp", ev.hyp, "tracking JSON lines")->required()->check(CLI::ExistingFile);
    e->add_option("-o,--out", ev.out, "write the JSON report here");
    e->add_option("--format", ev.format, "stdout format")->check(CLI::IsMember({"table", "json"}))->capture_default_str();
    e->add_option("--iou", ev.eval.iou_threshold, "3D IoU match threshold")->capture_default_str();
    e->add_option("--recall-points", ev.eval.recall_points, "n for the recall sweep")->capture_default_str();
    e->add_option("--motp", ev.motp, "iou | distance")->check(CLI::IsMember({"iou", "distance"}))->capture_default_str();
    e->add_option("--clamp", ev.clamp, "floor MOTAR at 0")->check(kOnOff)->capture_default_str();
    e->add_option("--splits", ev.splits, "comma list of base, novel, all")->capture_default_str();
    e->add_option("--novel-classes", ev.novel_classes, "comma list overriding the novel set");
    e->add_option("--config", "flat key = value file; command-line flags win");

    MineArgs mine;
    auto* m = app.add_subcommand("mine", "mine training pairs from scene ground truth");
    m->add_option("--scene", mine.scene, "scene file")->required()->check(CLI::ExistingFile);
    m->add_option("-o,--out", mine.out, "training JSON lines; stdout when omitted");
    m->add_option("--history-len", mine.mining.history_len, "history boxes per prompt (L)")->capture_default_str();
    m->add_option("--hard-radius", mine.mining.hard_radius, "negative search radius (m)")->capture_default_str();
    m->add_option("--negatives", mine.mining.negatives_per_positive, "negatives per positive")->capture_default_str();
    m->add_option("--strategy", mine.strategy, "hard | local | random")
        ->check(CLI::IsMember({"hard", "local", "random"}))->capture_default_str();
    m->add_option("--seed", mine.mining.seed, "random seed")->capture_default_str();
    m->add_option("--mask-novel", mine.mask_novel, "hide novel class names")->check(kOnOff)->capture_default_str();
    m->add_option("--novel-classes", mine.novel_classes, "comma list overriding the novel set");
    add_jitter(m, mine.mining.jitter, "positive");
    m->add_option("--config", "flat key = value file; command-line flags win");

    SimArgs sim;
    auto* s = app.add_subcommand("sim", "write a simulated scene");
    s->add_option("-o,--out", sim.out, "scene file; stdout when omitted");
    s->add_option("--objects", sim.sim.n_objects, "number of agents")->capture_default_str();
    s->add_option("--frames", sim.sim.duration, "number of frames")->capture_default_str();
    s->add_option("--speed-min", sim.sim.speed_min, "minimum speed (m/frame)")->capture_default_str();
    s->add_option("--speed-max", sim.sim.speed_max, "maximum speed (m/frame)")->capture_default_str();
    add_jitter(s, sim.sim.sigma_det, "detector");
    s->add_option("--dropout", sim.sim.p_dropout, "detection drop probability")->capture_default_str();
    s->add_option("--clutter", sim.sim.clutter_rate, "expected false boxes per frame")->capture_default_str();
    s->add_option("--labelflip", sim.sim.p_labelflip, "probability of a novel label flip")->capture_default_str();
    s->add_option("--novel-fraction", sim.sim.novel_fraction, "fraction of novel-class agents")->capture_default_str();
    s->add_option("--min-spacing", sim.sim.min_spacing, "minimum distance between agents (m)")->capture_default_str();
    s->add_option("--region", sim.sim.region, "side of the start region (m)")->capture_default_str();
    s->add_option("--frame-rate", sim.sim.frame_rate, "frames per second")->capture_default_str();
    s->add_option("--seed", sim.sim.seed, "random seed")->capture_default_str();
    s->add_option("--config", "flat key = value file; command-line flags win");

    ParityArgs parity;
    auto* p = app.add_subcommand("parity-check", "compare the local geometric scorer with a remote endpoint");
    p->add_option("--endpoint", parity.endpoint, "http://host:port of the scoring service")->required();
    p->add_option("--pairs", parity.pairs, "number of pairs to score")->capture_default_str();
    p->add_option("--seed", parity.seed, "random seed")->capture_default_str();
    p->add_option("--history-len", parity.history_len, "history boxes per prompt (L)")->capture_default_str();
    p->add_option("--tolerance", parity.tolerance, "allowed max |dp|")->capture_default_str();
    add_geo(p, parity.geo);
    p->add_option("--config", "flat key = value file; command-line flags win");

    try {
        std::vector<std::string> args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        if (code != 0) {
            err << "\n" << app.help();
            return kExitUsage;
        }
        return kExitOk;
    } catch (const Error& ex) {
        err << "ovmot: " << ex.what() << "\n";
        return kExitUsage;
    }

    try {
        if (t->parsed()) {
            return cmd_track(track, out, err);
        }
        if (e->parsed()) {
            return cmd_eval(ev, out);
        }
        if (m->parsed()) {
            return cmd_mine(mine, out, err);
        }
        if (s->parsed()) {
            return cmd_sim(sim, out);
        }
        return cmd_parity(parity, out);
    } catch (const ScorerUnavailable& ex) {
        err << "ovmot: scorer unavailable: " << ex.what() << "\n";
        return kExitScorerUnavailable;
    } catch (const Error& ex) {
        err << "ovmot: " << ex.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& ex) {
        err << "ovmot: " << ex.what() << "\n";
        return kExitFailure;
    }
}

} // namespace ovmot
