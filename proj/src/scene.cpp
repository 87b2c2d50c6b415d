#include <ovmot/scene.hpp>

#include <ovmot/errors.hpp>

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace ovmot {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class FieldReader {
public:
    explicit FieldReader(const std::string& source) : source_(source) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        throw ParseError(source_ + ": " + path + ": " + msg);
    }

    const json& member(const json& obj, const std::string& path, const char* key) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        const auto it = obj.find(key);
        if (it == obj.end()) {
            fail(path + "." + key, "missing field");
        }
        return *it;
    }

    double number(const json& v, const std::string& path) const {
        if (!v.is_number()) {
            fail(path, "expected a number");
        }
        return v.get<double>();
    }

    std::string string(const json& v, const std::string& path) const {
        if (!v.is_string()) {
            fail(path, "expected a string");
        }
        return v.get<std::string>();
    }

    const json& array(const json& v, const std::string& path) const {
        if (!v.is_array()) {
            fail(path, "expected an array");
        }
        return v;
    }

    std::set<std::string> string_set(const json& v, const std::string& path) const {
        std::set<std::string> out;
        const auto& arr = array(v, path);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            out.insert(string(arr[i], path + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    // Field names in box diagnostics follow the 7-vector layout.
    Box3D box(const json& v, const std::string& path, double score, bool bottom_z) const {
        static constexpr const char* kNames[7] = {"x", "y", "z", "l", "w", "h", "yaw"};
        const auto& arr = array(v, path);
        if (arr.size() != 7) {
            fail(path, "expected 7 values, got " + std::to_string(arr.size()));
        }
        std::array<double, 7> vals{};
        for (std::size_t i = 0; i < 7; ++i) {
            vals[i] = number(arr[i], path + "[" + std::to_string(i) + "]");
        }
        for (std::size_t i = 3; i < 6; ++i) {
            if (!(vals[i] > 0.0)) {
                fail(path + "." + kNames[i], "must be > 0, got " + arr[i].dump());
            }
        }
        if (bottom_z) {
            vals[2] += 0.5 * vals[5];
        }
        try {
            return Box3D::from_array(vals, score);
        } catch (const InvalidBox& e) {
            fail(path, e.what());
        }
    }

private:
    std::string source_;
};

std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace

SceneFile parse_scene(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                         ": malformed JSON");
    }
    const FieldReader r(source);
    if (!doc.is_object()) {
        r.fail("$", "expected an object");
    }
    const json& version = r.member(doc, "$", "schema_version");
    if (!version.is_number_integer()) {
        r.fail("$.schema_version", "expected an integer");
    }
    if (version.get<long long>() != kSceneSchemaVersion) {
        throw SchemaVersionMismatch(source + ": schema_version " + version.dump() +
                                    " is not supported (expected " +
                                    std::to_string(kSceneSchemaVersion) + ")");
    }

    SceneFile scene;
    const json& header = r.member(doc, "$", "header");
    scene.header.frame_rate = r.number(r.member(header, "$.header", "frame_rate"), "$.header.frame_rate");
    if (!(scene.header.frame_rate > 0.0)) {
        r.fail("$.header.frame_rate", "must be > 0");
    }
    const std::string zc =
        r.string(r.member(header, "$.header", "z_convention"), "$.header.z_convention");
    if (zc != "center" && zc != "bottom") {
        r.fail("$.header.z_convention", "expected \"center\" or \"bottom\", got \"" + zc + "\"");
    }
    const bool bottom = zc == "bottom";
    const json& vocab = r.member(header, "$.header", "vocabulary");
    try {
        std::string placeholder = "Unknown";
        if (vocab.is_object() && vocab.contains("placeholder")) {
            placeholder = r.string(vocab["placeholder"], "$.header.vocabulary.placeholder");
        }
        scene.header.vocab = ClassVocabulary(
            r.string_set(r.member(vocab, "$.header.vocabulary", "base"), "$.header.vocabulary.base"),
            r.string_set(r.member(vocab, "$.header.vocabulary", "novel"), "$.header.vocabulary.novel"),
            placeholder);
    } catch (const ConfigError& e) {
        r.fail("$.header.vocabulary", e.what());
    }

    const json& frames = r.array(r.member(doc, "$", "frames"), "$.frames");
    scene.frames.reserve(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const std::string fp = "$.frames[" + std::to_string(f) + "]";
        const json& fr = frames[f];
        const json& idx = r.member(fr, fp, "frame_index");
        if (!idx.is_number_integer()) {
            r.fail(fp + ".frame_index", "expected an integer");
        }
        SceneFrame frame;
        frame.frame_index = idx.get<FrameIndex>();
        if (!scene.frames.empty() && frame.frame_index <= scene.frames.back().frame_index) {
            r.fail(fp + ".frame_index", "frame indices must be strictly increasing");
        }
        const json& dets = r.array(r.member(fr, fp, "detections"), fp + ".detections");
        for (std::size_t k = 0; k < dets.size(); ++k) {
            const std::string dp = fp + ".detections[" + std::to_string(k) + "]";
            const double score = r.number(r.member(dets[k], dp, "score"), dp + ".score");
            if (!(score >= 0.0 && score <= 1.0)) {
                r.fail(dp + ".score", "must lie in [0, 1]");
            }
            frame.detections.push_back({r.box(r.member(dets[k], dp, "box"), dp + ".box", score, bottom),
                                        r.string(r.member(dets[k], dp, "class"), dp + ".class")});
        }
        const json& gts = r.array(r.member(fr, fp, "gt"), fp + ".gt");
        for (std::size_t k = 0; k < gts.size(); ++k) {
            const std::string gp = fp + ".gt[" + std::to_string(k) + "]";
            const json& id = r.member(gts[k], gp, "gt_id");
            if (!id.is_number_unsigned()) {
                r.fail(gp + ".gt_id", "expected a non-negative integer");
            }
            frame.gt.push_back({id.get<std::uint64_t>(),
                                r.box(r.member(gts[k], gp, "box"), gp + ".box", 1.0, bottom),
                                r.string(r.member(gts[k], gp, "class"), gp + ".class")});
        }
        scene.frames.push_back(std::move(frame));
    }
    return scene;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

SceneFile load_scene(const std::filesystem::path& path) {
    return parse_scene(read_text_file(path), path.string());
}

std::string dump_scene(const SceneFile& scene) {
    ordered_json doc;
    doc["schema_version"] = kSceneSchemaVersion;
    ordered_json header;
    header["frame_rate"] = scene.header.frame_rate;
    header["z_convention"] = "center";
    ordered_json vocab;
    vocab["base"] = scene.header.vocab.base_classes();
    vocab["novel"] = scene.header.vocab.novel_classes();
    vocab["placeholder"] = scene.header.vocab.placeholder();
    header["vocabulary"] = std::move(vocab);
    doc["header"] = std::move(header);
    ordered_json frames = ordered_json::array();
    for (const auto& f : scene.frames) {
        ordered_json fr;
        fr["frame_index"] = f.frame_index;
        ordered_json dets = ordered_json::array();
        for (const auto& d : f.detections) {
            ordered_json dj;
            dj["box"] = d.box.to_array();
            dj["class"] = d.class_label;
            dj["score"] = d.box.score();
            dets.push_back(std::move(dj));
        }
        fr["detections"] = std::move(dets);
        ordered_json gts = ordered_json::array();
        for (const auto& g : f.gt) {
            ordered_json gj;
            gj["gt_id"] = g.gt_id;
            gj["box"] = g.box.to_array();
            gj["class"] = g.class_label;
            gts.push_back(std::move(gj));
        }
        fr["gt"] = std::move(gts);
        frames.push_back(std::move(fr));
    }
    doc["frames"] = std::move(frames);
    return doc.dump(2) + "\n";
}

void write_scene(const SceneFile& scene, const std::filesystem::path& path) {
    write_text_file(path, dump_scene(scene));
}

std::vector<FrameDetections> detection_stream(const SceneFile& scene) {
    std::vector<FrameDetections> out;
    out.reserve(scene.frames.size());
    for (const auto& f : scene.frames) {
        out.push_back({f.frame_index, f.detections});
    }
    return out;
}

} // namespace ovmot
