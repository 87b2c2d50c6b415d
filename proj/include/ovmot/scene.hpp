#pragma once

#include <ovmot/geometry.hpp>
#include <ovmot/serializer.hpp>
#include <ovmot/tracker.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ovmot {

inline constexpr int kSceneSchemaVersion = 1;

struct SceneHeader {
    double frame_rate = 10.0;
    // Boxes are always held with z at the box center; "bottom" is accepted
    // on input and converted.
    std::string z_convention = "center";
    ClassVocabulary vocab;
};

struct GtObject {
    std::uint64_t gt_id = 0;
    Box3D box;
    std::string class_label;
};

struct SceneFrame {
    FrameIndex frame_index = 0;
    std::vector<Detection> detections;
    std::vector<GtObject> gt;
};

struct SceneFile {
    SceneHeader header;
    std::vector<SceneFrame> frames;
};

/// Parses and validates a scene document. `source` labels diagnostics.
/// Throws ParseError (with line/column or a field path) and
/// SchemaVersionMismatch.
SceneFile parse_scene(const std::string& text, const std::string& source = "<scene>");
SceneFile load_scene(const std::filesystem::path& path);

/// Canonical rendering: fixed key order, center z, two-space indent.
std::string dump_scene(const SceneFile& scene);
void write_scene(const SceneFile& scene, const std::filesystem::path& path);

std::vector<FrameDetections> detection_stream(const SceneFile& scene);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace ovmot
