#pragma once

#include <ovmot/geometry.hpp>

#include "json.hpp"

#include <array>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ovmot {

/// Base and novel label sets plus the placeholder that stands in for any
/// label that must not be shown to the scorer.
class ClassVocabulary {
public:
    ClassVocabulary() = default;
    ClassVocabulary(std::set<std::string> base, std::set<std::string> novel,
                    std::string placeholder = "Unknown");

    const std::set<std::string>& base_classes() const { return base_; }
    const std::set<std::string>& novel_classes() const { return novel_; }
    const std::string& placeholder() const { return placeholder_; }

    bool is_base(std::string_view label) const;
    /// Novel-set members and anything unrecognized.
    bool is_novel(std::string_view label) const { return !is_base(label); }

private:
    std::set<std::string> base_;
    std::set<std::string> novel_;
    std::string placeholder_ = "Unknown";
};

/// [x, y, z, l, w, h, vol, yaw, score].
struct GeometryFeature {
    static constexpr std::size_t kSize = 9;
    enum Index : std::size_t { X, Y, Z, L, W, H, Vol, Yaw, Score };

    std::array<double, kSize> values{};

    /// Rebuilds the box from its raw fields; vol is ignored.
    Box3D to_box() const;

    friend bool operator==(const GeometryFeature&, const GeometryFeature&) = default;
};

GeometryFeature geometry_features(const Box3D& b);

struct TextSegment {
    std::string text;
    friend bool operator==(const TextSegment&, const TextSegment&) = default;
};

struct BoxSlot {
    GeometryFeature feature;
    friend bool operator==(const BoxSlot&, const BoxSlot&) = default;
};

using PromptSegment = std::variant<TextSegment, BoxSlot>;

inline constexpr std::string_view kBoxToken = "<box>";
inline constexpr std::string_view kDefaultTemplateId = "track-candidate-v1";

/// Interleaved text and geometry slots for one (track, candidate) pair.
/// Slots run oldest history box first and end with the candidate.
struct PromptSequence {
    std::vector<PromptSegment> segments;
    std::string track_class_rendered;
    std::string det_class_rendered;
    std::size_t history_len = 0;

    std::size_t box_slot_count() const;
    std::vector<GeometryFeature> box_features() const;

    /// Text with every slot shown as the <box> token.
    std::string rendered_text() const;

    friend bool operator==(const PromptSequence&, const PromptSequence&) = default;
};

struct SerializerConfig {
    std::size_t history_len = 3;
    bool mask_novel = true;
    std::string template_id{kDefaultTemplateId};

    /// Rejects history_len == 0 and unknown template ids.
    void validate() const;
};

std::string render_class(std::string_view label, const ClassVocabulary& vocab, bool mask_novel);

/// Keeps the newest cfg.history_len boxes of `history` (oldest first) and
/// appends the candidate. Throws EmptyHistory when `history` is empty.
PromptSequence serialize_pair(std::span<const Box3D> history, std::string_view track_label,
                              const Box3D& candidate, std::string_view det_label,
                              const SerializerConfig& cfg, const ClassVocabulary& vocab);

/// {"segments": [{"text": ...} | {"box": [9 numbers]}, ...]}
nlohmann::json to_json(const PromptSequence& prompt);

/// Inverse of to_json. Rendered class strings are recovered from the
/// template text when it matches the canonical template. Throws ParseError.
PromptSequence prompt_from_json(const nlohmann::json& j);

} // namespace ovmot
