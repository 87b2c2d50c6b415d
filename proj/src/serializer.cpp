#include <ovmot/serializer.hpp>

#include <ovmot/errors.hpp>

#include <algorithm>
#include <cmath>

namespace ovmot {

namespace {

constexpr std::string_view kTrackPrefix = "Track class: ";
constexpr std::string_view kTrackSuffix = "; history: ";
constexpr std::string_view kCandPrefix = ". Candidate class: ";
constexpr std::string_view kCandSuffix = ": ";
constexpr std::string_view kQuestion = ". Same object?";

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
    return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

// Returns the label embedded between prefix and suffix, or empty.
std::string between(std::string_view s, std::string_view prefix, std::string_view suffix) {
    if (s.size() < prefix.size() + suffix.size() || !starts_with(s, prefix) ||
        !ends_with(s, suffix)) {
        return {};
    }
    return std::string(s.substr(prefix.size(), s.size() - prefix.size() - suffix.size()));
}

} // namespace

ClassVocabulary::ClassVocabulary(std::set<std::string> base, std::set<std::string> novel,
                                 std::string placeholder)
    : base_(std::move(base)), novel_(std::move(novel)), placeholder_(std::move(placeholder)) {
    for (const auto& b : base_) {
        if (novel_.count(b) != 0) {
            throw ConfigError("class '" + b + "' is in both base and novel sets");
        }
    }
    if (base_.count(placeholder_) != 0 || novel_.count(placeholder_) != 0) {
        throw ConfigError("placeholder '" + placeholder_ + "' must not be a class label");
    }
    if (placeholder_.empty()) {
        throw ConfigError("placeholder must be non-empty");
    }
}

bool ClassVocabulary::is_base(std::string_view label) const {
    return std::find(base_.begin(), base_.end(), label) != base_.end();
}

Box3D GeometryFeature::to_box() const {
    const auto& v = values;
    return Box3D(v[X], v[Y], v[Z], v[L], v[W], v[H], v[Yaw], std::clamp(v[Score], 0.0, 1.0));
}

GeometryFeature geometry_features(const Box3D& b) {
    return GeometryFeature{{b.x(), b.y(), b.z(), b.l(), b.w(), b.h(), volume(b), b.yaw(), b.score()}};
}

std::size_t PromptSequence::box_slot_count() const {
    return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(), [](const auto& s) {
        return std::holds_alternative<BoxSlot>(s);
    }));
}

std::vector<GeometryFeature> PromptSequence::box_features() const {
    std::vector<GeometryFeature> out;
    for (const auto& s : segments) {
        if (const auto* slot = std::get_if<BoxSlot>(&s)) {
            out.push_back(slot->feature);
        }
    }
    return out;
}

std::string PromptSequence::rendered_text() const {
    std::string out;
    for (const auto& s : segments) {
        if (const auto* t = std::get_if<TextSegment>(&s)) {
            out += t->text;
        } else {
            out += kBoxToken;
        }
    }
    return out;
}

void SerializerConfig::validate() const {
    if (history_len == 0) {
        throw ConfigError("history length must be >= 1; a zero-length history carries no "
                          "temporal context");
    }
    if (template_id != kDefaultTemplateId) {
        throw ConfigError("unknown prompt template id '" + template_id + "'");
    }
}

std::string render_class(std::string_view label, const ClassVocabulary& vocab, bool mask_novel) {
    if (!mask_novel || vocab.is_base(label)) {
        return std::string(label);
    }
    return vocab.placeholder();
}

PromptSequence serialize_pair(std::span<const Box3D> history, std::string_view track_label,
                              const Box3D& candidate, std::string_view det_label,
                              const SerializerConfig& cfg, const ClassVocabulary& vocab) {
    cfg.validate();
    if (history.empty()) {
        throw EmptyHistory();
    }
    const std::size_t keep = std::min(history.size(), cfg.history_len);
    const auto window = history.subspan(history.size() - keep);

    PromptSequence p;
    p.track_class_rendered = render_class(track_label, vocab, cfg.mask_novel);
    p.det_class_rendered = render_class(det_label, vocab, cfg.mask_novel);
    p.history_len = keep;
    p.segments.reserve(keep + 4);

    std::string head(kTrackPrefix);
    head += p.track_class_rendered;
    head += kTrackSuffix;
    p.segments.emplace_back(TextSegment{std::move(head)});
    for (const auto& b : window) {
        p.segments.emplace_back(BoxSlot{geometry_features(b)});
    }
    std::string mid(kCandPrefix);
    mid += p.det_class_rendered;
    mid += kCandSuffix;
    p.segments.emplace_back(TextSegment{std::move(mid)});
    p.segments.emplace_back(BoxSlot{geometry_features(candidate)});
    p.segments.emplace_back(TextSegment{std::string(kQuestion)});
    return p;
}

nlohmann::json to_json(const PromptSequence& prompt) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : prompt.segments) {
        if (const auto* t = std::get_if<TextSegment>(&s)) {
            segs.push_back({{"text", t->text}});
        } else {
            const auto& v = std::get<BoxSlot>(s).feature.values;
            segs.push_back({{"box", nlohmann::json(v)}});
        }
    }
    return {{"segments", std::move(segs)}};
}

PromptSequence prompt_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("segments") || !j.at("segments").is_array()) {
        throw ParseError("prompt: expected object with a 'segments' array");
    }
    PromptSequence p;
    std::vector<std::string> texts;
    std::size_t idx = 0;
    for (const auto& s : j.at("segments")) {
        const std::string where = "prompt.segments[" + std::to_string(idx++) + "]";
        if (s.is_object() && s.size() == 1 && s.contains("text") && s.at("text").is_string()) {
            texts.push_back(s.at("text").get<std::string>());
            p.segments.emplace_back(TextSegment{texts.back()});
        } else if (s.is_object() && s.size() == 1 && s.contains("box") && s.at("box").is_array()) {
            const auto& arr = s.at("box");
            if (arr.size() != GeometryFeature::kSize) {
                throw ParseError(where + ".box: expected 9 numbers");
            }
            GeometryFeature f;
            for (std::size_t k = 0; k < GeometryFeature::kSize; ++k) {
                if (!arr[k].is_number()) {
                    throw ParseError(where + ".box[" + std::to_string(k) + "]: not a number");
                }
                f.values[k] = arr[k].get<double>();
                if (!std::isfinite(f.values[k])) {
                    throw ParseError(where + ".box[" + std::to_string(k) + "]: not finite");
                }
            }
            p.segments.emplace_back(BoxSlot{f});
        } else {
            throw ParseError(where + ": expected {\"text\": string} or {\"box\": [9 numbers]}");
        }
    }
    const std::size_t slots = p.box_slot_count();
    if (slots == 0) {
        throw ParseError("prompt: no box slots");
    }
    p.history_len = slots - 1;
    if (texts.size() >= 2) {
        p.track_class_rendered = between(texts[0], kTrackPrefix, kTrackSuffix);
        p.det_class_rendered = between(texts[1], kCandPrefix, kCandSuffix);
    }
    return p;
}

} // namespace ovmot
