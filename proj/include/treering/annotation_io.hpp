#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treering/geometry.hpp"

namespace treering {

/// One closed ring polygon. The first and last points are implicitly
/// connected; coordinates are (x = horizontal, y = vertical) pixels.
struct RingShape {
    std::optional<std::string> label;
    std::vector<Point2> points;
};

struct ImageMeta {
    std::optional<std::string> image_path;
    std::optional<int> image_height;
    std::optional<int> image_width;
    std::optional<std::string> version;
};

/// Parsed annotation file in the Labelme polygon layout.
/// Only the documented keys are read; anything else is ignored.
struct AnnotationFile {
    ImageMeta meta;
    std::map<std::string, bool> flags;
    std::vector<RingShape> shapes;
};

AnnotationFile parse_annotation(std::string_view json_text);
AnnotationFile load_annotation(const std::filesystem::path& path);

/// Serializes rings to the same layout. imageData is always null and
/// unknown keys from a previous load are not carried over.
std::string serialize_annotation(const std::vector<RingShape>& rings,
                                 const ImageMeta& meta = {});
void save_annotation(const std::filesystem::path& path,
                     const std::vector<RingShape>& rings,
                     const ImageMeta& meta = {});

struct PithRecord {
    std::string section_name;
    double cx = 0.0;
    double cy = 0.0;
};

/// Pith-location table, comma-separated with a header row:
///   name,cx,cy
/// One row per cross-section; duplicate names are an error.
std::map<std::string, PithRecord> parse_pith_csv(std::string_view text);
std::map<std::string, PithRecord> load_pith_csv(const std::filesystem::path& path);

}  // namespace treering
