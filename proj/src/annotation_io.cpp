#include "treering/annotation_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "treering/errors.hpp"

namespace treering {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoFailure("read failed on " + path.string());
    return buf.str();
}

RingShape parse_shape(const nlohmann::json& js, std::size_t index) {
    RingShape shape;
    if (js.contains("label") && js["label"].is_string())
        shape.label = js["label"].get<std::string>();

    if (!js.contains("points") || !js["points"].is_array())
        throw MalformedPoint("shape " + std::to_string(index) + ": missing points array");

    for (const auto& pt : js["points"]) {
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
            throw MalformedPoint("shape " + std::to_string(index) + ": point is not [x, y]");
        shape.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (shape.points.size() < 3)
        throw MalformedPoint("shape " + std::to_string(index) + ": fewer than 3 points");
    return shape;
}

}  // namespace

AnnotationFile parse_annotation(std::string_view json_text) {
    nlohmann::json js;
    try {
        js = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoFailure(std::string("invalid JSON: ") + e.what());
    }
    if (!js.is_object()) throw IoFailure("annotation root is not an object");
    if (!js.contains("shapes")) throw MissingShapesKey("missing required key \"shapes\"");
    if (!js["shapes"].is_array()) throw MissingShapesKey("\"shapes\" is not a list");

    AnnotationFile file;
    if (js.contains("imagePath") && js["imagePath"].is_string())
        file.meta.image_path = js["imagePath"].get<std::string>();
    if (js.contains("imageHeight") && js["imageHeight"].is_number())
        file.meta.image_height = js["imageHeight"].get<int>();
    if (js.contains("imageWidth") && js["imageWidth"].is_number())
        file.meta.image_width = js["imageWidth"].get<int>();
    if (js.contains("version") && js["version"].is_string())
        file.meta.version = js["version"].get<std::string>();
    if (js.contains("flags") && js["flags"].is_object()) {
        for (const auto& [key, value] : js["flags"].items())
            if (value.is_boolean()) file.flags[key] = value.get<bool>();
    }

    std::size_t index = 0;
    for (const auto& shape : js["shapes"])
        file.shapes.push_back(parse_shape(shape, index++));
    return file;
}

AnnotationFile load_annotation(const std::filesystem::path& path) {
    return parse_annotation(read_file(path));
}

std::string serialize_annotation(const std::vector<RingShape>& rings,
                                 const ImageMeta& meta) {
    using json = nlohmann::ordered_json;
    json js;
    js["imagePath"] = meta.image_path ? json(*meta.image_path) : json(nullptr);
    js["imageHeight"] = meta.image_height ? json(*meta.image_height) : json(nullptr);
    js["imageWidth"] = meta.image_width ? json(*meta.image_width) : json(nullptr);
    js["version"] = meta.version ? json(*meta.version) : json(nullptr);
    js["flags"] = json::object();
    js["imageData"] = nullptr;
    js["shapes"] = json::array();

    std::size_t index = 0;
    for (const RingShape& ring : rings) {
        if (ring.points.size() < 3)
            throw DegenerateRing("ring " + std::to_string(index) + " has fewer than 3 points");
        json shape;
        shape["label"] = ring.label ? json(*ring.label) : json(std::to_string(index + 1));
        json pts = json::array();
        for (const Point2& p : ring.points) pts.push_back({p.x, p.y});
        shape["points"] = std::move(pts);
        js["shapes"].push_back(std::move(shape));
        ++index;
    }
    return js.dump(2) + "\n";
}

void save_annotation(const std::filesystem::path& path,
                     const std::vector<RingShape>& rings,
                     const ImageMeta& meta) {
    const std::string text = serialize_annotation(rings, meta);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoFailure("write failed on " + path.string());
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_row(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

}  // namespace

std::map<std::string, PithRecord> parse_pith_csv(std::string_view text) {
    std::map<std::string, PithRecord> records;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (!header_seen) {  // first non-empty line is the header
            header_seen = true;
            continue;
        }
        const auto cells = split_csv_row(line);
        if (cells.size() < 3)
            throw MalformedRow("line " + std::to_string(line_no) + ": expected name,cx,cy");
        PithRecord rec;
        rec.section_name = cells[0];
        try {
            std::size_t used = 0;
            rec.cx = std::stod(cells[1], &used);
            if (used != cells[1].size()) throw std::invalid_argument("trailing");
            rec.cy = std::stod(cells[2], &used);
            if (used != cells[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw MalformedRow("line " + std::to_string(line_no) + ": non-numeric coordinate");
        }
        if (rec.section_name.empty())
            throw MalformedRow("line " + std::to_string(line_no) + ": empty section name");
        if (!records.emplace(rec.section_name, rec).second)
            throw DuplicateName("duplicate section \"" + rec.section_name + "\"");
    }
    return records;
}

std::map<std::string, PithRecord> load_pith_csv(const std::filesystem::path& path) {
    return parse_pith_csv(read_file(path));
}

}  // namespace treering
