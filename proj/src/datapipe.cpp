#include "guire/datapipe.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace guire {

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool found = false;
        for (const char* k : known)
            if (it.key() == k) found = true;
        if (!found)
            throw DatapipeError("unknown field \"" + it.key() + "\" in " + where);
    }
}

bool target_in_bounds(const std::variant<BBox, Point>& target, const ScreenDims& dims) {
    if (const auto* b = std::get_if<BBox>(&target))
        return valid(*b) && b->x_max <= dims.width && b->y_max <= dims.height;
    const Point& p = std::get<Point>(target);
    return in_screen(dims, p);
}

json target_to_json(const std::variant<BBox, Point>& target) {
    if (const auto* b = std::get_if<BBox>(&target))
        return json{{"type", "bbox"}, {"coords", {b->x_min, b->y_min, b->x_max, b->y_max}}};
    const Point& p = std::get<Point>(target);
    return json{{"type", "point"}, {"coords", {p.x, p.y}}};
}

std::variant<BBox, Point> target_from_json(const json& j) {
    reject_unknown(j, {"type", "coords"}, "target");
    const std::string type = j.at("type").get<std::string>();
    const auto& c = j.at("coords");
    if (type == "bbox") {
        if (c.size() != 4) throw DatapipeError("bbox target needs 4 coords");
        return BBox{c[0].get<int64_t>(), c[1].get<int64_t>(), c[2].get<int64_t>(),
                    c[3].get<int64_t>()};
    }
    if (type == "point") {
        if (c.size() != 2) throw DatapipeError("point target needs 2 coords");
        return Point{c[0].get<int64_t>(), c[1].get<int64_t>()};
    }
    throw DatapipeError("unknown target type " + type);
}

}  // namespace

UnifiedGroundingRecord unify(const SourceRecord& record) {
    if (!valid(record.dims)) throw DatapipeError("unify: invalid image dims");
    if (!target_in_bounds(record.target, record.dims))
        throw DatapipeError("unify: target out of bounds");

    UnifiedGroundingRecord out;
    out.image = record.image;
    out.dims = record.dims;
    out.instruction = record.instruction;
    out.source = record.source;
    out.original_target = record.target;
    if (const auto* b = std::get_if<BBox>(&record.target)) {
        out.point = bbox_center(*b);
        out.bbox = *b;
    } else {
        out.point = std::get<Point>(record.target);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Composites

CompositeResult compose(const CompositeSpec& spec, const std::string& output_image_path) {
    if (spec.rows < 1 || spec.cols < 1)
        throw DatapipeError("compose: grid must be at least 1x1");
    if (spec.cells.size() != static_cast<size_t>(spec.rows) * spec.cols)
        throw DatapipeError("compose: need rows*cols cell records");

    // uniform slots: column width = max cell width in that column, row height
    // = max cell height in that row
    std::vector<int64_t> col_w(static_cast<size_t>(spec.cols), 0);
    std::vector<int64_t> row_h(static_cast<size_t>(spec.rows), 0);
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            const auto& cell = spec.cells[static_cast<size_t>(r) * spec.cols + c];
            if (!valid(cell.dims)) throw DatapipeError("compose: invalid cell dims");
            col_w[static_cast<size_t>(c)] = std::max(col_w[static_cast<size_t>(c)],
                                                     cell.dims.width);
            row_h[static_cast<size_t>(r)] = std::max(row_h[static_cast<size_t>(r)],
                                                     cell.dims.height);
        }
    }

    CompositeResult out;
    int64_t total_w = 0, total_h = 0;
    for (int64_t w : col_w) total_w += w;
    for (int64_t h : row_h) total_h += h;
    out.dims = ScreenDims{total_w, total_h};

    int64_t oy = 0;
    for (int r = 0; r < spec.rows; ++r) {
        int64_t ox = 0;
        for (int c = 0; c < spec.cols; ++c) {
            const size_t idx = static_cast<size_t>(r) * spec.cols + c;
            const auto& cell = spec.cells[idx];
            const Point offset{ox, oy};
            out.cells.push_back(CompositeCell{cell.image, offset, cell.dims});

            if (!target_in_bounds(cell.target, cell.dims)) {
                out.cell_errors.push_back("cell " + std::to_string(idx) +
                                          ": target out of bounds, annotation dropped");
            } else {
                CompositeAnnotation ann;
                ann.cell = static_cast<int>(idx);
                ann.instruction = cell.instruction;
                if (const auto* b = std::get_if<BBox>(&cell.target)) {
                    ann.bbox = remap_bbox(offset, *b);
                    ann.point = bbox_center(*ann.bbox);
                } else {
                    const Point p = std::get<Point>(cell.target);
                    ann.point = Point{p.x + offset.x, p.y + offset.y};
                }
                out.annotations.push_back(std::move(ann));
            }
            ox += col_w[static_cast<size_t>(c)];
        }
        oy += row_h[static_cast<size_t>(r)];
    }

    if (!output_image_path.empty()) {
        PpmImage canvas;
        canvas.width = total_w;
        canvas.height = total_h;
        canvas.rgb.assign(static_cast<size_t>(total_w) * total_h * 3, 0);
        bool any_pixels = false;
        for (size_t idx = 0; idx < spec.cells.size(); ++idx) {
            const auto& cell = spec.cells[idx];
            if (cell.image.empty()) continue;
            auto img = read_ppm(cell.image);
            if (!img) {
                out.cell_errors.push_back("cell " + std::to_string(idx) + ": unreadable ref " +
                                          cell.image + ", coordinate-only");
                continue;
            }
            if (img->width != cell.dims.width || img->height != cell.dims.height) {
                out.cell_errors.push_back("cell " + std::to_string(idx) +
                                          ": image dims disagree with record, coordinate-only");
                continue;
            }
            const Point off = out.cells[idx].offset;
            for (int64_t y = 0; y < img->height; ++y) {
                const size_t src = static_cast<size_t>(y) * img->width * 3;
                const size_t dst =
                    (static_cast<size_t>(y + off.y) * total_w + off.x) * 3;
                std::copy_n(img->rgb.begin() + static_cast<long>(src),
                            static_cast<size_t>(img->width) * 3,
                            canvas.rgb.begin() + static_cast<long>(dst));
            }
            any_pixels = true;
        }
        if (any_pixels) {
            write_ppm(output_image_path, canvas);
            out.image_path = output_image_path;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mixture sampling

std::vector<TaggedRecord> sample_mixture(const std::map<std::string, std::vector<json>>& streams,
                                         const MixtureWeights& weights, uint64_t seed, size_t n) {
    std::vector<std::string> tags;
    std::vector<double> w;
    for (const auto& [tag, weight] : weights.by_tag) {
        if (weight < 0.0) throw DatapipeError("sample_mixture: negative weight for " + tag);
        if (weight == 0.0) continue;
        if (!streams.count(tag))
            throw DatapipeError("sample_mixture: no stream for weighted tag " + tag);
        tags.push_back(tag);
        w.push_back(weight);
    }
    if (tags.empty()) throw DatapipeError("sample_mixture: no positive weights");

    std::mt19937_64 rng(seed);
    std::discrete_distribution<size_t> pick(w.begin(), w.end());
    std::map<std::string, size_t> cursor;
    std::vector<TaggedRecord> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const std::string& tag = tags[pick(rng)];
        const auto& stream = streams.at(tag);
        size_t& at = cursor[tag];
        if (at >= stream.size())
            throw ExhaustedError("sample_mixture: stream " + tag + " exhausted after " +
                                 std::to_string(at) + " items");
        out.push_back(TaggedRecord{tag, stream[at++]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSONL

JsonlReadResult read_jsonl(const std::string& path, const std::string& expected_schema,
                           OnBadLine on_bad_line) {
    std::ifstream in(path);
    if (!in) throw DatapipeError("cannot open " + path);

    JsonlReadResult out;
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            const JsonlLineError err{line_number, "malformed JSON object"};
            if (on_bad_line == OnBadLine::fail)
                throw DatapipeError(path + ":" + std::to_string(line_number) + ": " +
                                    err.message);
            out.errors.push_back(err);
            continue;
        }
        if (!j.contains("schema_version") || j.at("schema_version") != expected_schema)
            throw SchemaVersionMismatch(path + ":" + std::to_string(line_number) +
                                        ": expected schema_version " + expected_schema);
        out.records.push_back(std::move(j));
    }
    return out;
}

size_t write_jsonl(const std::string& path, const std::vector<json>& records) {
    std::ofstream outf(path, std::ios::trunc);
    if (!outf) throw DatapipeError("cannot write " + path);
    for (const json& r : records) outf << r.dump() << '\n';
    if (!outf) throw DatapipeError("write failed for " + path);
    return records.size();
}

// ---------------------------------------------------------------------------
// Record serialization

namespace {

json provenance_to_json(const SourceProvenance& s) {
    return json{{"dataset", s.dataset}, {"platform", s.platform}, {"kind", s.kind}};
}

SourceProvenance provenance_from_json(const json& j) {
    reject_unknown(j, {"dataset", "platform", "kind"}, "provenance");
    return SourceProvenance{j.at("dataset").get<std::string>(),
                            j.at("platform").get<std::string>(),
                            j.at("kind").get<std::string>()};
}

}  // namespace

json to_json(const UnifiedGroundingRecord& r) {
    json j;
    j["schema_version"] = kUnifiedGroundingSchema;
    j["image"] = r.image;
    j["width"] = r.dims.width;
    j["height"] = r.dims.height;
    j["instruction"] = r.instruction;
    j["point"] = {r.point.x, r.point.y};
    if (r.bbox)
        j["bbox"] = {r.bbox->x_min, r.bbox->y_min, r.bbox->x_max, r.bbox->y_max};
    else
        j["bbox"] = nullptr;
    j["provenance"] = provenance_to_json(r.source);
    j["original_target"] = target_to_json(r.original_target);
    return j;
}

UnifiedGroundingRecord unified_from_json(const json& j) {
    reject_unknown(j,
                   {"schema_version", "image", "width", "height", "instruction", "point", "bbox",
                    "provenance", "original_target"},
                   kUnifiedGroundingSchema);
    if (j.at("schema_version") != kUnifiedGroundingSchema)
        throw SchemaVersionMismatch("expected unified_grounding.v1");
    UnifiedGroundingRecord r;
    r.image = j.at("image").get<std::string>();
    r.dims = ScreenDims{j.at("width").get<int64_t>(), j.at("height").get<int64_t>()};
    r.instruction = j.at("instruction").get<std::string>();
    r.point = Point{j.at("point")[0].get<int64_t>(), j.at("point")[1].get<int64_t>()};
    if (!j.at("bbox").is_null()) {
        const auto& b = j.at("bbox");
        r.bbox = BBox{b[0].get<int64_t>(), b[1].get<int64_t>(), b[2].get<int64_t>(),
                      b[3].get<int64_t>()};
    }
    r.source = provenance_from_json(j.at("provenance"));
    r.original_target = target_from_json(j.at("original_target"));
    return r;
}

json to_json(const CompositeResult& r) {
    json j;
    j["schema_version"] = kCompositeSchema;
    j["width"] = r.dims.width;
    j["height"] = r.dims.height;
    j["image"] = r.image_path ? json(*r.image_path) : json(nullptr);
    j["cells"] = json::array();
    for (const auto& c : r.cells)
        j["cells"].push_back({{"source_image", c.source_image},
                              {"offset", {c.offset.x, c.offset.y}},
                              {"width", c.dims.width},
                              {"height", c.dims.height}});
    j["annotations"] = json::array();
    for (const auto& a : r.annotations) {
        json ja = {{"cell", a.cell},
                   {"instruction", a.instruction},
                   {"point", {a.point.x, a.point.y}}};
        ja["bbox"] = a.bbox ? json({a.bbox->x_min, a.bbox->y_min, a.bbox->x_max, a.bbox->y_max})
                            : json(nullptr);
        j["annotations"].push_back(ja);
    }
    return j;
}

json to_json(const TrainingRecord& r) {
    json j;
    j["schema_version"] = kNavRecordSchema;
    j["task_id"] = r.task_id;
    j["step_idx"] = r.step_idx;
    json sections;
    sections["plan"] = r.sections.plan ? json(*r.sections.plan) : json(nullptr);
    sections["think"] = r.sections.think ? json(*r.sections.think) : json(nullptr);
    sections["reflect"] = r.sections.reflect ? json(*r.sections.reflect) : json(nullptr);
    j["sections"] = sections;
    j["action_text"] = r.action_text;
    j["screen_digest"] = r.screen_digest;
    j["split_tag"] = r.split_tag;
    return j;
}

TrainingRecord training_record_from_json(const json& j) {
    reject_unknown(j,
                   {"schema_version", "task_id", "step_idx", "sections", "action_text",
                    "screen_digest", "split_tag"},
                   kNavRecordSchema);
    if (j.at("schema_version") != kNavRecordSchema)
        throw SchemaVersionMismatch("expected nav_record.v1");
    TrainingRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.step_idx = j.at("step_idx").get<int>();
    const auto& s = j.at("sections");
    reject_unknown(s, {"plan", "think", "reflect"}, "sections");
    if (!s.at("plan").is_null()) r.sections.plan = s.at("plan").get<std::string>();
    if (!s.at("think").is_null()) r.sections.think = s.at("think").get<std::string>();
    if (!s.at("reflect").is_null()) r.sections.reflect = s.at("reflect").get<std::string>();
    r.action_text = j.at("action_text").get<std::string>();
    r.screen_digest = j.at("screen_digest").get<std::string>();
    r.split_tag = j.at("split_tag").get<std::string>();
    return r;
}

json to_json(const DropLogEntry& e) {
    return json{{"schema_version", kDropLogSchema},
                {"trajectory_id", e.trajectory_id},
                {"reason", e.reason}};
}

json mixture_manifest(const MixtureWeights& weights, uint64_t seed, size_t n,
                      const std::map<std::string, size_t>& realized_counts) {
    json j;
    j["schema_version"] = kMixtureManifestSchema;
    j["weights"] = json::object();
    for (const auto& [tag, w] : weights.by_tag) j["weights"][tag] = w;
    j["seed"] = seed;
    j["n"] = n;
    j["counts"] = json::object();
    for (const auto& [tag, c] : realized_counts) j["counts"][tag] = c;
    return j;
}

// ---------------------------------------------------------------------------
// PPM

std::optional<PpmImage> read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string magic;
    in >> magic;
    if (magic != "P6") return std::nullopt;
    int64_t w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    if (!in || w <= 0 || h <= 0 || maxval != 255) return std::nullopt;
    in.get();  // single whitespace after the header
    PpmImage img;
    img.width = w;
    img.height = h;
    img.rgb.resize(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<long>(img.rgb.size()));
    if (in.gcount() != static_cast<long>(img.rgb.size())) return std::nullopt;
    return img;
}

void write_ppm(const std::string& path, const PpmImage& image) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatapipeError("cannot write " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              static_cast<long>(image.rgb.size()));
    if (!out) throw DatapipeError("write failed for " + path);
}

}  // namespace guire
