#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "guire/geometry.hpp"
#include "guire/rollout.hpp"

namespace guire {

// Dataset unification and persistence. All JSONL lines carry an explicit
// schema_version; unknown fields are rejected. Schemas: unified_grounding.v1,
// nav_record.v1, composite.v1, mixture_manifest.v1, drop_log.v1.

using json = nlohmann::ordered_json;

struct DatapipeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaVersionMismatch : DatapipeError {
    using DatapipeError::DatapipeError;
};

struct SourceProvenance {
    std::string dataset;
    std::string platform;      // mobile | desktop | web
    std::string kind;          // grounding | navigation
};

struct SourceRecord {
    std::string image;  // path or opaque ref
    ScreenDims dims;
    std::string instruction;
    std::variant<BBox, Point> target;
    SourceProvenance source;
};

struct UnifiedGroundingRecord {
    std::string image;
    ScreenDims dims;
    std::string instruction;
    Point point;
    std::optional<BBox> bbox;  // retained when the source had one
    SourceProvenance source;
    std::variant<BBox, Point> original_target;
};

// Box targets map to their geometric centers; point targets pass through.
// Throws DatapipeError("out of bounds") when the target exceeds the dims.
UnifiedGroundingRecord unify(const SourceRecord& record);

struct CompositeSpec {
    int rows = 2;
    int cols = 2;
    std::vector<SourceRecord> cells;  // row-major, rows*cols entries
};

struct CompositeCell {
    std::string source_image;
    Point offset;
    ScreenDims dims;
};

struct CompositeAnnotation {
    int cell = 0;
    std::string instruction;
    Point point;                // remapped into composite coordinates
    std::optional<BBox> bbox;   // remapped when the source had a box
};

struct CompositeResult {
    ScreenDims dims;
    std::vector<CompositeCell> cells;
    std::vector<CompositeAnnotation> annotations;
    std::optional<std::string> image_path;  // set when pixel bytes were written
    std::vector<std::string> cell_errors;   // per-cell read failures, batch continues
};

// Row-major packing into uniform slots sized by per-column max width and
// per-row max height; cells are top-left aligned inside their slots and every
// annotation is translated by its cell offset. Pixel bytes are composited
// only for readable PPM (P6) refs; otherwise the result stays coordinate-only.
CompositeResult compose(const CompositeSpec& spec, const std::string& output_image_path = {});

struct MixtureWeights {
    std::map<std::string, double> by_tag;  // nonnegative, at least one positive
};

struct TaggedRecord {
    std::string tag;
    json record;
};

struct ExhaustedError : DatapipeError {
    using DatapipeError::DatapipeError;
};

// Deterministic weighted interleave of n records: each draw picks a tag with
// probability proportional to its weight and takes that stream's next item
// (sampling without replacement within streams). Throws ExhaustedError when
// the chosen stream runs dry.
std::vector<TaggedRecord> sample_mixture(const std::map<std::string, std::vector<json>>& streams,
                                         const MixtureWeights& weights, uint64_t seed, size_t n);

struct JsonlLineError {
    size_t line_number = 0;  // 1-based
    std::string message;
};

struct JsonlReadResult {
    std::vector<json> records;
    std::vector<JsonlLineError> errors;  // populated in skip mode
};

enum class OnBadLine { skip, fail };

// Every line must be a JSON object whose schema_version equals
// expected_schema (SchemaVersionMismatch otherwise). Malformed lines are
// reported with their line numbers and either skipped or fail fast.
JsonlReadResult read_jsonl(const std::string& path, const std::string& expected_schema,
                           OnBadLine on_bad_line = OnBadLine::fail);

size_t write_jsonl(const std::string& path, const std::vector<json>& records);

// Record (de)serialization. from_* reject unknown fields.
json to_json(const UnifiedGroundingRecord& r);
UnifiedGroundingRecord unified_from_json(const json& j);
json to_json(const CompositeResult& r);
json to_json(const TrainingRecord& r);
TrainingRecord training_record_from_json(const json& j);
json to_json(const DropLogEntry& e);
json mixture_manifest(const MixtureWeights& weights, uint64_t seed, size_t n,
                      const std::map<std::string, size_t>& realized_counts);

inline constexpr const char* kUnifiedGroundingSchema = "unified_grounding.v1";
inline constexpr const char* kNavRecordSchema = "nav_record.v1";
inline constexpr const char* kCompositeSchema = "composite.v1";
inline constexpr const char* kMixtureManifestSchema = "mixture_manifest.v1";
inline constexpr const char* kDropLogSchema = "drop_log.v1";

// Minimal PPM (P6, 8-bit) image support for composite pixel tests.
struct PpmImage {
    int64_t width = 0;
    int64_t height = 0;
    std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major
};

std::optional<PpmImage> read_ppm(const std::string& path);
void write_ppm(const std::string& path, const PpmImage& image);

}  // namespace guire
