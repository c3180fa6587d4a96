#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polyseg/contour.hpp"
#include "polyseg/grid.hpp"

namespace polyseg {

/// Single-channel PNG with integer instance ids (0 = background). 8-bit
/// grayscale is written when every id fits a byte, 16-bit otherwise; both
/// depths are accepted on read.
InstanceMask read_mask_png(const std::string& path);
void write_mask_png(const InstanceMask& mask, const std::string& path);

/// One instance per line: class id followed by 2N normalized coordinates,
/// serialized with 6 decimal places.
struct LabelInstance {
    int class_id = 0;
    Polygon polygon;  // normalized [0,1]
};

std::string label_file_text(const std::vector<LabelInstance>& instances);
std::vector<LabelInstance> parse_label_text(const std::string& text);
void write_label_file(const std::string& path, const std::vector<LabelInstance>& instances);
std::vector<LabelInstance> read_label_file(const std::string& path);

/// Annotation / detection JSON schema:
/// {"images": [{"id", "width", "height",
///              "instances": [{"class_id", "polygon": [[x,y],...], "confidence"?}]}]}
/// Polygon coordinates are pixels; confidence marks detections.
struct RecordInstance {
    int class_id = 0;
    Polygon polygon;  // pixel coordinates
    std::optional<double> confidence;
};

struct ImageRecord {
    std::string id;
    int width = 0;
    int height = 0;
    std::vector<RecordInstance> instances;
};

std::vector<ImageRecord> parse_annotation_json(const std::string& text);
std::string annotation_json_text(const std::vector<ImageRecord>& records);
std::vector<ImageRecord> read_annotation_json(const std::string& path);
void write_annotation_json(const std::string& path, const std::vector<ImageRecord>& records);

/// Polygon overlay as an SVG polyline drawing, one color per class.
std::string svg_overlay(int width, int height,
                        const std::vector<RecordInstance>& instances);

std::string read_text_file(const std::string& path);

/// Write-temp-then-rename so concurrent readers never see partial files.
void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace polyseg
