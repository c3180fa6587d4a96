#include "polyseg/io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace polyseg {

namespace {

constexpr unsigned char kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

std::uint32_t read_u32(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::string& out, const char type[4], const std::string& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_start = out.size();
    out.append(type, 4);
    out.append(data);
    const auto crc =
        crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_start), out.size() - crc_start);
    put_u32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

std::string read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_binary_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "rename to " + path + " failed: " + ec.message());
}

}  // namespace

InstanceMask read_mask_png(const std::string& path) {
    const std::string blob = read_binary_file(path);
    if (blob.size() < 8 || std::memcmp(blob.data(), kPngSignature, 8) != 0)
        throw Error(ErrorCode::ParseError, path + " is not a PNG file");

    const unsigned char* data = reinterpret_cast<const unsigned char*>(blob.data());
    std::size_t pos = 8;
    int width = 0, height = 0, bit_depth = 0, color_type = -1;
    std::string idat;
    bool seen_iend = false;

    while (pos + 8 <= blob.size() && !seen_iend) {
        const std::uint32_t length = read_u32(data + pos);
        if (pos + 12 + length > blob.size())
            throw Error(ErrorCode::ParseError, path + ": truncated chunk");
        const char* type = blob.data() + pos + 4;
        const unsigned char* payload = data + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (length != 13) throw Error(ErrorCode::ParseError, path + ": bad IHDR");
            width = static_cast<int>(read_u32(payload));
            height = static_cast<int>(read_u32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0)
                throw Error(ErrorCode::ParseError, path + ": interlaced PNG not supported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.append(reinterpret_cast<const char*>(payload), length);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + length;
    }

    if (width <= 0 || height <= 0) throw Error(ErrorCode::ParseError, path + ": missing IHDR");
    if (color_type != 0 || (bit_depth != 8 && bit_depth != 16))
        throw Error(ErrorCode::ParseError,
                    path + ": mask PNGs must be 8- or 16-bit grayscale");

    const std::size_t bpp = bit_depth == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(width) * bpp;
    std::vector<unsigned char> raw((stride + 1) * height);
    uLongf raw_size = static_cast<uLongf>(raw.size());
    const int rc = uncompress(raw.data(), &raw_size, reinterpret_cast<const Bytef*>(idat.data()),
                              static_cast<uLong>(idat.size()));
    if (rc != Z_OK || raw_size != raw.size())
        throw Error(ErrorCode::ParseError, path + ": corrupt PNG pixel data");

    InstanceMask mask;
    mask.width = width;
    mask.height = height;
    mask.pixels.resize(static_cast<std::size_t>(width) * height);

    std::vector<unsigned char> prev(stride, 0), cur(stride, 0);
    for (int y = 0; y < height; ++y) {
        const unsigned char filter = raw[(stride + 1) * y];
        const unsigned char* src = raw.data() + (stride + 1) * y + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= bpp ? cur[i - bpp] : 0;
            const int b = prev[i];
            const int c = i >= bpp ? prev[i - bpp] : 0;
            int value = src[i];
            switch (filter) {
                case 0: break;
                case 1: value += a; break;
                case 2: value += b; break;
                case 3: value += (a + b) / 2; break;
                case 4: value += paeth(a, b, c); break;
                default: throw Error(ErrorCode::ParseError, path + ": unknown PNG filter");
            }
            cur[i] = static_cast<unsigned char>(value & 0xff);
        }
        for (int x = 0; x < width; ++x) {
            const std::int32_t v = bpp == 2
                                       ? (static_cast<std::int32_t>(cur[2 * x]) << 8) | cur[2 * x + 1]
                                       : cur[x];
            mask.pixels[static_cast<std::size_t>(y) * width + x] = v;
        }
        std::swap(prev, cur);
    }
    return mask;
}

void write_mask_png(const InstanceMask& mask, const std::string& path) {
    if (mask.width <= 0 || mask.height <= 0)
        throw Error(ErrorCode::IoError, "mask has no pixels");

    std::int32_t max_id = 0;
    for (std::int32_t v : mask.pixels) max_id = std::max(max_id, v);
    if (max_id > 0xffff) throw Error(ErrorCode::IoError, "instance id exceeds 16-bit PNG range");
    const int bit_depth = max_id > 0xff ? 16 : 8;
    const std::size_t bpp = bit_depth == 16 ? 2 : 1;
    const std::size_t stride = static_cast<std::size_t>(mask.width) * bpp;

    std::string raw;
    raw.reserve((stride + 1) * mask.height);
    for (int y = 0; y < mask.height; ++y) {
        raw.push_back(0);  // filter: none
        for (int x = 0; x < mask.width; ++x) {
            const std::int32_t v = mask.pixels[static_cast<std::size_t>(y) * mask.width + x];
            if (bpp == 2) raw.push_back(static_cast<char>((v >> 8) & 0xff));
            raw.push_back(static_cast<char>(v & 0xff));
        }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK)
        throw Error(ErrorCode::IoError, "PNG compression failed");
    compressed.resize(bound);

    std::string ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(mask.width));
    put_u32(ihdr, static_cast<std::uint32_t>(mask.height));
    ihdr.push_back(static_cast<char>(bit_depth));
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // adaptive filters
    ihdr.push_back(0);  // no interlace

    std::string out(reinterpret_cast<const char*>(kPngSignature), 8);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", "");
    write_binary_file_atomic(path, out);
}

std::string label_file_text(const std::vector<LabelInstance>& instances) {
    std::string out;
    char buf[32];
    for (const LabelInstance& inst : instances) {
        out += std::to_string(inst.class_id);
        for (const Point2& v : inst.polygon.vertices) {
            std::snprintf(buf, sizeof(buf), " %.6f %.6f", v.x, v.y);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::vector<LabelInstance> parse_label_text(const std::string& text) {
    std::vector<LabelInstance> out;
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        LabelInstance inst;
        if (!(fields >> inst.class_id))
            throw Error(ErrorCode::ParseError, "label line " + std::to_string(line_no) +
                                                   ": missing class id");
        double x, y;
        while (fields >> x) {
            if (!(fields >> y))
                throw Error(ErrorCode::ParseError, "label line " + std::to_string(line_no) +
                                                       ": odd coordinate count");
            if (!std::isfinite(x) || !std::isfinite(y) || x < -1e-9 || x > 1.0 + 1e-9 ||
                y < -1e-9 || y > 1.0 + 1e-9)
                throw Error(ErrorCode::ParseError, "label line " + std::to_string(line_no) +
                                                       ": coordinate outside [0,1]");
            inst.polygon.vertices.push_back({x, y});
        }
        if (inst.polygon.size() < 3)
            throw Error(ErrorCode::ParseError,
                        "label line " + std::to_string(line_no) + ": fewer than 3 vertices");
        out.push_back(std::move(inst));
    }
    return out;
}

void write_label_file(const std::string& path, const std::vector<LabelInstance>& instances) {
    write_text_file_atomic(path, label_file_text(instances));
}

std::vector<LabelInstance> read_label_file(const std::string& path) {
    return parse_label_text(read_text_file(path));
}

std::vector<ImageRecord> parse_annotation_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("bad annotation JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("images") || !j["images"].is_array())
        throw Error(ErrorCode::ParseError, "annotation JSON must contain an \"images\" array");

    std::vector<ImageRecord> records;
    for (const auto& image : j["images"]) {
        ImageRecord rec;
        try {
            rec.id = image.at("id").get<std::string>();
            rec.width = image.at("width").get<int>();
            rec.height = image.at("height").get<int>();
            for (const auto& inst : image.value("instances", nlohmann::json::array())) {
                RecordInstance ri;
                ri.class_id = inst.at("class_id").get<int>();
                for (const auto& pt : inst.at("polygon")) {
                    if (!pt.is_array() || pt.size() != 2)
                        throw Error(ErrorCode::ParseError, "polygon points must be [x, y] pairs");
                    ri.polygon.vertices.push_back({pt[0].get<double>(), pt[1].get<double>()});
                }
                if (ri.polygon.size() < 3)
                    throw Error(ErrorCode::ParseError, "polygon needs at least 3 vertices");
                if (inst.contains("confidence")) ri.confidence = inst["confidence"].get<double>();
                rec.instances.push_back(std::move(ri));
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("bad annotation JSON: ") + e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::string annotation_json_text(const std::vector<ImageRecord>& records) {
    nlohmann::json images = nlohmann::json::array();
    for (const ImageRecord& rec : records) {
        nlohmann::json image;
        image["id"] = rec.id;
        image["width"] = rec.width;
        image["height"] = rec.height;
        nlohmann::json instances = nlohmann::json::array();
        for (const RecordInstance& inst : rec.instances) {
            nlohmann::json item;
            item["class_id"] = inst.class_id;
            nlohmann::json poly = nlohmann::json::array();
            for (const Point2& v : inst.polygon.vertices) poly.push_back({v.x, v.y});
            item["polygon"] = std::move(poly);
            if (inst.confidence) item["confidence"] = *inst.confidence;
            instances.push_back(std::move(item));
        }
        image["instances"] = std::move(instances);
        images.push_back(std::move(image));
    }
    nlohmann::json j;
    j["images"] = std::move(images);
    return j.dump(2);
}

std::vector<ImageRecord> read_annotation_json(const std::string& path) {
    return parse_annotation_json(read_text_file(path));
}

void write_annotation_json(const std::string& path, const std::vector<ImageRecord>& records) {
    write_text_file_atomic(path, annotation_json_text(records));
}

std::string svg_overlay(int width, int height, const std::vector<RecordInstance>& instances) {
    static const char* kPalette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3",
                                     "#ff7f00", "#a65628", "#f781bf", "#999999"};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\" stroke=\"black\"/>\n";
    char buf[64];
    for (const RecordInstance& inst : instances) {
        out << "  <polygon points=\"";
        for (std::size_t i = 0; i < inst.polygon.size(); ++i) {
            const Point2& v = inst.polygon.vertices[i];
            std::snprintf(buf, sizeof(buf), "%s%.3f,%.3f", i ? " " : "", v.x, v.y);
            out << buf;
        }
        out << "\" fill=\"none\" stroke=\"" << kPalette[inst.class_id % 8]
            << "\" stroke-width=\"1\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string read_text_file(const std::string& path) { return read_binary_file(path); }

void write_text_file_atomic(const std::string& path, const std::string& content) {
    write_binary_file_atomic(path, content);
}

}  // namespace polyseg
