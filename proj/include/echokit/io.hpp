#pragma once

// Grayscale image files: PGM (P2 ASCII / P5 binary, maxval 255) and 8-bit
// grayscale PNG. Readers detect the format from the leading bytes; writers
// pick it from the file extension (".png" -> PNG, anything else -> P5 PGM).

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "echokit/error.hpp"
#include "echokit/image.hpp"

namespace echokit {

/// Raw 8-bit raster as stored on disk.
struct Raster8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw IoError("cannot open '" + path.string() + "': no such file");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

// ---------------------------------------------------------------- PGM

class PgmHeaderReader {
public:
    PgmHeaderReader(const std::vector<std::uint8_t>& bytes, std::string name)
        : bytes_(bytes), name_(std::move(name)) {}

    // Whitespace and '#' comments may separate header fields.
    long next_int(const char* field) {
        skip_separators();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw CorruptFile(name_ + ": malformed PGM header (" + field + ")");
        }
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000L) {
                throw CorruptFile(name_ + ": PGM " + field + " out of range");
            }
            ++pos_;
        }
        return value;
    }

    void skip_single_whitespace() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw CorruptFile(name_ + ": missing separator after PGM header");
        }
        ++pos_;
    }

    void skip_separators() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t position() const { return pos_; }
    void seek(std::size_t pos) { pos_ = pos; }
    bool at_end() const { return pos_ >= bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string name_;
    std::size_t pos_ = 2;
};

inline Raster8 decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    const bool ascii = bytes[1] == '2';
    PgmHeaderReader reader(bytes, name);
    const long width = reader.next_int("width");
    const long height = reader.next_int("height");
    const long maxval = reader.next_int("maxval");
    if (width < 1 || height < 1) {
        throw CorruptFile(name + ": PGM dimensions must be positive");
    }
    if (maxval < 1 || maxval > 65535) {
        throw CorruptFile(name + ": invalid PGM maxval " + std::to_string(maxval));
    }
    if (maxval != 255) {
        throw UnsupportedFormat(name + ": only 8-bit PGM with maxval 255 is supported (got " +
                                std::to_string(maxval) + ")");
    }
    Raster8 raster;
    raster.width = static_cast<int>(width);
    raster.height = static_cast<int>(height);
    const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (count > bytes.size()) {
        throw CorruptFile(name + ": truncated PGM body (header declares " + std::to_string(count) + " pixels)");
    }
    raster.pixels.resize(count);
    if (ascii) {
        for (std::size_t i = 0; i < count; ++i) {
            reader.skip_separators();
            if (reader.at_end()) {
                throw CorruptFile(name + ": truncated PGM body (" + std::to_string(i) + " of " +
                                  std::to_string(count) + " pixels)");
            }
            const long v = reader.next_int("pixel");
            if (v > 255) {
                throw CorruptFile(name + ": PGM pixel value exceeds maxval");
            }
            raster.pixels[i] = static_cast<std::uint8_t>(v);
        }
    } else {
        reader.skip_single_whitespace();
        const std::size_t start = reader.position();
        if (bytes.size() - start < count) {
            throw CorruptFile(name + ": truncated PGM body (" + std::to_string(bytes.size() - start) +
                              " of " + std::to_string(count) + " bytes)");
        }
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(start), count, raster.pixels.begin());
    }
    return raster;
}

inline std::vector<std::uint8_t> encode_pgm(const Raster8& raster) {
    const std::string header =
        "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), raster.pixels.begin(), raster.pixels.end());
    return out;
}

// ---------------------------------------------------------------- PNG

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

inline void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

inline Raster8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    std::size_t pos = kPngSignature.size();
    bool have_header = false;
    bool have_end = false;
    Raster8 raster;
    std::vector<std::uint8_t> compressed;

    while (!have_end) {
        if (bytes.size() - pos < 12) {
            throw CorruptFile(name + ": truncated PNG chunk stream");
        }
        const std::uint32_t length = read_be32(&bytes[pos]);
        if (length > bytes.size() - pos - 12) {
            throw CorruptFile(name + ": PNG chunk length exceeds file size");
        }
        const std::uint8_t* type = &bytes[pos + 4];
        const std::uint8_t* data = &bytes[pos + 8];
        const std::uint32_t stored_crc = read_be32(data + length);
        const auto computed_crc = static_cast<std::uint32_t>(
            crc32(crc32(0L, nullptr, 0), type, static_cast<uInt>(length + 4)));
        if (stored_crc != computed_crc) {
            throw CorruptFile(name + ": PNG chunk CRC mismatch");
        }
        const std::string_view tag(reinterpret_cast<const char*>(type), 4);
        if (tag == "IHDR") {
            if (length != 13) {
                throw CorruptFile(name + ": malformed PNG IHDR");
            }
            const std::uint32_t w = read_be32(data);
            const std::uint32_t h = read_be32(data + 4);
            const int depth = data[8];
            const int color = data[9];
            const int interlace = data[12];
            if (w == 0 || h == 0 || w > (1u << 24) || h > (1u << 24)) {
                throw CorruptFile(name + ": invalid PNG dimensions");
            }
            if (color != 0) {
                throw UnsupportedFormat(name + ": only grayscale PNG is supported (color type " +
                                        std::to_string(color) + ")");
            }
            if (depth != 8) {
                throw UnsupportedFormat(name + ": only 8-bit PNG is supported (bit depth " +
                                        std::to_string(depth) + ")");
            }
            if (data[10] != 0 || data[11] != 0) {
                throw CorruptFile(name + ": unknown PNG compression or filter method");
            }
            if (interlace != 0) {
                throw UnsupportedFormat(name + ": interlaced PNG is not supported");
            }
            raster.width = static_cast<int>(w);
            raster.height = static_cast<int>(h);
            have_header = true;
        } else if (tag == "IDAT") {
            if (!have_header) {
                throw CorruptFile(name + ": PNG IDAT before IHDR");
            }
            compressed.insert(compressed.end(), data, data + length);
        } else if (tag == "IEND") {
            have_end = true;
        } else if ((type[0] & 0x20) == 0) {
            throw UnsupportedFormat(name + ": unknown critical PNG chunk '" + std::string(tag) + "'");
        }
        pos += 12 + length;
    }
    if (!have_header) {
        throw CorruptFile(name + ": PNG without IHDR");
    }

    const std::size_t stride = static_cast<std::size_t>(raster.width);
    const std::size_t expected = (stride + 1) * static_cast<std::size_t>(raster.height);
    // Deflate cannot expand data by more than about 1032:1.
    if (expected / 1032 > compressed.size() + 1) {
        throw CorruptFile(name + ": PNG image data is too short for the declared size");
    }
    std::vector<std::uint8_t> filtered(expected);
    uLongf produced = static_cast<uLongf>(expected);
    const int rc = uncompress(filtered.data(), &produced, compressed.data(),
                              static_cast<uLong>(compressed.size()));
    if (rc != Z_OK || produced != expected) {
        throw CorruptFile(name + ": PNG image data does not inflate to the declared size");
    }

    raster.pixels.assign(stride * static_cast<std::size_t>(raster.height), 0);
    for (std::size_t row = 0; row < static_cast<std::size_t>(raster.height); ++row) {
        const std::uint8_t filter = filtered[row * (stride + 1)];
        const std::uint8_t* in = &filtered[row * (stride + 1) + 1];
        std::uint8_t* out = &raster.pixels[row * stride];
        const std::uint8_t* up = row > 0 ? &raster.pixels[(row - 1) * stride] : nullptr;
        for (std::size_t x = 0; x < stride; ++x) {
            const int a = x > 0 ? out[x - 1] : 0;
            const int b = up ? up[x] : 0;
            const int c = (up && x > 0) ? up[x - 1] : 0;
            int predicted = 0;
            switch (filter) {
                case 0: predicted = 0; break;
                case 1: predicted = a; break;
                case 2: predicted = b; break;
                case 3: predicted = (a + b) / 2; break;
                case 4: predicted = paeth(a, b, c); break;
                default: throw CorruptFile(name + ": invalid PNG filter type");
            }
            out[x] = static_cast<std::uint8_t>(in[x] + predicted);
        }
    }
    return raster;
}

inline void append_png_chunk(std::vector<std::uint8_t>& out, const char* tag,
                             const std::vector<std::uint8_t>& payload) {
    append_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t type_start = out.size();
    out.insert(out.end(), tag, tag + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(crc32(0L, nullptr, 0), &out[type_start],
                           static_cast<uInt>(payload.size() + 4));
    append_be32(out, static_cast<std::uint32_t>(crc));
}

inline std::vector<std::uint8_t> encode_png(const Raster8& raster) {
    const auto stride = static_cast<std::size_t>(raster.width);
    std::vector<std::uint8_t> filtered;
    filtered.reserve((stride + 1) * static_cast<std::size_t>(raster.height));
    for (std::size_t row = 0; row < static_cast<std::size_t>(raster.height); ++row) {
        filtered.push_back(0);
        const auto begin = raster.pixels.begin() + static_cast<std::ptrdiff_t>(row * stride);
        filtered.insert(filtered.end(), begin, begin + static_cast<std::ptrdiff_t>(stride));
    }
    uLongf bound = compressBound(static_cast<uLong>(filtered.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, filtered.data(), static_cast<uLong>(filtered.size()), 9) !=
        Z_OK) {
        throw Error("PNG compression failed");
    }
    compressed.resize(bound);

    std::vector<std::uint8_t> header;
    append_be32(header, static_cast<std::uint32_t>(raster.width));
    append_be32(header, static_cast<std::uint32_t>(raster.height));
    header.insert(header.end(), {8, 0, 0, 0, 0});

    std::vector<std::uint8_t> out(kPngSignature.begin(), kPngSignature.end());
    append_png_chunk(out, "IHDR", header);
    append_png_chunk(out, "IDAT", compressed);
    append_png_chunk(out, "IEND", {});
    return out;
}

inline bool has_png_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png";
}

}  // namespace detail

inline Raster8 load_raster(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    const std::string name = path.string();
    if (bytes.size() >= detail::kPngSignature.size() &&
        std::equal(detail::kPngSignature.begin(), detail::kPngSignature.end(), bytes.begin())) {
        return detail::decode_png(bytes, name);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        if (bytes[1] == '2' || bytes[1] == '5') {
            return detail::decode_pgm(bytes, name);
        }
        if (bytes[1] >= '1' && bytes[1] <= '7') {
            throw UnsupportedFormat(name + ": only grayscale PGM (P2/P5) is supported, got P" +
                                    std::string(1, static_cast<char>(bytes[1])));
        }
    }
    throw UnsupportedFormat(name + ": not a PGM or PNG file");
}

inline void save_raster(const Raster8& raster, const std::filesystem::path& path) {
    const auto parent = path.parent_path();
    std::error_code ec;
    if (!parent.empty() && !std::filesystem::is_directory(parent, ec)) {
        throw IoError("cannot write '" + path.string() + "': directory '" + parent.string() +
                      "' does not exist");
    }
    detail::write_file_bytes(path, detail::has_png_extension(path) ? detail::encode_png(raster)
                                                                    : detail::encode_pgm(raster));
}

/// Intensities become value / 255.
inline GrayImage load_image(const std::filesystem::path& path) {
    const Raster8 raster = load_raster(path);
    std::vector<double> data(raster.pixels.size());
    std::transform(raster.pixels.begin(), raster.pixels.end(), data.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
    return GrayImage(raster.width, raster.height, std::move(data));
}

inline Raster8 to_raster(const GrayImage& img) {
    Raster8 raster{img.width(), img.height(), std::vector<std::uint8_t>(img.size())};
    auto src = img.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        raster.pixels[i] = static_cast<std::uint8_t>(std::lround(src[i] * 255.0));
    }
    return raster;
}

inline void save_image(const GrayImage& img, const std::filesystem::path& path) {
    save_raster(to_raster(img), path);
}

/**
 * Masks are stored with class c at gray level round(c * 255 / (K-1)),
 * K = number of classes. Reading maps the sorted distinct gray levels of
 * any 8-bit image back to ids 0..K-1, so hand-painted masks work too.
 */
inline void save_mask(const LabelMask& mask, const std::filesystem::path& path, int class_count = 0) {
    detail::require(class_count == 0 || class_count >= mask.class_count(),
                    "class count is smaller than the largest id in the mask");
    const int classes = std::max(2, std::max(class_count, mask.class_count()));
    Raster8 raster{mask.width(), mask.height(), std::vector<std::uint8_t>(mask.size())};
    auto labels = mask.values();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        detail::require(labels[i] < 256, "mask class id too large for an 8-bit file");
        raster.pixels[i] = static_cast<std::uint8_t>(
            std::lround(labels[i] * 255.0 / static_cast<double>(classes - 1)));
    }
    save_raster(raster, path);
}

inline LabelMask load_mask(const std::filesystem::path& path) {
    const Raster8 raster = load_raster(path);
    std::array<int, 256> id{};
    id.fill(-1);
    for (auto v : raster.pixels) id[v] = 0;
    int next = 0;
    for (int& slot : id) {
        if (slot == 0) slot = next++;
    }
    std::vector<int> labels(raster.pixels.size());
    std::transform(raster.pixels.begin(), raster.pixels.end(), labels.begin(),
                   [&](std::uint8_t v) { return id[v]; });
    return LabelMask(raster.width, raster.height, std::move(labels));
}

}  // namespace echokit
