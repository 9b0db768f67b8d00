// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Raster file I/O. Two formats are supported:
//  - TIFF: uncompressed striped files, uint8/uint16/float32, any band count,
//    chunky or planar layout. GeoTIFF/GDAL tags are carried through as opaque
//    payloads so georeferencing survives a read->write round trip. Tiled or
//    compressed TIFFs are rejected with a clear message.
//  - PNG: 8-bit gray/RGB/RGBA (read), gray/RGB (write), via zlib.
// Pixel data is held as float32 (C,H,W); masks use {0,255} on disk mapped to
// {0,1} in memory.

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fcdgan/tensor.hpp"

namespace fcdgan::io {

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class PixelType { kU8, kU16, kF32 };

/// Opaque TIFF tag payload (georeferencing passthrough).
struct TagBlob {
    std::uint16_t tag = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::vector<std::uint8_t> payload;
};

struct Raster {
    Tensor<float> data;  // (C,H,W)
    PixelType source_type = PixelType::kF32;
    std::vector<TagBlob> geo_tags;  // preserved verbatim on write

    int bands() const { return data.dim(0); }
    int height() const { return data.dim(1); }
    int width() const { return data.dim(2); }
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    f.seekg(0, std::ios::end);
    const auto n = static_cast<std::size_t>(f.tellg());
    f.seekg(0);
    std::vector<std::uint8_t> buf(n);
    if (n && !f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n)))
        throw IoError("cannot read " + path);
    return buf;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& buf) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed: " + path);
}

class ByteReader {
  public:
    ByteReader(const std::vector<std::uint8_t>& buf, bool big_endian)
        : buf_(buf), big_(big_endian) {}

    std::uint16_t u16(std::size_t off) const {
        check(off, 2);
        return big_ ? static_cast<std::uint16_t>(buf_[off] << 8 | buf_[off + 1])
                    : static_cast<std::uint16_t>(buf_[off + 1] << 8 | buf_[off]);
    }
    std::uint32_t u32(std::size_t off) const {
        check(off, 4);
        if (big_)
            return (std::uint32_t(buf_[off]) << 24) | (std::uint32_t(buf_[off + 1]) << 16) |
                   (std::uint32_t(buf_[off + 2]) << 8) | buf_[off + 3];
        return (std::uint32_t(buf_[off + 3]) << 24) | (std::uint32_t(buf_[off + 2]) << 16) |
               (std::uint32_t(buf_[off + 1]) << 8) | buf_[off];
    }
    const std::uint8_t* at(std::size_t off, std::size_t n) const {
        check(off, n);
        return buf_.data() + off;
    }
    bool big() const { return big_; }
    std::size_t size() const { return buf_.size(); }

  private:
    void check(std::size_t off, std::size_t n) const {
        if (off + n > buf_.size()) throw IoError("TIFF: truncated file");
    }
    const std::vector<std::uint8_t>& buf_;
    bool big_;
};

inline std::size_t tiff_type_size(std::uint16_t type) {
    switch (type) {
        case 1:
        case 2:
        case 6:
        case 7: return 1;
        case 3:
        case 8: return 2;
        case 4:
        case 9:
        case 11: return 4;
        case 5:
        case 10:
        case 12: return 8;
        default: return 0;
    }
}

struct IfdEntry {
    std::uint16_t tag = 0, type = 0;
    std::uint32_t count = 0;
    std::size_t data_off = 0;  // offset of the payload in the file buffer
};

}  // namespace detail

// ---------------------------------------------------------------------------
// TIFF
// ---------------------------------------------------------------------------

inline Raster read_tiff(const std::string& path) {
    using namespace detail;
    const auto buf = read_file(path);
    if (buf.size() < 8) throw IoError(path + ": not a TIFF");
    const bool big = buf[0] == 'M' && buf[1] == 'M';
    if (!big && !(buf[0] == 'I' && buf[1] == 'I')) throw IoError(path + ": not a TIFF");
    ByteReader r(buf, big);
    if (r.u16(2) != 42) throw IoError(path + ": unsupported TIFF magic (maybe BigTIFF)");

    const std::uint32_t ifd_off = r.u32(4);
    const std::uint16_t n_entries = r.u16(ifd_off);
    std::vector<IfdEntry> entries;
    for (int i = 0; i < n_entries; ++i) {
        const std::size_t e = ifd_off + 2 + static_cast<std::size_t>(i) * 12;
        IfdEntry ent;
        ent.tag = r.u16(e);
        ent.type = r.u16(e + 2);
        ent.count = r.u32(e + 4);
        const std::size_t bytes = tiff_type_size(ent.type) * ent.count;
        ent.data_off = bytes <= 4 ? e + 8 : r.u32(e + 8);
        entries.push_back(ent);
    }

    auto find = [&](std::uint16_t tag) -> const IfdEntry* {
        for (const auto& e : entries)
            if (e.tag == tag) return &e;
        return nullptr;
    };
    auto scalar = [&](std::uint16_t tag, std::uint32_t fallback, bool required = false) -> std::uint32_t {
        const IfdEntry* e = find(tag);
        if (!e) {
            if (required) throw IoError(path + ": missing TIFF tag " + std::to_string(tag));
            return fallback;
        }
        return e->type == 3 ? r.u16(e->data_off) : r.u32(e->data_off);
    };
    auto values = [&](const IfdEntry* e) {
        std::vector<std::uint32_t> v;
        if (!e) return v;
        for (std::uint32_t i = 0; i < e->count; ++i)
            v.push_back(e->type == 3 ? r.u16(e->data_off + 2 * i) : r.u32(e->data_off + 4 * i));
        return v;
    };

    const std::uint32_t width = scalar(256, 0, true);
    const std::uint32_t height = scalar(257, 0, true);
    const std::uint32_t compression = scalar(259, 1);
    if (compression != 1)
        throw IoError(path + ": compressed TIFF (compression=" + std::to_string(compression) +
                      ") not supported; re-export uncompressed");
    if (find(322) || find(323)) throw IoError(path + ": tiled TIFF not supported; re-export striped");
    const std::uint32_t spp = scalar(277, 1);
    const std::uint32_t planar = scalar(284, 1);
    const std::uint32_t rows_per_strip = scalar(278, height);
    const auto bits = values(find(258));
    const std::uint32_t bps = bits.empty() ? 8 : bits[0];
    for (auto b : bits)
        if (b != bps) throw IoError(path + ": mixed bits-per-sample not supported");
    const auto formats = values(find(339));
    const std::uint32_t fmt = formats.empty() ? 1 : formats[0];

    PixelType ptype;
    if (bps == 8 && fmt == 1)
        ptype = PixelType::kU8;
    else if (bps == 16 && fmt == 1)
        ptype = PixelType::kU16;
    else if (bps == 32 && fmt == 3)
        ptype = PixelType::kF32;
    else
        throw IoError(path + ": unsupported sample layout (bits=" + std::to_string(bps) +
                      ", format=" + std::to_string(fmt) + ")");

    const auto offsets = values(find(273));
    const auto counts = values(find(279));
    if (offsets.empty()) throw IoError(path + ": no strip offsets");

    // gather raw sample stream(s)
    const std::size_t sample_bytes = bps / 8;
    Raster out;
    out.source_type = ptype;
    out.data = Tensor<float>({static_cast<int>(spp), static_cast<int>(height), static_cast<int>(width)});

    auto read_sample = [&](std::size_t off) -> float {
        const std::uint8_t* p = r.at(off, sample_bytes);
        if (ptype == PixelType::kU8) return static_cast<float>(*p);
        if (ptype == PixelType::kU16) {
            return static_cast<float>(r.big() ? (p[0] << 8 | p[1]) : (p[1] << 8 | p[0]));
        }
        std::uint32_t u = r.big() ? (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                                        (std::uint32_t(p[2]) << 8) | p[3]
                                  : (std::uint32_t(p[3]) << 24) | (std::uint32_t(p[2]) << 16) |
                                        (std::uint32_t(p[1]) << 8) | p[0];
        float f;
        std::memcpy(&f, &u, 4);
        return f;
    };

    if (planar == 1) {
        // chunky: strips hold interleaved pixels
        std::uint32_t row = 0;
        for (std::size_t s = 0; s < offsets.size(); ++s) {
            const std::uint32_t rows_here = std::min(rows_per_strip, height - row);
            std::size_t off = offsets[s];
            (void)counts;
            for (std::uint32_t i = 0; i < rows_here; ++i, ++row)
                for (std::uint32_t j = 0; j < width; ++j)
                    for (std::uint32_t c = 0; c < spp; ++c, off += sample_bytes)
                        out.data.at3(static_cast<int>(c), static_cast<int>(row), static_cast<int>(j)) =
                            read_sample(off);
        }
    } else if (planar == 2) {
        const std::size_t strips_per_band = (height + rows_per_strip - 1) / rows_per_strip;
        if (offsets.size() != strips_per_band * spp) throw IoError(path + ": planar strip count mismatch");
        for (std::uint32_t c = 0; c < spp; ++c) {
            std::uint32_t row = 0;
            for (std::size_t s = 0; s < strips_per_band; ++s) {
                const std::uint32_t rows_here = std::min(rows_per_strip, height - row);
                std::size_t off = offsets[c * strips_per_band + s];
                for (std::uint32_t i = 0; i < rows_here; ++i, ++row)
                    for (std::uint32_t j = 0; j < width; ++j, off += sample_bytes)
                        out.data.at3(static_cast<int>(c), static_cast<int>(row), static_cast<int>(j)) =
                            read_sample(off);
            }
        }
    } else {
        throw IoError(path + ": unknown planar configuration");
    }

    // preserve geo/GDAL tags verbatim
    for (const auto& e : entries) {
        switch (e.tag) {
            case 33550:
            case 33922:
            case 34264:
            case 34735:
            case 34736:
            case 34737:
            case 42112:
            case 42113: {
                TagBlob blob;
                blob.tag = e.tag;
                blob.type = e.type;
                blob.count = e.count;
                const std::size_t n = tiff_type_size(e.type) * e.count;
                blob.payload.assign(r.at(e.data_off, n), r.at(e.data_off, n) + n);
                if (r.big()) {
                    // normalize multi-byte payloads to little-endian
                    const std::size_t w = tiff_type_size(e.type);
                    if (w > 1)
                        for (std::size_t i = 0; i + w <= blob.payload.size(); i += w)
                            std::reverse(blob.payload.begin() + i, blob.payload.begin() + i + w);
                }
                out.geo_tags.push_back(std::move(blob));
                break;
            }
            default: break;
        }
    }
    return out;
}

inline void write_tiff(const std::string& path, const Raster& raster) {
    const int C = raster.bands(), H = raster.height(), W = raster.width();
    require_shape(C >= 1 && H >= 1 && W >= 1, "write_tiff: empty raster");
    const std::size_t sample_bytes = raster.source_type == PixelType::kU8    ? 1
                                     : raster.source_type == PixelType::kU16 ? 2
                                                                             : 4;
    std::vector<std::uint8_t> buf;
    auto put8 = [&](std::uint8_t v) { buf.push_back(v); };
    auto put16 = [&](std::uint16_t v) {
        put8(v & 0xff);
        put8(v >> 8);
    };
    auto put32 = [&](std::uint32_t v) {
        put16(v & 0xffff);
        put16(static_cast<std::uint16_t>(v >> 16));
    };

    // header; IFD offset patched later
    put8('I');
    put8('I');
    put16(42);
    put32(0);

    // pixel data: chunky, single strip
    const std::size_t strip_off = buf.size();
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < C; ++c) {
                const float v = raster.data.at3(c, i, j);
                if (raster.source_type == PixelType::kU8) {
                    const float cl = v < 0 ? 0 : (v > 255 ? 255 : v);
                    put8(static_cast<std::uint8_t>(cl + 0.5f));
                } else if (raster.source_type == PixelType::kU16) {
                    const float cl = v < 0 ? 0 : (v > 65535 ? 65535 : v);
                    put16(static_cast<std::uint16_t>(cl + 0.5f));
                } else {
                    std::uint32_t u;
                    std::memcpy(&u, &v, 4);
                    put32(u);
                }
            }
    const std::size_t strip_bytes = buf.size() - strip_off;

    struct PendingEntry {
        std::uint16_t tag, type;
        std::uint32_t count;
        std::vector<std::uint8_t> payload;  // raw little-endian
    };
    std::vector<PendingEntry> ents;
    auto add_shorts = [&](std::uint16_t tag, std::vector<std::uint16_t> vals) {
        PendingEntry e{tag, 3, static_cast<std::uint32_t>(vals.size()), {}};
        for (auto v : vals) {
            e.payload.push_back(v & 0xff);
            e.payload.push_back(v >> 8);
        }
        ents.push_back(std::move(e));
    };
    auto add_long = [&](std::uint16_t tag, std::uint32_t v) {
        PendingEntry e{tag, 4, 1, {static_cast<std::uint8_t>(v & 0xff), static_cast<std::uint8_t>((v >> 8) & 0xff),
                                   static_cast<std::uint8_t>((v >> 16) & 0xff),
                                   static_cast<std::uint8_t>(v >> 24)}};
        ents.push_back(std::move(e));
    };

    add_long(256, static_cast<std::uint32_t>(W));
    add_long(257, static_cast<std::uint32_t>(H));
    add_shorts(258, std::vector<std::uint16_t>(C, static_cast<std::uint16_t>(sample_bytes * 8)));
    add_shorts(259, {1});                                        // uncompressed
    add_shorts(262, {static_cast<std::uint16_t>(C >= 3 ? 2 : 1)});  // RGB or grayscale
    add_long(273, static_cast<std::uint32_t>(strip_off));
    add_shorts(277, {static_cast<std::uint16_t>(C)});
    add_long(278, static_cast<std::uint32_t>(H));
    add_long(279, static_cast<std::uint32_t>(strip_bytes));
    add_shorts(284, {1});
    add_shorts(339, std::vector<std::uint16_t>(
                        C, static_cast<std::uint16_t>(raster.source_type == PixelType::kF32 ? 3 : 1)));
    for (const auto& blob : raster.geo_tags) {
        PendingEntry e{blob.tag, blob.type, blob.count, blob.payload};
        ents.push_back(std::move(e));
    }
    std::sort(ents.begin(), ents.end(), [](const auto& a, const auto& b) { return a.tag < b.tag; });

    // out-of-line payloads
    std::vector<std::uint32_t> payload_off(ents.size(), 0);
    for (std::size_t i = 0; i < ents.size(); ++i)
        if (ents[i].payload.size() > 4) {
            if (buf.size() % 2) put8(0);  // word alignment
            payload_off[i] = static_cast<std::uint32_t>(buf.size());
            buf.insert(buf.end(), ents[i].payload.begin(), ents[i].payload.end());
        }

    if (buf.size() % 2) put8(0);
    const std::uint32_t ifd_off = static_cast<std::uint32_t>(buf.size());
    put16(static_cast<std::uint16_t>(ents.size()));
    for (std::size_t i = 0; i < ents.size(); ++i) {
        put16(ents[i].tag);
        put16(ents[i].type);
        put32(ents[i].count);
        if (ents[i].payload.size() > 4) {
            put32(payload_off[i]);
        } else {
            std::uint8_t inline4[4] = {0, 0, 0, 0};
            std::memcpy(inline4, ents[i].payload.data(), ents[i].payload.size());
            for (auto b : inline4) put8(b);
        }
    }
    put32(0);  // no next IFD

    buf[4] = ifd_off & 0xff;
    buf[5] = (ifd_off >> 8) & 0xff;
    buf[6] = (ifd_off >> 16) & 0xff;
    buf[7] = (ifd_off >> 24) & 0xff;
    detail::write_file(path, buf);
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t crc32_of(const std::uint8_t* p, std::size_t n, std::uint32_t seed = 0) {
    return static_cast<std::uint32_t>(::crc32(seed, p, static_cast<uInt>(n)));
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

inline Raster read_png(const std::string& path) {
    using namespace detail;
    const auto buf = read_file(path);
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (buf.size() < 8 || std::memcmp(buf.data(), sig, 8) != 0) throw IoError(path + ": not a PNG");

    std::size_t off = 8;
    std::uint32_t w = 0, h = 0;
    int channels = 0;
    std::vector<std::uint8_t> idat;
    auto rd32 = [&](std::size_t o) {
        return (std::uint32_t(buf[o]) << 24) | (std::uint32_t(buf[o + 1]) << 16) |
               (std::uint32_t(buf[o + 2]) << 8) | buf[o + 3];
    };
    while (off + 8 <= buf.size()) {
        const std::uint32_t len = rd32(off);
        const std::string type(reinterpret_cast<const char*>(buf.data() + off + 4), 4);
        if (off + 12 + len > buf.size()) throw IoError(path + ": truncated PNG");
        const std::uint8_t* data = buf.data() + off + 8;
        if (type == "IHDR") {
            w = rd32(off + 8);
            h = rd32(off + 12);
            const int depth = data[8], color = data[9], interlace = data[12];
            if (depth != 8) throw IoError(path + ": only 8-bit PNG supported");
            if (interlace != 0) throw IoError(path + ": interlaced PNG not supported");
            channels = color == 0 ? 1 : color == 2 ? 3 : color == 6 ? 4 : 0;
            if (channels == 0) throw IoError(path + ": unsupported PNG color type");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            break;
        }
        off += 12 + len;
    }
    if (!w || !h || idat.empty()) throw IoError(path + ": malformed PNG");

    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    std::vector<std::uint8_t> raw((stride + 1) * h);
    uLongf out_len = static_cast<uLongf>(raw.size());
    if (::uncompress(raw.data(), &out_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        out_len != raw.size())
        throw IoError(path + ": PNG inflate failed");

    // unfilter
    std::vector<std::uint8_t> img(stride * h);
    const int bpp = channels;
    for (std::uint32_t i = 0; i < h; ++i) {
        const std::uint8_t filter = raw[i * (stride + 1)];
        const std::uint8_t* src = raw.data() + i * (stride + 1) + 1;
        std::uint8_t* dst = img.data() + i * stride;
        const std::uint8_t* up = i ? img.data() + (i - 1) * stride : nullptr;
        for (std::size_t j = 0; j < stride; ++j) {
            const int a = j >= static_cast<std::size_t>(bpp) ? dst[j - bpp] : 0;
            const int b = up ? up[j] : 0;
            const int c = (up && j >= static_cast<std::size_t>(bpp)) ? up[j - bpp] : 0;
            int v = src[j];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw IoError(path + ": bad PNG filter");
            }
            dst[j] = static_cast<std::uint8_t>(v);
        }
    }

    Raster out;
    out.source_type = PixelType::kU8;
    out.data = Tensor<float>({channels, static_cast<int>(h), static_cast<int>(w)});
    for (std::uint32_t i = 0; i < h; ++i)
        for (std::uint32_t j = 0; j < w; ++j)
            for (int c = 0; c < channels; ++c)
                out.data.at3(c, static_cast<int>(i), static_cast<int>(j)) =
                    static_cast<float>(img[i * stride + j * channels + c]);
    return out;
}

/// Writes 8-bit gray (C=1) or RGB (C=3); values are clamped to [0,255].
inline void write_png(const std::string& path, const Raster& raster) {
    using namespace detail;
    const int C = raster.bands(), H = raster.height(), W = raster.width();
    if (C != 1 && C != 3) throw IoError("write_png: only 1- or 3-band rasters");

    const std::size_t stride = static_cast<std::size_t>(W) * C;
    std::vector<std::uint8_t> raw((stride + 1) * H);
    for (int i = 0; i < H; ++i) {
        raw[i * (stride + 1)] = 0;  // filter none
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < C; ++c) {
                const float v = raster.data.at3(c, i, j);
                const float cl = v < 0 ? 0 : (v > 255 ? 255 : v);
                raw[i * (stride + 1) + 1 + j * C + c] = static_cast<std::uint8_t>(cl + 0.5f);
            }
    }
    uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_cap);
    if (::compress2(comp.data(), &comp_cap, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("write_png: deflate failed");
    comp.resize(comp_cap);

    std::vector<std::uint8_t> buf;
    auto put32 = [&](std::uint32_t v) {
        buf.push_back(v >> 24);
        buf.push_back((v >> 16) & 0xff);
        buf.push_back((v >> 8) & 0xff);
        buf.push_back(v & 0xff);
    };
    auto chunk = [&](const char* type, const std::vector<std::uint8_t>& data) {
        put32(static_cast<std::uint32_t>(data.size()));
        const std::size_t start = buf.size();
        buf.insert(buf.end(), type, type + 4);
        buf.insert(buf.end(), data.begin(), data.end());
        put32(crc32_of(buf.data() + start, buf.size() - start));
    };
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    buf.insert(buf.end(), sig, sig + 8);
    std::vector<std::uint8_t> ihdr(13, 0);
    ihdr[0] = W >> 24;
    ihdr[1] = (W >> 16) & 0xff;
    ihdr[2] = (W >> 8) & 0xff;
    ihdr[3] = W & 0xff;
    ihdr[4] = H >> 24;
    ihdr[5] = (H >> 16) & 0xff;
    ihdr[6] = (H >> 8) & 0xff;
    ihdr[7] = H & 0xff;
    ihdr[8] = 8;                      // bit depth
    ihdr[9] = C == 1 ? 0 : 2;         // gray / rgb
    chunk("IHDR", ihdr);
    chunk("IDAT", comp);
    chunk("IEND", {});
    detail::write_file(path, buf);
}

// ---------------------------------------------------------------------------
// Format dispatch + mask conventions
// ---------------------------------------------------------------------------

inline bool has_ext(const std::string& path, const char* a, const char* b = nullptr) {
    auto ext = std::filesystem::path(path).extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext == a || (b && ext == b);
}

inline Raster read_raster(const std::string& path) {
    if (has_ext(path, ".png")) return read_png(path);
    if (has_ext(path, ".tif", ".tiff")) return read_tiff(path);
    throw IoError(path + ": unsupported raster format (use .tif/.tiff/.png)");
}

inline void write_raster(const std::string& path, const Raster& raster) {
    if (has_ext(path, ".png")) {
        write_png(path, raster);
        return;
    }
    if (has_ext(path, ".tif", ".tiff")) {
        write_tiff(path, raster);
        return;
    }
    throw IoError(path + ": unsupported raster format (use .tif/.tiff/.png)");
}

/// Single-band 8-bit mask {0,255} on disk -> {0,1} in memory.
inline Tensor<float> read_mask(const std::string& path) {
    Raster r = read_raster(path);
    if (r.bands() != 1) throw IoError(path + ": mask must be single-band");
    Tensor<float> out = r.data;
    for (auto& v : out.data) v = v >= 128.0f ? 1.0f : 0.0f;
    return out;
}

/// {0,1} in memory -> single-band 8-bit {0,255} on disk.
inline void write_mask(const std::string& path, const Tensor<float>& mask) {
    require_shape(mask.rank() == 3 && mask.dim(0) == 1, "write_mask: mask must be (1,H,W)");
    Raster r;
    r.source_type = PixelType::kU8;
    r.data = mask;
    for (auto& v : r.data.data) v = v != 0.0f ? 255.0f : 0.0f;
    write_raster(path, r);
}

}  // namespace fcdgan::io
