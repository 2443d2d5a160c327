#include "cgcv/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

namespace cgcv {

namespace {

// ---- little-endian primitives -----------------------------------------

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    std::vector<char> bytes;
    size_t pos = 0;
    std::string path;

    explicit Reader(const std::string& p) : path(p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw FormatError(p + ": cannot open");
        in.seekg(0, std::ios::end);
        bytes.resize(static_cast<size_t>(in.tellg()));
        in.seekg(0);
        in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }

    void need(size_t n, const char* what) const {
        if (pos + n > bytes.size())
            throw FormatError(path + ": truncated " + what + " (need " +
                              std::to_string(n) + " bytes at offset " +
                              std::to_string(pos) + ", file has " +
                              std::to_string(bytes.size()) + ")");
    }

    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        return v;  // host is little-endian; payload defined little-endian
    }

    float f32(const char* what) {
        const uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    void raw(void* dst, size_t n, const char* what) {
        need(n, what);
        std::memcpy(dst, bytes.data() + pos, n);
        pos += n;
    }
};

// write-to-temp-then-rename so partially written files never land
void atomic_write(const std::string& path, const std::string& payload) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError(path + ": cannot open for writing");
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) throw FormatError(path + ": write failed");
    }
    std::filesystem::rename(tmp, path);
}

// ---- PNG helpers --------------------------------------------------------

uint32_t crc32_of(std::span<const uint8_t> data, uint32_t crc = 0xffffffffu) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t n = 0; n < 256; ++n) {
            uint32_t c = n;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            table[n] = c;
        }
        init = true;
    }
    for (uint8_t b : data) crc = table[(crc ^ b) & 0xff] ^ (crc >> 8);
    return crc;
}

void put_u32_be(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
    put_u32_be(out, static_cast<uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    out += body;
    const uint32_t crc =
        crc32_of({reinterpret_cast<const uint8_t*>(body.data()), body.size()}) ^
        0xffffffffu;
    put_u32_be(out, crc);
}

}  // namespace

// ---- images ---------------------------------------------------------------

FeatureMap<float> read_image(const std::string& path) {
    Reader r(path);
    auto token = [&]() -> std::string {
        // skip whitespace and '#' comments
        while (r.pos < r.bytes.size()) {
            const char c = r.bytes[r.pos];
            if (c == '#') {
                while (r.pos < r.bytes.size() && r.bytes[r.pos] != '\n') ++r.pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++r.pos;
            } else {
                break;
            }
        }
        std::string t;
        while (r.pos < r.bytes.size() && !std::isspace(
                   static_cast<unsigned char>(r.bytes[r.pos])))
            t.push_back(r.bytes[r.pos++]);
        if (t.empty()) throw FormatError(path + ": truncated header");
        return t;
    };

    const std::string magic = token();
    if (magic != "P5" && magic != "P6")
        throw FormatError(path + ": bad magic '" + magic + "' (want P5 or P6)");
    const int channels = magic == "P6" ? 3 : 1;
    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(token());
        h = std::stol(token());
        maxval = std::stol(token());
    } catch (const std::exception&) {
        throw FormatError(path + ": non-numeric header field");
    }
    if (w <= 0 || h <= 0) throw FormatError(path + ": bad dimensions");
    if (maxval <= 0 || maxval > 255)
        throw FormatError(path + ": unsupported maxval " + std::to_string(maxval));
    ++r.pos;  // single whitespace after maxval

    const size_t payload = static_cast<size_t>(w) * h * channels;
    std::vector<uint8_t> raw(payload);
    r.raw(raw.data(), payload, "pixel payload");

    FeatureMap<float> img(3, static_cast<int>(h), static_cast<int>(w));
    const float scale = 1.0f / static_cast<float>(maxval);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t base = (static_cast<size_t>(y) * w + x) * channels;
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) =
                    scale * raw[base + (channels == 3 ? c : 0)];
        }
    return img;
}

void write_ppm(const FeatureMap<float>& img, const std::string& path) {
    if (img.channels != 3) throw DimensionError("write_ppm: need 3 channels");
    std::string out = "P6\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.plane_size() * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
                out.push_back(static_cast<char>(
                    static_cast<int>(v * 255.0f + 0.5f)));
            }
    atomic_write(path, out);
}

void write_pgm(std::span<const uint8_t> gray, int height, int width,
               const std::string& path) {
    if (gray.size() != static_cast<size_t>(height) * width)
        throw DimensionError("write_pgm: payload size mismatch");
    std::string out = "P5\n" + std::to_string(width) + " " +
                      std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(gray.data()), gray.size());
    atomic_write(path, out);
}

void write_png_rgb(std::span<const uint8_t> rgb, int height, int width,
                   const std::string& path) {
    if (rgb.size() != static_cast<size_t>(height) * width * 3)
        throw DimensionError("write_png_rgb: payload size mismatch");

    std::string png("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    put_u32_be(ihdr, static_cast<uint32_t>(width));
    put_u32_be(ihdr, static_cast<uint32_t>(height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // truecolor
    ihdr.push_back(0);   // deflate
    ihdr.push_back(0);   // adaptive filtering
    ihdr.push_back(0);   // no interlace
    put_chunk(png, "IHDR", ihdr);

    // raw scanlines, filter byte 0 per row
    std::string raw;
    raw.reserve(static_cast<size_t>(height) * (1 + 3 * width));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        raw.append(reinterpret_cast<const char*>(rgb.data() +
                                                 static_cast<size_t>(y) * width * 3),
                   static_cast<size_t>(width) * 3);
    }

    // zlib stream of stored (uncompressed) deflate blocks
    std::string idat;
    idat.push_back(0x78);
    idat.push_back(0x01);
    size_t off = 0;
    while (off < raw.size()) {
        const size_t block = std::min<size_t>(raw.size() - off, 65535);
        const bool last = off + block == raw.size();
        idat.push_back(last ? 1 : 0);
        idat.push_back(static_cast<char>(block & 0xff));
        idat.push_back(static_cast<char>((block >> 8) & 0xff));
        idat.push_back(static_cast<char>(~block & 0xff));
        idat.push_back(static_cast<char>((~block >> 8) & 0xff));
        idat.append(raw, off, block);
        off += block;
    }
    uint32_t a = 1, b = 0;
    for (unsigned char c : raw) {
        a = (a + c) % 65521;
        b = (b + a) % 65521;
    }
    put_u32_be(idat, (b << 16) | a);
    put_chunk(png, "IDAT", idat);
    put_chunk(png, "IEND", "");
    atomic_write(path, png);
}

// ---- flow files -------------------------------------------------------------

void write_flo(const FlowField<float>& flow, const std::string& path) {
    for (size_t n = 0; n < flow.size(); ++n)
        if (!std::isfinite(flow.u[n]) || !std::isfinite(flow.v[n]))
            throw EvaluationError("write_flo: flow contains NaN/Inf");
    std::string out;
    out.reserve(12 + flow.size() * 8);
    put_f32(out, kFloMagic);
    put_u32(out, static_cast<uint32_t>(flow.width));
    put_u32(out, static_cast<uint32_t>(flow.height));
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            put_f32(out, flow.u_at(x, y));
            put_f32(out, flow.v_at(x, y));
        }
    atomic_write(path, out);
}

FlowField<float> read_flo(const std::string& path) {
    Reader r(path);
    const float magic = r.f32("magic");
    if (magic != kFloMagic)
        throw FormatError(path + ": bad .flo magic " + std::to_string(magic));
    const int w = static_cast<int>(r.u32("width"));
    const int h = static_cast<int>(r.u32("height"));
    if (w <= 0 || h <= 0) throw FormatError(path + ": bad .flo dims");
    FlowField<float> flow(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            flow.u_at(x, y) = r.f32("flow payload");
            flow.v_at(x, y) = r.f32("flow payload");
        }
    return flow;
}

// ---- volume dump --------------------------------------------------------------

void write_volume(const CorrVolume4<float>& v, const std::string& path) {
    std::string out("CGCV", 4);
    put_u32(out, kVolumeVersion);
    put_u32(out, static_cast<uint32_t>(v.h1));
    put_u32(out, static_cast<uint32_t>(v.w1));
    put_u32(out, static_cast<uint32_t>(v.h2));
    put_u32(out, static_cast<uint32_t>(v.w2));
    for (float x : v.data) put_f32(out, x);
    atomic_write(path, out);
}

CorrVolume4<float> read_volume(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.raw(magic, 4, "magic");
    if (std::memcmp(magic, "CGCV", 4) != 0)
        throw FormatError(path + ": bad volume magic");
    const uint32_t version = r.u32("version");
    if (version != kVolumeVersion)
        throw FormatError(path + ": unsupported volume version " +
                          std::to_string(version));
    const int h1 = static_cast<int>(r.u32("h1"));
    const int w1 = static_cast<int>(r.u32("w1"));
    const int h2 = static_cast<int>(r.u32("h2"));
    const int w2 = static_cast<int>(r.u32("w2"));
    CorrVolume4<float> v(h1, w1, h2, w2);
    r.raw(v.data.data(), v.data.size() * 4, "volume payload");
    return v;
}

// ---- checkpoints ----------------------------------------------------------------

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
    auto refs = param_refs(const_cast<Model<T>&>(model));
    std::string out("CGCK", 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<uint32_t>(refs.size()));
    for (const auto& ref : refs) {
        put_u32(out, static_cast<uint32_t>(ref.name.size()));
        out += ref.name;
        put_u32(out, static_cast<uint32_t>(ref.dims.size()));
        for (uint32_t d : ref.dims) put_u32(out, d);
        for (size_t n = 0; n < ref.size; ++n)
            put_f32(out, static_cast<float>(ref.data[n]));
    }
    atomic_write(path, out);
}

namespace {

struct StoredTensor {
    std::vector<uint32_t> dims;
    std::vector<float> data;
};

std::map<std::string, StoredTensor> read_tensor_table(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.raw(magic, 4, "magic");
    if (std::memcmp(magic, "CGCK", 4) != 0)
        throw FormatError(path + ": bad checkpoint magic");
    const uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw FormatError(path + ": unsupported checkpoint version " +
                          std::to_string(version));
    const uint32_t count = r.u32("tensor count");
    std::map<std::string, StoredTensor> table;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = r.u32("name length");
        std::string name(name_len, '\0');
        r.raw(name.data(), name_len, "name");
        StoredTensor t;
        const uint32_t rank = r.u32("rank");
        size_t total = 1;
        for (uint32_t k = 0; k < rank; ++k) {
            t.dims.push_back(r.u32("dim"));
            total *= t.dims.back();
        }
        t.data.resize(total);
        r.raw(t.data.data(), total * 4, "tensor payload");
        table.emplace(std::move(name), std::move(t));
    }
    return table;
}

}  // namespace

template <typename T>
Model<T> load_checkpoint(const std::string& path, GateMode mode, bool lift,
                         int radius, int levels, int iterations, uint32_t seed) {
    auto table = read_tensor_table(path);
    auto dims_of = [&](const std::string& name) -> const std::vector<uint32_t>& {
        auto it = table.find(name);
        if (it == table.end())
            throw FormatError(path + ": checkpoint missing tensor '" + name + "'");
        return it->second.dims;
    };

    ModelConfig cfg;
    const auto& c1 = dims_of("match_enc.conv1.weight");  // {h0, 3, k, k}
    const auto& c3m = dims_of("match_enc.conv3.weight");
    const auto& c3c = dims_of("ctx_enc.conv3.weight");
    const auto& wq = dims_of("gate.wq");
    const auto& wz = dims_of("gru.wz.weight");
    cfg.enc_hidden = {static_cast<int>(c1[0]), static_cast<int>(c3m[1])};
    cfg.enc_ksize = static_cast<int>(c1[2]);
    cfg.match_channels = static_cast<int>(c3m[0]);
    cfg.context_channels = static_cast<int>(c3c[0]);
    cfg.qk_channels = static_cast<int>(wq[0]);
    cfg.radius = radius;
    cfg.levels = levels;
    cfg.iterations = iterations;
    cfg.gate_mode = mode;
    cfg.lift_enabled = lift;
    cfg.seed = seed;

    const int t = cfg.net_channels();
    const int stored_in = static_cast<int>(wz[1]);
    const int corr_len = stored_in - 2 * t - 4;
    if (cfg.corr_length() != corr_len)
        throw DimensionError(
            path + ": checkpoint was trained for a lookup of " +
            std::to_string(corr_len) + " correlation channels, but radius " +
            std::to_string(radius) + " / levels " + std::to_string(levels) +
            " give " + std::to_string(cfg.corr_length()) +
            " (pass the --radius/--levels the checkpoint was trained with)");

    Model<T> model = make_model<T>(cfg);
    auto refs = param_refs(model);
    if (refs.size() != table.size())
        throw FormatError(path + ": checkpoint has " +
                          std::to_string(table.size()) + " tensors, expected " +
                          std::to_string(refs.size()));
    for (auto& ref : refs) {
        auto it = table.find(ref.name);
        if (it == table.end())
            throw FormatError(path + ": checkpoint missing tensor '" + ref.name +
                              "'");
        if (it->second.dims != ref.dims)
            throw FormatError(path + ": tensor '" + ref.name +
                              "' has unexpected shape");
        for (size_t n = 0; n < ref.size; ++n)
            ref.data[n] = static_cast<T>(it->second.data[n]);
    }
    return model;
}

template void save_checkpoint<float>(const Model<float>&, const std::string&);
template void save_checkpoint<double>(const Model<double>&, const std::string&);
template Model<float> load_checkpoint<float>(const std::string&, GateMode, bool,
                                             int, int, int, uint32_t);
template Model<double> load_checkpoint<double>(const std::string&, GateMode,
                                               bool, int, int, int, uint32_t);

}  // namespace cgcv
