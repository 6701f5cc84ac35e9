#include "risklab/snapshot_io.hpp"

#include "risklab/checksum.hpp"
#include "risklab/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace risklab {

namespace {

constexpr char kMagic[8] = {'R', 'L', 'L', 'S', 'N', 'A', 'P', '1'};

void put_u16(std::string& b, std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xFF));
    b.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& b, double x) {
    const auto u = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

struct Cursor {
    const std::string& bytes;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n, const char* what) const {
        if (pos + n > bytes.size()) {
            throw UsageError(path + ": truncated snapshot (" + what + ")");
        }
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        pos += 2;
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        pos += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) |
               (static_cast<std::uint32_t>(p[3]) << 24);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t u = 0;
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(u);
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

bool is_running_stat(const std::string& name) {
    return name.ends_with(".running_mean") || name.ends_with(".running_var");
}

} // namespace

void save_snapshot(const WeightSnapshot& snap, const std::string& path) {
    std::string buf;
    buf.append(kMagic, sizeof(kMagic));
    put_u32(buf, static_cast<std::uint32_t>(snap.arrays().size()));
    if (snap.arrays().empty() && snap.metadata.empty()) {
        // canonical empty snapshot: header + count, nothing else
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot write file: " + path);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw UsageError("short write on " + path);
        return;
    }
    for (const auto& a : snap.arrays()) {
        if (a.name.size() > 0xFFFF) throw UsageError("array name too long: " + a.name);
        if (a.value.rank() > 8) throw UsageError("array rank above 8: " + a.name);
        put_u16(buf, static_cast<std::uint16_t>(a.name.size()));
        buf.append(a.name);
        buf.push_back(static_cast<char>(a.value.rank()));
        for (std::size_t d : a.value.shape()) {
            put_u32(buf, static_cast<std::uint32_t>(d));
        }
        for (double v : a.value.values()) put_f64(buf, v);
    }
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : snap.metadata) meta[k] = v;
    const std::string mjson = meta.dump();
    put_u32(buf, static_cast<std::uint32_t>(mjson.size()));
    buf.append(mjson);
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write file: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw UsageError("short write on " + path);
}

WeightSnapshot load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw UsageError("cannot read file: " + path);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::string bytes(size, '\0');
    if (!in.read(bytes.data(), static_cast<std::streamsize>(size))) {
        throw UsageError("short read on " + path);
    }

    if (size < sizeof(kMagic) + 4) {
        throw UsageError(path + ": truncated snapshot (header)");
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw UsageError(path + ": not a snapshot file (bad magic)");
    }
    if (size == sizeof(kMagic) + 4) {
        Cursor head{bytes, sizeof(kMagic), path};
        if (head.u32("array count") != 0) {
            throw UsageError(path + ": truncated snapshot (arrays)");
        }
        return WeightSnapshot{};
    }
    if (size < sizeof(kMagic) + 4 + 4 + 4) {
        throw UsageError(path + ": truncated snapshot (header)");
    }
    {
        Cursor tail{bytes, size - 4, path};
        const std::uint32_t trailer = tail.u32("checksum");
        const std::uint32_t actual = crc32(bytes.data(), size - 4);
        if (trailer != actual) {
            throw UsageError(path + ": checksum mismatch (file is corrupt)");
        }
    }

    Cursor cur{bytes, sizeof(kMagic), path};
    const std::uint32_t count = cur.u32("array count");
    WeightSnapshot snap;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t namelen = cur.u16("name length");
        const std::string name = cur.str(namelen, "name");
        const std::uint8_t rank = cur.u8("rank");
        if (rank > 8) throw UsageError(path + ": array rank above 8: " + name);
        std::vector<std::size_t> shape(rank);
        std::size_t total = 1;
        for (std::uint8_t r = 0; r < rank; ++r) {
            shape[r] = cur.u32("dimension");
            if (shape[r] == 0 || total > (1u << 30) / std::max<std::size_t>(shape[r], 1)) {
                throw UsageError(path + ": implausible dimensions on " + name);
            }
            total *= shape[r];
        }
        if (rank == 0) total = 1;
        Tensor t(shape);
        for (std::size_t k = 0; k < total; ++k) t[k] = cur.f64("values");
        snap.add({name, std::move(t), !is_running_stat(name)});
    }

    const std::uint32_t mlen = cur.u32("metadata length");
    const std::string mjson = cur.str(mlen, "metadata");
    if (cur.pos != size - 4) {
        throw UsageError(path + ": trailing bytes after metadata");
    }
    if (mlen > 0) {
        nlohmann::json meta = nlohmann::json::parse(mjson, nullptr, false);
        if (meta.is_discarded() || !meta.is_object()) {
            throw UsageError(path + ": metadata is not a JSON object");
        }
        for (const auto& [k, v] : meta.items()) {
            snap.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    return snap;
}

std::vector<std::string> list_snapshots(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".snap") {
            out.push_back(e.path().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace risklab
