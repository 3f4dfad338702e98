#include "gcat/checkpoint.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gcat/errors.hpp"

namespace gcat {

namespace {

constexpr char kMagic[8] = {'G', 'C', 'A', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }
    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n, const char* what) const {
        if (!has(n)) throw ShapeError(std::string("checkpoint: truncated ") + what);
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const char* stage_name(StageTag tag) {
    switch (tag) {
        case StageTag::transe: return "transe";
        case StageTag::encoder: return "encoder";
        case StageTag::decoder: return "decoder";
    }
    return "unknown";
}

std::size_t ParamBlock::expected_count() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void Checkpoint::add(std::string name, const Matrix& m) {
    ParamBlock b;
    b.name = std::move(name);
    b.shape = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    b.values.reserve(m.size());
    for (double x : m.values()) b.values.push_back(static_cast<float>(x));
    blocks.push_back(std::move(b));
}

const ParamBlock& Checkpoint::block(const std::string& name) const {
    for (const auto& b : blocks) {
        if (b.name == name) return b;
    }
    throw FormatError("checkpoint: missing block '" + name + "'");
}

Matrix Checkpoint::matrix(const std::string& name) const {
    const auto& b = block(name);
    std::size_t rows = 1, cols = 1;
    if (b.shape.size() == 2) {
        rows = b.shape[0];
        cols = b.shape[1];
    } else if (b.shape.size() == 1) {
        cols = b.shape[0];
    } else {
        throw ShapeError("checkpoint: block '" + name + "' is not a matrix");
    }
    std::vector<double> data(b.values.begin(), b.values.end());
    return Matrix(rows, cols, std::move(data));
}

bool bit_equal(const Checkpoint& a, const Checkpoint& b) {
    if (a.format_version != b.format_version || a.stage != b.stage ||
        a.blocks.size() != b.blocks.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        const auto& x = a.blocks[i];
        const auto& y = b.blocks[i];
        if (x.name != y.name || x.shape != y.shape || x.values.size() != y.values.size()) {
            return false;
        }
        if (!x.values.empty() &&
            std::memcmp(x.values.data(), y.values.data(), x.values.size() * sizeof(float)) != 0) {
            return false;
        }
    }
    return true;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    const std::size_t chunk = 1u << 30;
    for (std::size_t off = 0; off < bytes.size(); off += chunk) {
        auto n = std::min(chunk, bytes.size() - off);
        crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, ckpt.format_version);
    out.push_back(static_cast<std::uint8_t>(ckpt.stage));
    put_u32(out, static_cast<std::uint32_t>(ckpt.blocks.size()));
    for (const auto& b : ckpt.blocks) {
        if (b.values.size() != b.expected_count()) {
            throw ShapeError("checkpoint: block '" + b.name + "' shape does not match values");
        }
        put_u32(out, static_cast<std::uint32_t>(b.name.size()));
        out.insert(out.end(), b.name.begin(), b.name.end());
        put_u32(out, static_cast<std::uint32_t>(b.shape.size()));
        for (auto d : b.shape) put_u32(out, d);
        for (float f : b.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    put_u32(out, crc32_of(out));
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("checkpoint: bad magic");
    }
    if (bytes.size() < sizeof(kMagic) + 4) throw ChecksumError("checkpoint: missing checksum");
    auto body = bytes.first(bytes.size() - 4);
    Reader crc_reader(bytes.last(4));
    if (crc_reader.u32("checksum") != crc32_of(body)) {
        throw ChecksumError("checkpoint: CRC-32 mismatch");
    }

    Reader r(body);
    r.take(sizeof(kMagic), "magic");
    Checkpoint ckpt;
    ckpt.format_version = r.u32("format version");
    if (ckpt.format_version != Checkpoint::kFormatVersion) {
        throw FormatError("checkpoint: unsupported format version " +
                          std::to_string(ckpt.format_version));
    }
    auto tag = r.u8("stage tag");
    if (tag > static_cast<std::uint8_t>(StageTag::decoder)) {
        throw FormatError("checkpoint: unknown stage tag " + std::to_string(tag));
    }
    ckpt.stage = static_cast<StageTag>(tag);
    auto count = r.u32("block count");
    for (std::uint32_t i = 0; i < count; ++i) {
        ParamBlock b;
        auto name_len = r.u32("name length");
        auto name = r.take(name_len, "name");
        b.name.assign(name.begin(), name.end());
        auto rank = r.u32("rank");
        if (!r.has(std::size_t{rank} * 4)) throw ShapeError("checkpoint: truncated dimensions");
        for (std::uint32_t k = 0; k < rank; ++k) b.shape.push_back(r.u32("dimension"));
        auto n = b.expected_count();
        if (r.remaining() / 4 < n) {
            throw ShapeError("checkpoint: block '" + b.name + "' declares " + std::to_string(n) +
                             " values but only " + std::to_string(r.remaining() / 4) +
                             " remain");
        }
        b.values.reserve(n);
        for (std::size_t k = 0; k < n; ++k) b.values.push_back(std::bit_cast<float>(r.u32("value")));
        ckpt.blocks.push_back(std::move(b));
    }
    if (r.remaining() != 0) throw ShapeError("checkpoint: trailing bytes after last block");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    auto bytes = encode_checkpoint(ckpt);
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    std::size_t written = 0;
    while (written < bytes.size()) {
        auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            throw IoError("write failed for " + path.string() + ": " + std::strerror(err));
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        int err = errno;
        ::close(fd);
        throw IoError("fsync failed for " + path.string() + ": " + std::strerror(err));
    }
    if (::close(fd) != 0) throw IoError("close failed for " + path.string());
}

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    auto bytes = read_all(path);
    return decode_checkpoint(bytes);
}

std::string file_crc32_hex(const std::filesystem::path& path) {
    auto bytes = read_all(path);
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", crc32_of(bytes));
    return buf;
}

}  // namespace gcat
